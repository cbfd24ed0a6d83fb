"""
Collaboration State
Live objects, interfaces and queued structural mutations of a system test run

Objects are addressed by path (coll.r[2], coll.cc). A deleted array slot keeps
its position and reads as null; created objects extend the array with null gaps.
Mutations queued during a tick are applied together at its end, sorted by
(tick, instance, order) so the result never depends on arrival order.
"""
import random
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from engine.evaluator import Env, RuntimeFault, eval_expr, reference, size_evaluator
from models.enums import FaultKind
from models.specification import (
    InterfaceDecl, ObjectInstanceDecl, ObjectTypeDecl, Param, Specification, TypeExpr,
)
from models.values import CollabRef, ObjectRef, default_value
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class InterfaceLink:
    """A live connection from an out parameter to an in parameter"""
    id: str
    source: str
    target: str
    source_object: str
    target_object: str

    def to_dict(self) -> Dict[str, str]:
        return {'id': self.id, 'from': self.source, 'to': self.target}


@dataclass(order=True)
class Mutation:
    """
    A structural change requested by a scenario action.

    Attributes:
        tick: Tick in which the action ran
        instance: Requesting scenario instance
        order: Position among the instance's requests of that tick
        kind: delete, create_object or create_interface
        target: Object path or interface id
        payload: Kind-specific details (type name, endpoints)
    """
    tick: int
    instance: str
    order: int
    kind: str = field(compare=False, default="delete")
    target: str = field(compare=False, default="")
    payload: Dict[str, Any] = field(compare=False, default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tick': self.tick, 'instance': self.instance, 'order': self.order,
            'kind': self.kind, 'target': self.target, 'payload': dict(self.payload),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Mutation":
        return cls(data['tick'], data['instance'], data['order'], data['kind'],
                   data['target'], dict(data.get('payload') or {}))


def owner_of(symbol: str) -> str:
    """Object path owning a parameter symbol: coll.r[0].s -> coll.r[0]"""
    return symbol.rsplit(".", 1)[0]


def param_name_of(symbol: str) -> str:
    """Parameter name of a symbol: coll.cc.cmd[1] -> cmd"""
    return symbol.rsplit(".", 1)[1].split("[", 1)[0]


def parameter_type(spec: Specification, symbol: str) -> Optional[TypeExpr]:
    """Declared type of a parameter symbol (element type for array elements)"""
    if spec.systemtest is None:
        return None
    path = owner_of(symbol)
    member = path.split(".", 1)[-1].split("[", 1)[0]
    decl = next((o for o in spec.systemtest.collaboration.objects if o.name == member), None)
    obj = spec.object_type(decl.type_name) if decl is not None else None
    param = obj.param(param_name_of(symbol)) if obj is not None else None
    if param is None:
        return None
    t = spec.resolve_type(param.type)
    if symbol.endswith("]") and t.kind == "array":
        return t.elem
    return param.type


class CollaborationState:
    """
    Runtime state of the collaboration.

    Features:
    - Object handles per member (tuples with null slots for arrays)
    - Interface instantiation from declarations with index ranges
    - Deterministic application of queued mutations
    - Idempotent delete; create into an occupied slot is an error
    """

    def __init__(self, spec: Specification, consts: Mapping[str, Any]):
        config = spec.systemtest
        if config is None:
            raise ValueError("specification has no system test configuration")
        self.spec = spec
        self.consts = dict(consts)
        self.decl = config.collaboration
        self.name = self.decl.name
        self.size_of = size_evaluator(self.consts, spec)
        self.members: Dict[str, ObjectInstanceDecl] = {o.name: o for o in self.decl.objects}
        self.objects: "OrderedDict[str, Optional[ObjectRef]]" = OrderedDict()
        self.arrays: Dict[str, List[str]] = {}
        self.interfaces: "OrderedDict[str, InterfaceLink]" = OrderedDict()
        self.pending: List[Mutation] = []

        for member in self.decl.objects:
            if member.extent is None:
                path = f"{self.name}.{member.name}"
                self.objects[path] = ObjectRef(path, member.type_name)
            else:
                count = self.size_of(member.extent)
                self.arrays[member.name] = []
                for i in range(count):
                    path = f"{self.name}.{member.name}[{i}]"
                    self.objects[path] = ObjectRef(path, member.type_name)
                    self.arrays[member.name].append(path)
        for iface in self.decl.interfaces:
            for link in self._instantiate(iface):
                self.interfaces[link.id] = link
        logger.info(f"Collaboration {self.name}: {len(self.live_objects())} objects, "
                    f"{len(self.interfaces)} interfaces")

    # ════════════════════════════════════════════════════════
    # QUERIES
    # ════════════════════════════════════════════════════════

    def handles(self) -> Dict[str, Any]:
        """Valuation entries for the member handles, e.g. coll.r -> (ref, ref, None)"""
        result: Dict[str, Any] = {}
        for member in self.decl.objects:
            key = f"{self.name}.{member.name}"
            if member.name in self.arrays:
                result[key] = tuple(self.objects.get(p) for p in self.arrays[member.name])
            else:
                result[key] = self.objects.get(key)
        return result

    def live_objects(self) -> List[ObjectRef]:
        return [ref for ref in self.objects.values() if ref is not None]

    def is_live(self, path: str) -> bool:
        return self.objects.get(path) is not None

    def object_type(self, path: str) -> Optional[ObjectTypeDecl]:
        ref = self.objects.get(path)
        return self.spec.object_type(ref.type_name) if ref is not None else None

    def parameter_symbols(self, path: str) -> List[Tuple[str, Param, TypeExpr]]:
        """(symbol, parameter, element type) for every parameter of a live object"""
        decl = self.object_type(path)
        if decl is None:
            return []
        result = []
        for param in decl.params:
            t = self.spec.resolve_type(param.type)
            if t.kind == "array" and t.size is not None:
                for k in range(self.size_of(t.size)):
                    result.append((f"{path}.{param.name}[{k}]", param, t.elem))
            else:
                result.append((f"{path}.{param.name}", param, param.type))
        return result

    def initial_values(self, path: str) -> Dict[str, Any]:
        return {symbol: default_value(t, self.spec, self.size_of)
                for symbol, _, t in self.parameter_symbols(path)}

    # ════════════════════════════════════════════════════════
    # INTERFACES
    # ════════════════════════════════════════════════════════

    def _member_locals(self) -> Dict[str, Any]:
        handles = self.handles()
        locals_: Dict[str, Any] = {self.name: CollabRef(self.name)}
        for member in self.decl.objects:
            locals_[member.name] = handles[f"{self.name}.{member.name}"]
        return locals_

    def _instantiate(self, iface: InterfaceDecl) -> List[InterfaceLink]:
        locals_ = self._member_locals()
        if iface.var is None:
            bindings = [locals_]
        else:
            lo = eval_expr(iface.lo, {}, self.consts, spec=self.spec)
            hi = eval_expr(iface.hi, {}, self.consts, spec=self.spec)
            bindings = [dict(locals_, **{iface.var: i}) for i in range(int(lo), int(hi) + 1)]
        links = []
        for env_locals in bindings:
            env = Env({}, self.consts, env_locals, self.spec)
            link_id = iface.name
            if iface.index is not None:
                link_id = f"{iface.name}[{eval_expr(iface.index, {}, self.consts, env_locals, self.spec)}]"
            links.append(self._link(link_id, reference(iface.source, env), reference(iface.target, env)))
        return links

    def _link(self, link_id: str, source: str, target: str) -> InterfaceLink:
        for endpoint in (source, target):
            if not self.is_live(owner_of(endpoint)):
                raise RuntimeFault(FaultKind.DANGLING_ENDPOINT,
                                   f"interface {link_id} endpoint {endpoint} has no live object", endpoint)
        return InterfaceLink(link_id, source, target, owner_of(source), owner_of(target))

    # ════════════════════════════════════════════════════════
    # MUTATIONS
    # ════════════════════════════════════════════════════════

    def queue(self, mutation: Mutation):
        self.pending.append(mutation)

    def apply_pending(self, shuffle_seed: Optional[int] = None) -> List[Dict[str, Any]]:
        """
        Apply every queued mutation and return the resulting events.

        Args:
            shuffle_seed: Shuffle the arrival order first (stress mode); the
                applied order is the same either way
        """
        pending, self.pending = self.pending, []
        if shuffle_seed is not None:
            random.Random(shuffle_seed).shuffle(pending)
        events = []
        for mutation in sorted(pending):
            if mutation.kind == "delete":
                events.append(self.delete(mutation.target, mutation))
            elif mutation.kind == "create_object":
                events.append(self.create_object(mutation.payload['member'], mutation.payload.get('index'),
                                                 mutation.payload['type'], mutation))
            elif mutation.kind == "create_interface":
                events.append(self.create_interface(mutation.target, mutation.payload['from'],
                                                    mutation.payload['to'], mutation))
            else:
                raise RuntimeFault(FaultKind.ILLEGAL_SCHEDULE, f"unknown mutation '{mutation.kind}'")
        return events

    def delete(self, path: str, mutation: Optional[Mutation] = None) -> Dict[str, Any]:
        event = self._event("delete", path, mutation)
        if not self.is_live(path):
            event['noop'] = True
            logger.debug(f"delete of {path}: already gone")
            return event
        self.objects[path] = None
        removed = [i for i, link in self.interfaces.items()
                   if path in (link.source_object, link.target_object)]
        for link_id in removed:
            del self.interfaces[link_id]
        event['interfaces'] = removed
        logger.info(f"Object deleted: {path} ({len(removed)} interfaces removed)")
        return event

    def create_object(self, member: str, index: Optional[int], type_name: str,
                      mutation: Optional[Mutation] = None) -> Dict[str, Any]:
        decl = self.members.get(member)
        if decl is None:
            raise RuntimeFault(FaultKind.ILLEGAL_SCHEDULE, f"collaboration has no member '{member}'")
        if decl.type_name != type_name:
            raise RuntimeFault(FaultKind.TYPE_ERROR, f"{member} holds {decl.type_name}, not {type_name}")
        if member in self.arrays:
            if index is None or index < 0:
                raise RuntimeFault(FaultKind.INDEX_RANGE, f"create of {member} needs a slot index")
            slots = self.arrays[member]
            while len(slots) <= index:
                gap = f"{self.name}.{member}[{len(slots)}]"
                self.objects[gap] = None
                slots.append(gap)
            path = slots[index]
        else:
            path = f"{self.name}.{member}"
        if self.is_live(path):
            raise RuntimeFault(FaultKind.ILLEGAL_SCHEDULE, f"slot {path} is occupied", path)
        self.objects[path] = ObjectRef(path, type_name)
        logger.info(f"Object created: {path} : {type_name}")
        return self._event("create_object", path, mutation)

    def create_interface(self, link_id: str, source: str, target: str,
                         mutation: Optional[Mutation] = None) -> Dict[str, Any]:
        if link_id in self.interfaces:
            raise RuntimeFault(FaultKind.ILLEGAL_SCHEDULE, f"interface {link_id} already exists")
        link = self._link(link_id, source, target)
        self.interfaces[link_id] = link
        logger.info(f"Interface created: {link_id} {source} -> {target}")
        event = self._event("create_interface", link_id, mutation)
        event.update({'from': source, 'to': target})
        return event

    @staticmethod
    def _event(kind: str, target: str, mutation: Optional[Mutation]) -> Dict[str, Any]:
        event = {'kind': kind, 'target': target}
        if mutation is not None:
            event.update({'tick': mutation.tick, 'instance': mutation.instance})
        return event

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'objects': {path: (ref.type_name if ref else None) for path, ref in self.objects.items()},
            'interfaces': [link.to_dict() for link in self.interfaces.values()],
        }
