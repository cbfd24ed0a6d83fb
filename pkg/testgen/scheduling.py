"""
Scheduling Graph
Directed acyclic graph of scenario instances built from a system test schedule

Sequential composition chains the exit instances of one item to the entry
instances of the next; parallel composition makes siblings reachable from a
common predecessor. A virtual start node roots schedules with several entries.
"""
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from engine.evaluator import RuntimeFault, eval_expr
from models.specification import (
    Expr, InstanceDecl, Literal, SchedLeaf, SchedPar, SchedRef, SchedReplicate, SchedSeq,
    ScheduleExpr, Specification, substitute,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)

VIRTUAL_ROOT = "<start>"


class SchedulingError(Exception):
    """Cycle, unknown reference or dangling node in a scheduling graph"""


@dataclass
class SchedNode:
    """
    One scenario instance of the schedule.

    Attributes:
        id: Instance id, e.g. Approach3 or gpsGlitch
        scenario: Scenario type name (empty for the virtual root)
        args: Positional argument expressions with replication indices substituted
        bindings: Named parameter bindings (declared instances)
        index: Replication index, None outside a replication
    """
    id: str
    scenario: str
    args: Tuple[Expr, ...] = ()
    bindings: Tuple[Tuple[str, Expr], ...] = ()
    index: Optional[int] = None
    virtual: bool = False


@dataclass
class SchedulingGraph:
    nodes: "OrderedDict[str, SchedNode]" = field(default_factory=OrderedDict)
    edges: Dict[str, List[str]] = field(default_factory=dict)
    root: Optional[str] = None

    def add_node(self, node: SchedNode) -> SchedNode:
        if node.id in self.nodes:
            raise SchedulingError(f"duplicate scheduling node '{node.id}'")
        self.nodes[node.id] = node
        self.edges.setdefault(node.id, [])
        return node

    def add_edge(self, src: str, dst: str):
        if src not in self.nodes or dst not in self.nodes:
            raise SchedulingError(f"edge {src} -> {dst} references an unknown node")
        if dst not in self.edges[src]:
            self.edges[src].append(dst)

    def successors(self, node_id: str) -> List[str]:
        return list(self.edges.get(node_id, []))

    def predecessors(self, node_id: str) -> List[str]:
        return [src for src, dsts in self.edges.items() if node_id in dsts]

    @property
    def sinks(self) -> List[str]:
        return [n for n in self.nodes if not self.edges.get(n)]

    @property
    def instances(self) -> List[SchedNode]:
        return [n for n in self.nodes.values() if not n.virtual]

    def validate(self) -> Tuple[bool, str]:
        """(ok, reason): acyclic, root reaches every node"""
        if self.root is None:
            return (not self.nodes, "graph has no root")
        state: Dict[str, int] = {}

        def visit(n: str) -> Optional[str]:
            state[n] = 1
            for m in self.edges.get(n, []):
                if state.get(m) == 1:
                    return f"cycle through '{m}'"
                if m not in state:
                    problem = visit(m)
                    if problem:
                        return problem
            state[n] = 2
            return None

        problem = visit(self.root)
        if problem:
            return False, problem
        for n in self.nodes:
            if n not in state:
                # unreachable nodes may still hide a cycle
                problem = visit(n)
                return False, problem or f"node '{n}' is not reachable from '{self.root}'"
        return True, ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'root': self.root,
            'nodes': [n.id for n in self.nodes.values()],
            'edges': [[src, dst] for src, dsts in self.edges.items() for dst in dsts],
            'sinks': self.sinks,
        }


# ════════════════════════════════════════════════════════
# CONSTRUCTION
# ════════════════════════════════════════════════════════

class _Builder:
    def __init__(self, spec: Specification, consts: Mapping[str, Any]):
        self.spec = spec
        self.consts = consts
        self.graph = SchedulingGraph()
        self.used: Dict[str, int] = {}

    def fresh_id(self, base: str) -> str:
        count = self.used.get(base, 0) + 1
        self.used[base] = count
        return base if count == 1 else f"{base}_{count}"

    def build(self, expr: ScheduleExpr, env: Dict[str, int]) -> Tuple[List[str], List[str]]:
        """(entry ids, exit ids) of a schedule expression"""
        if isinstance(expr, SchedLeaf):
            index = env.get("__index__")
            base = f"{expr.scenario}{index + 1}" if index is not None else expr.scenario
            args = tuple(self._bind(a, env) for a in expr.args)
            node = self.graph.add_node(SchedNode(self.fresh_id(base), expr.scenario, args, index=index))
            return [node.id], [node.id]
        if isinstance(expr, SchedRef):
            decl = self.spec.instance(expr.name)
            if decl is None:
                raise SchedulingError(f"unknown instance '{expr.name}'")
            node = self.graph.add_node(self._declared(decl, env))
            return [node.id], [node.id]
        if isinstance(expr, SchedSeq):
            entries, exits = None, []
            for item in expr.items:
                item_entries, item_exits = self.build(item, env)
                for src in exits:
                    for dst in item_entries:
                        self.graph.add_edge(src, dst)
                if entries is None:
                    entries = item_entries
                exits = item_exits
            return entries or [], exits
        if isinstance(expr, SchedPar):
            entries, exits = [], []
            for branch in expr.branches:
                e, x = self.build(branch, env)
                entries += e
                exits += x
            return entries, exits
        if isinstance(expr, SchedReplicate):
            lo = self._int(expr.lo, env)
            hi = self._int(expr.hi, env)
            entries, exits = [], []
            for i in range(lo, hi + 1):
                inner = dict(env)
                inner[expr.var] = i
                inner["__index__"] = i
                e, x = self.build(expr.body, inner)
                entries += e
                exits += x
            return entries, exits
        raise SchedulingError(f"unknown schedule node {type(expr).__name__}")

    def _declared(self, decl: InstanceDecl, env: Dict[str, int]) -> SchedNode:
        bindings = tuple((name, self._bind(e, env)) for name, e in decl.bindings)
        return SchedNode(self.fresh_id(decl.name), decl.scenario, bindings=bindings)

    def _bind(self, expr: Expr, env: Dict[str, int]) -> Expr:
        mapping = {k: Literal(v) for k, v in env.items() if not k.startswith("__")}
        return substitute(expr, mapping)

    def _int(self, expr: Expr, env: Dict[str, int]) -> int:
        try:
            return int(eval_expr(expr, {}, self.consts, {k: v for k, v in env.items() if not k.startswith("__")},
                                 self.spec))
        except RuntimeFault as e:
            raise SchedulingError(f"replication bound: {e}")


def build_scheduling_graph(spec: Specification, consts: Mapping[str, Any]) -> SchedulingGraph:
    """
    Scheduling graph of the system test.

    Without a schedule, the top-level instance declarations run in parallel.
    Raises SchedulingError on a cycle or an unknown reference.
    """
    builder = _Builder(spec, consts)
    config = spec.systemtest
    if config is not None and config.schedule is not None:
        entries, _ = builder.build(config.schedule, {})
        declared = {n.id for n in builder.graph.nodes.values()}
        # declared instances not referenced by the schedule run alongside it
        extra = [d for d in spec.instances if d.name not in declared]
        for decl in extra:
            node = builder.graph.add_node(builder._declared(decl, {}))
            entries.append(node.id)
    else:
        entries = []
        for decl in spec.instances:
            entries.append(builder.graph.add_node(builder._declared(decl, {})).id)

    graph = builder.graph
    if len(entries) == 1:
        graph.root = entries[0]
    elif entries:
        root = SchedNode(VIRTUAL_ROOT, "", virtual=True)
        graph.nodes[root.id] = root
        graph.nodes.move_to_end(root.id, last=False)
        graph.edges[root.id] = list(entries)
        graph.root = root.id

    ok, reason = graph.validate()
    if not ok:
        raise SchedulingError(reason)
    logger.info(f"Scheduling graph built: {len(graph.instances)} instances, {len(graph.sinks)} sinks")
    return graph


def enumerate_paths(graph: SchedulingGraph, max_paths: Optional[int] = None) -> List[List[str]]:
    """
    All root-to-sink paths in successor order (virtual root omitted).

    Raises SchedulingError if the graph has a cycle.
    """
    ok, reason = graph.validate()
    if not ok:
        raise SchedulingError(reason)
    if graph.root is None:
        return []
    paths: List[List[str]] = []

    def walk(node: str, prefix: List[str]):
        if max_paths is not None and len(paths) >= max_paths:
            return
        path = prefix if graph.nodes[node].virtual else prefix + [node]
        successors = graph.successors(node)
        if not successors:
            paths.append(path)
            return
        for nxt in successors:
            walk(nxt, path)

    walk(graph.root, [])
    return paths
