"""
Specification Data Model
Typed abstract syntax of an SCSL file: types, constants, functions, object types,
elementary scenario types, the system test configuration and instance declarations.

All nodes are frozen dataclasses. Source spans never take part in equality, so two
specifications compare equal exactly when they are structurally identical.
"""
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, Iterator, Optional, Tuple

from models.enums import Direction
from models.source import SourceSpan, NO_SPAN


def _span():
    return field(default=NO_SPAN, compare=False, repr=False)


# ════════════════════════════════════════════════════════
# TYPES
# ════════════════════════════════════════════════════════

PRIMITIVE_TYPES = ("bool", "int", "nat", "real", "string")


@dataclass(frozen=True)
class TypeExpr:
    """
    A type as written in the source.

    kind is one of bool, int, nat, real, string, named (enum, record alias or
    object type, resolved by the typechecker), record, array, list, set,
    collaboration.
    """
    kind: str
    name: Optional[str] = None
    elem: Optional["TypeExpr"] = None
    size: Optional["Expr"] = None
    fields: Tuple[Tuple[str, "TypeExpr"], ...] = ()
    span: SourceSpan = _span()

    @classmethod
    def primitive(cls, kind: str) -> "TypeExpr":
        return cls(kind)

    @classmethod
    def named(cls, name: str) -> "TypeExpr":
        return cls("named", name=name)


# ════════════════════════════════════════════════════════
# EXPRESSIONS
# ════════════════════════════════════════════════════════

class Expr:
    """Base class of expression nodes"""


@dataclass(frozen=True)
class Literal(Expr):
    value: Any                  # bool, int, float, str or None (null)
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Name(Expr):
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Field(Expr):
    base: Expr
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Index(Expr):
    base: Expr
    index: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: Tuple[Expr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Unary(Expr):
    op: str                     # ! - # min G F X
    operand: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SetLit(Expr):
    elements: Tuple[Expr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ListLit(Expr):
    elements: Tuple[Expr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class RecordLit(Expr):
    items: Tuple[Tuple[str, Expr], ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Range(Expr):
    """Inclusive integer range lo..hi (only inside binders)"""
    lo: Expr
    hi: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Comprehension(Expr):
    """
    Set builder.

    { i : lo..hi | pred }        elements = (i,), source = Range
    { a, b | i in S }            elements = (a, b), source = S
    """
    elements: Tuple[Expr, ...]
    var: str
    source: Expr
    predicate: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Forall(Expr):
    """Quantified conjunction over an integer range"""
    var: str
    lo: Expr
    hi: Expr
    body: Expr
    span: SourceSpan = _span()


TEMPORAL_UNARY = ("G", "F", "X")
TEMPORAL_BINARY = ("U",)
BOOLEAN_BINARY = ("&&", "||", "=>", "<=>")


def children(expr: Expr) -> Iterator[Expr]:
    """Direct sub-expressions of a node"""
    for f in fields(expr):
        if f.name == "span":
            continue
        value = getattr(expr, f.name)
        if isinstance(value, Expr):
            yield value
        elif isinstance(value, tuple):
            for item in value:
                if isinstance(item, Expr):
                    yield item
                elif isinstance(item, tuple):
                    for sub in item:
                        if isinstance(sub, Expr):
                            yield sub


def map_children(expr: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Rebuild a node with fn applied to each direct sub-expression"""
    changes = {}
    for f in fields(expr):
        if f.name == "span":
            continue
        value = getattr(expr, f.name)
        if isinstance(value, Expr):
            changes[f.name] = fn(value)
        elif isinstance(value, tuple) and value:
            mapped = []
            for item in value:
                if isinstance(item, Expr):
                    mapped.append(fn(item))
                elif isinstance(item, tuple):
                    mapped.append(tuple(fn(s) if isinstance(s, Expr) else s for s in item))
                else:
                    mapped.append(item)
            changes[f.name] = tuple(mapped)
    return replace(expr, **changes) if changes else expr


def substitute(expr: Expr, mapping: Dict[str, Expr]) -> Expr:
    """Replace free names, respecting comprehension and forall binders"""
    if not mapping:
        return expr
    if isinstance(expr, Name):
        return mapping.get(expr.name, expr)
    if isinstance(expr, Comprehension):
        inner = {k: v for k, v in mapping.items() if k != expr.var}
        return replace(
            expr,
            elements=tuple(substitute(e, inner) for e in expr.elements),
            source=substitute(expr.source, mapping),
            predicate=substitute(expr.predicate, inner) if expr.predicate else None,
        )
    if isinstance(expr, Forall):
        inner = {k: v for k, v in mapping.items() if k != expr.var}
        return replace(expr, lo=substitute(expr.lo, mapping), hi=substitute(expr.hi, mapping),
                       body=substitute(expr.body, inner))
    return map_children(expr, lambda e: substitute(e, mapping))


def free_names(expr: Expr) -> set:
    """Names read by an expression, binders excluded"""
    if isinstance(expr, Name):
        return {expr.name}
    if isinstance(expr, Comprehension):
        inner = set()
        for e in expr.elements:
            inner |= free_names(e)
        if expr.predicate is not None:
            inner |= free_names(expr.predicate)
        return (inner - {expr.var}) | free_names(expr.source)
    if isinstance(expr, Forall):
        return free_names(expr.lo) | free_names(expr.hi) | (free_names(expr.body) - {expr.var})
    result = set()
    for child in children(expr):
        result |= free_names(child)
    return result


def is_temporal(expr: Expr) -> bool:
    """True when a temporal operator occurs anywhere in expr"""
    if isinstance(expr, Unary) and expr.op in TEMPORAL_UNARY:
        return True
    if isinstance(expr, Binary) and expr.op in TEMPORAL_BINARY:
        return True
    return any(is_temporal(c) for c in children(expr))


def conjoin(parts) -> Expr:
    """Left-nested && of the given expressions (true when empty)"""
    parts = list(parts)
    if not parts:
        return Literal(True)
    result = parts[0]
    for p in parts[1:]:
        result = Binary("&&", result, p)
    return result


def disjoin(parts) -> Expr:
    parts = list(parts)
    if not parts:
        return Literal(False)
    result = parts[0]
    for p in parts[1:]:
        result = Binary("||", result, p)
    return result


# ════════════════════════════════════════════════════════
# ACTIONS
# ════════════════════════════════════════════════════════

class Action:
    """Base class of action statements"""


@dataclass(frozen=True)
class Assign(Action):
    target: Expr                # Name, Index or Field
    value: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class IfAction(Action):
    cond: Expr
    then: Tuple[Action, ...]
    orelse: Tuple[Action, ...] = ()
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CollDelete(Action):
    coll: str
    target: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CollCreateObject(Action):
    coll: str
    name: str
    index: Optional[Expr]
    type_name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CollCreateInterface(Action):
    coll: str
    name: str
    index: Optional[Expr]
    source: Expr
    target: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Guard:
    expr: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Change:
    expr: Expr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CondAction:
    condition: Any              # Guard or Change
    actions: Tuple[Action, ...]
    span: SourceSpan = _span()


# ════════════════════════════════════════════════════════
# DECLARATIONS
# ════════════════════════════════════════════════════════

@dataclass(frozen=True)
class EnumDecl:
    name: str
    literals: Tuple[str, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class TypeDecl:
    name: str
    type: TypeExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class ConstDecl:
    name: str
    type: TypeExpr
    value: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class GlobalConstants:
    entries: Tuple[ConstDecl, ...] = ()
    constraints: Tuple[Expr, ...] = ()

    def get(self, name: str) -> Optional[ConstDecl]:
        for entry in self.entries:
            if entry.name == name:
                return entry
        return None


@dataclass(frozen=True)
class Param:
    name: str
    type: TypeExpr
    direction: Optional[Direction] = None     # object parameters only
    const: bool = False                       # scenario parameters only
    span: SourceSpan = _span()


@dataclass(frozen=True)
class FunctionDecl:
    name: str
    params: Tuple[Param, ...]
    result: TypeExpr
    body: Optional[Expr] = None               # None for external functions
    span: SourceSpan = _span()

    @property
    def external(self) -> bool:
        return self.body is None


@dataclass(frozen=True)
class ObjectTypeDecl:
    name: str
    params: Tuple[Param, ...]
    cycletime: int = 1
    auxiliary: bool = False
    span: SourceSpan = _span()

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class ScenarioTypeDecl:
    """
    Elementary scenario type.

    specs hold the temporal expressions as written; engine.ltlf converts them to
    LtlFormula trees once the constants are bound.
    """
    name: str
    params: Tuple[Param, ...]
    precondition: Optional[Expr] = None
    specs: Tuple[Expr, ...] = ()
    initact: Optional[Tuple[Action, ...]] = None
    cndacts: Tuple[CondAction, ...] = ()
    span: SourceSpan = _span()

    def param(self, name: str) -> Optional[Param]:
        for p in self.params:
            if p.name == name:
                return p
        return None


@dataclass(frozen=True)
class ObjectInstanceDecl:
    name: str
    type_name: str
    extent: Optional[Expr] = None             # array size, None for a single object
    span: SourceSpan = _span()


@dataclass(frozen=True)
class InterfaceDecl:
    name: str
    index: Optional[Expr]
    source: Expr
    target: Expr
    var: Optional[str] = None
    lo: Optional[Expr] = None
    hi: Optional[Expr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class CollaborationDecl:
    name: str
    objects: Tuple[ObjectInstanceDecl, ...] = ()
    interfaces: Tuple[InterfaceDecl, ...] = ()
    span: SourceSpan = _span()


class ScheduleExpr:
    """Base class of schedule nodes"""


@dataclass(frozen=True)
class SchedLeaf(ScheduleExpr):
    scenario: str
    args: Tuple[Expr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SchedRef(ScheduleExpr):
    """Reference to a declared instance by name"""
    name: str
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SchedSeq(ScheduleExpr):
    items: Tuple[ScheduleExpr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SchedPar(ScheduleExpr):
    branches: Tuple[ScheduleExpr, ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SchedReplicate(ScheduleExpr):
    """|| var : lo..hi body"""
    var: str
    lo: Expr
    hi: Expr
    body: ScheduleExpr
    span: SourceSpan = _span()


@dataclass(frozen=True)
class InstanceDecl:
    name: str
    scenario: str
    bindings: Tuple[Tuple[str, Expr], ...]
    span: SourceSpan = _span()


@dataclass(frozen=True)
class SystemTestConfig:
    name: str
    collaboration: CollaborationDecl
    schedule: Optional[ScheduleExpr] = None
    span: SourceSpan = _span()


@dataclass(frozen=True)
class Specification:
    """A complete SCSL file"""
    enums: Tuple[EnumDecl, ...] = ()
    types: Tuple[TypeDecl, ...] = ()
    constants: GlobalConstants = GlobalConstants()
    functions: Tuple[FunctionDecl, ...] = ()
    object_types: Tuple[ObjectTypeDecl, ...] = ()
    scenarios: Tuple[ScenarioTypeDecl, ...] = ()
    systemtest: Optional[SystemTestConfig] = None
    instances: Tuple[InstanceDecl, ...] = ()

    def enum(self, name: str) -> Optional[EnumDecl]:
        return next((e for e in self.enums if e.name == name), None)

    def enum_of_literal(self, literal: str) -> Optional[EnumDecl]:
        return next((e for e in self.enums if literal in e.literals), None)

    def type_decl(self, name: str) -> Optional[TypeDecl]:
        return next((t for t in self.types if t.name == name), None)

    def object_type(self, name: str) -> Optional[ObjectTypeDecl]:
        return next((o for o in self.object_types if o.name == name), None)

    def scenario(self, name: str) -> Optional[ScenarioTypeDecl]:
        return next((s for s in self.scenarios if s.name == name), None)

    def function(self, name: str) -> Optional[FunctionDecl]:
        return next((f for f in self.functions if f.name == name), None)

    def instance(self, name: str) -> Optional[InstanceDecl]:
        return next((i for i in self.instances if i.name == name), None)

    def resolve_type(self, t: TypeExpr) -> TypeExpr:
        """
        Resolve a named type to its declaration shape.

        Enums become kind 'enum', object types kind 'object', record and alias
        declarations are unfolded. Unknown names are returned unchanged.
        """
        seen = set()
        while t.kind == "named" and t.name not in seen:
            seen.add(t.name)
            if self.enum(t.name):
                return TypeExpr("enum", name=t.name, span=t.span)
            if self.object_type(t.name):
                return TypeExpr("object", name=t.name, span=t.span)
            decl = self.type_decl(t.name)
            if decl is None:
                return t
            if decl.type.kind == "record":
                return replace(decl.type, name=t.name)
            t = decl.type
        return t
