"""
SCSL Typechecker
Static checks over a parsed Specification, reported as Diagnostics

Features:
- Name resolution for types, constants, functions, scenarios and instances
- Expression typing with numeric widening (nat < int < real)
- Auxiliary variables typed by unification at their assignment sites
- Interface direction and type checks on collaboration endpoints
- Evaluation of global constant constraints
"""
from typing import Dict, List, Optional, Set

from engine.evaluator import RuntimeFault, constant_values, eval_expr
from language.render import render_expr
from models.enums import Direction
from models.source import NO_SPAN, Diagnostic, SourceSpan
from models.specification import (
    Assign, Binary, Call, Change, CollCreateInterface, CollCreateObject, CollDelete,
    Comprehension, Expr, Field, Forall, IfAction, Index, ListLit, Literal, Name, Range,
    RecordLit, SchedLeaf, SchedPar, SchedRef, SchedReplicate, SchedSeq, ScenarioTypeDecl,
    SetLit, Specification, TypeExpr, Unary, free_names,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)

T_BOOL = TypeExpr("bool")
T_INT = TypeExpr("int")
T_NAT = TypeExpr("nat")
T_REAL = TypeExpr("real")
T_STRING = TypeExpr("string")
T_NULL = TypeExpr("null")
T_COLLAB = TypeExpr("collaboration")

NUMERIC = ("nat", "int", "real")
BUILTIN_SYMBOLS = {
    "active": T_BOOL,
    "EoT": T_BOOL,
    "t_hat": T_REAL,
    "frame": TypeExpr("set"),
}
BUILTIN_FUNCTIONS = ("popfront", "min", "max", "abs")


def _numeric(t: Optional[TypeExpr]) -> bool:
    return t is not None and t.kind in NUMERIC


def _wider(a: TypeExpr, b: TypeExpr) -> TypeExpr:
    order = {"nat": 0, "int": 1, "real": 2}
    return a if order[a.kind] >= order[b.kind] else b


class TypeChecker:
    """
    Collects diagnostics for one specification.

    Types are TypeExpr values resolved against the specification; None stands
    for "unknown" and is compatible with everything so that one error does
    not cascade.
    """

    def __init__(self, spec: Specification):
        self.spec = spec
        self.diagnostics: List[Diagnostic] = []
        self.const_types: Dict[str, TypeExpr] = {c.name: c.type for c in spec.constants.entries}
        self.scenario_names = {s.name for s in spec.scenarios} | {i.name for i in spec.instances}
        self.system_scope: Optional["Scope"] = None

    def error(self, message: str, span: Optional[SourceSpan]):
        self.diagnostics.append(Diagnostic.error(message, span or NO_SPAN))

    # ════════════════════════════════════════════════════════
    # TYPES
    # ════════════════════════════════════════════════════════

    def resolve(self, t: Optional[TypeExpr]) -> Optional[TypeExpr]:
        if t is None:
            return None
        return self.spec.resolve_type(t)

    def check_type(self, t: TypeExpr):
        t = self.resolve(t)
        if t.kind == "named":
            self.error(f"unknown type '{t.name}'", t.span)
        elif t.kind in ("array", "list", "set") and t.elem is not None:
            self.check_type(t.elem)
            if t.kind == "array" and t.size is not None:
                self.check_size(t.size)
        elif t.kind == "record":
            for _, ft in t.fields:
                self.check_type(ft)

    def check_size(self, size: Expr):
        for name in free_names(size):
            if name not in self.const_types:
                self.error(f"array size may only reference global constants, found '{name}'", size.span)

    def compatible(self, a: Optional[TypeExpr], b: Optional[TypeExpr]) -> bool:
        a, b = self.resolve(a), self.resolve(b)
        if a is None or b is None or a.kind == "null" or b.kind == "null":
            return True
        if _numeric(a) and _numeric(b):
            return True
        if a.kind in ("array", "list", "set") and b.kind in ("array", "list", "set"):
            if (a.kind == "set") != (b.kind == "set"):
                return False
            return self.compatible(a.elem, b.elem)
        if a.kind != b.kind:
            return False
        if a.kind in ("enum", "object"):
            return a.name == b.name
        if a.kind == "record":
            if a.name and b.name:
                return a.name == b.name
            names_a = [n for n, _ in a.fields]
            names_b = [n for n, _ in b.fields]
            return sorted(names_a) == sorted(names_b) and all(
                self.compatible(ft, dict(b.fields)[n]) for n, ft in a.fields)
        return True

    def same_type(self, a: Optional[TypeExpr], b: Optional[TypeExpr]) -> bool:
        """Identity of endpoint types; numeric kinds must match exactly"""
        a, b = self.resolve(a), self.resolve(b)
        if a is None or b is None:
            return a is b
        if a.kind != b.kind:
            return False
        if a.kind in ("array", "list", "set"):
            return self.same_type(a.elem, b.elem)
        if a.kind in ("enum", "object", "named"):
            return a.name == b.name
        if a.kind == "record":
            return self.compatible(a, b)
        return True

    def unify(self, a: Optional[TypeExpr], b: Optional[TypeExpr]) -> Optional[TypeExpr]:
        a, b = self.resolve(a), self.resolve(b)
        if a is None or a.kind == "null":
            return b
        if b is None or b.kind == "null":
            return a
        if _numeric(a) and _numeric(b):
            return _wider(a, b)
        if a.kind in ("array", "list", "set") and a.kind == b.kind:
            elem = self.unify(a.elem, b.elem)
            return TypeExpr(a.kind, elem=elem, size=a.size or b.size)
        return a

    def elem_of(self, t: Optional[TypeExpr]) -> Optional[TypeExpr]:
        t = self.resolve(t)
        if t is not None and t.kind in ("array", "list", "set"):
            return self.resolve(t.elem)
        return None

    # ════════════════════════════════════════════════════════
    # EXPRESSIONS
    # ════════════════════════════════════════════════════════

    def infer(self, expr: Expr, scope: "Scope") -> Optional[TypeExpr]:
        if isinstance(expr, Literal):
            return self._literal_type(expr.value)
        if isinstance(expr, Name):
            return scope.lookup(expr)
        if isinstance(expr, Field):
            return self._field(expr, scope)
        if isinstance(expr, Index):
            base = self.resolve(self.infer(expr.base, scope))
            index = self.infer(expr.index, scope)
            if index is not None and not _numeric(index):
                self.error("index must be numeric", expr.index.span)
            if base is None:
                return None
            if base.kind not in ("array", "list"):
                self.error(f"cannot index a value of type {base.kind}", expr.span)
                return None
            return self.resolve(base.elem)
        if isinstance(expr, Call):
            return self._call(expr, scope)
        if isinstance(expr, Unary):
            return self._unary(expr, scope)
        if isinstance(expr, Binary):
            return self._binary(expr, scope)
        if isinstance(expr, SetLit):
            elem = None
            for e in expr.elements:
                elem = self.unify(elem, self.infer(e, scope))
            return TypeExpr("set", elem=elem)
        if isinstance(expr, ListLit):
            elem = None
            for e in expr.elements:
                elem = self.unify(elem, self.infer(e, scope))
            return TypeExpr("list", elem=elem)
        if isinstance(expr, RecordLit):
            return TypeExpr("record", fields=tuple(sorted((n, self.infer(v, scope) or T_NULL)
                                                          for n, v in expr.items)))
        if isinstance(expr, Range):
            for bound in (expr.lo, expr.hi):
                if not _numeric(self.infer(bound, scope) or T_INT):
                    self.error("range bounds must be numeric", bound.span)
            return TypeExpr("set", elem=T_INT)
        if isinstance(expr, Comprehension):
            source = self.infer(expr.source, scope)
            var_type = T_INT if isinstance(expr.source, Range) else self.elem_of(source)
            inner = scope.bind(expr.var, var_type)
            if expr.predicate is not None:
                self.expect_bool(expr.predicate, inner)
            elem = None
            for e in expr.elements:
                elem = self.unify(elem, self.infer(e, inner))
            return TypeExpr("set", elem=elem)
        if isinstance(expr, Forall):
            for bound in (expr.lo, expr.hi):
                self.infer(bound, scope)
            self.expect_bool(expr.body, scope.bind(expr.var, T_INT))
            return T_BOOL
        return None

    @staticmethod
    def _literal_type(value) -> TypeExpr:
        if value is None:
            return T_NULL
        if isinstance(value, bool):
            return T_BOOL
        if isinstance(value, int):
            return T_NAT if value >= 0 else T_INT
        if isinstance(value, float):
            return T_REAL
        return T_STRING

    def expect_bool(self, expr: Expr, scope: "Scope"):
        t = self.resolve(self.infer(expr, scope))
        if t is not None and t.kind not in ("bool", "null"):
            self.error(f"expected a boolean expression, found {t.kind}", expr.span)

    def _field(self, expr: Field, scope: "Scope") -> Optional[TypeExpr]:
        if (expr.name == "active" and isinstance(expr.base, Name)
                and expr.base.name in self.scenario_names and not scope.knows(expr.base.name)):
            self.error("cross-instance reads of 'active' are not allowed", expr.span)
            return T_BOOL
        base = self.resolve(self.infer(expr.base, scope))
        if base is None or base.kind == "null":
            return None
        if base.kind == "object":
            decl = self.spec.object_type(base.name)
            param = decl.param(expr.name) if decl else None
            if param is None:
                self.error(f"object type {base.name} has no parameter '{expr.name}'", expr.span)
                return None
            return self.resolve(param.type)
        if base.kind == "record":
            fields = dict(base.fields)
            if expr.name not in fields:
                self.error(f"record has no field '{expr.name}'", expr.span)
                return None
            return self.resolve(fields[expr.name])
        if base.kind == "collaboration":
            return scope.member(expr.name, expr.span)
        self.error(f"cannot select '{expr.name}' from a value of type {base.kind}", expr.span)
        return None

    def _call(self, expr: Call, scope: "Scope") -> Optional[TypeExpr]:
        arg_types = [self.infer(a, scope) for a in expr.args]
        if expr.func in BUILTIN_FUNCTIONS and self.spec.function(expr.func) is None:
            if len(arg_types) != 1:
                self.error(f"{expr.func} expects one argument", expr.span)
                return None
            if expr.func == "abs":
                return arg_types[0]
            if expr.func == "popfront" and not isinstance(expr.args[0], Name):
                self.error("popfront expects a list variable", expr.span)
            return self.elem_of(arg_types[0])
        decl = self.spec.function(expr.func)
        if decl is None:
            self.error(f"unknown function '{expr.func}'", expr.span)
            return None
        if len(decl.params) != len(arg_types):
            self.error(f"{expr.func} expects {len(decl.params)} argument(s), got {len(arg_types)}", expr.span)
        for param, actual, arg in zip(decl.params, arg_types, expr.args):
            if not self.compatible(param.type, actual):
                self.error(f"argument '{param.name}' of {expr.func} has incompatible type", arg.span)
        return self.resolve(decl.result)

    def _unary(self, expr: Unary, scope: "Scope") -> Optional[TypeExpr]:
        if expr.op in ("!", "G", "F", "X"):
            self.expect_bool(expr.operand, scope)
            return T_BOOL
        t = self.resolve(self.infer(expr.operand, scope))
        if expr.op == "-":
            if t is not None and not _numeric(t):
                self.error("unary minus needs a numeric operand", expr.span)
            return T_INT if t is None or t.kind == "nat" else t
        if expr.op == "#":
            if t is not None and t.kind not in ("array", "list", "set"):
                self.error("cardinality needs a collection", expr.span)
            return T_NAT
        if expr.op == "min":
            if t is not None and t.kind != "set":
                self.error("min needs a set operand", expr.span)
            return self.elem_of(t)
        return None

    def _binary(self, expr: Binary, scope: "Scope") -> Optional[TypeExpr]:
        op = expr.op
        if op in ("&&", "||", "=>", "<=>", "U"):
            self.expect_bool(expr.left, scope)
            self.expect_bool(expr.right, scope)
            return T_BOOL
        left = self.resolve(self.infer(expr.left, scope))
        right = self.resolve(self.infer(expr.right, scope))
        if op in ("=", "!="):
            if not self.compatible(left, right):
                self.error(f"cannot compare {left.kind} with {right.kind}", expr.span)
            return T_BOOL
        if op in ("<", "<=", ">", ">="):
            for side, t in ((expr.left, left), (expr.right, right)):
                if t is not None and not _numeric(t):
                    self.error(f"ordering needs numeric operands, found {t.kind}", side.span)
            return T_BOOL
        if op in ("+", "-", "*", "/"):
            for side, t in ((expr.left, left), (expr.right, right)):
                if t is not None and not _numeric(t):
                    self.error(f"arithmetic needs numeric operands, found {t.kind}", side.span)
            if _numeric(left) and _numeric(right):
                result = _wider(left, right)
                return T_INT if op == "-" and result.kind == "nat" else result
            return None
        if op == "in":
            if right is not None and right.kind not in ("array", "list", "set"):
                self.error("right operand of 'in' must be a collection", expr.right.span)
            elif not self.compatible(left, self.elem_of(right)):
                self.error("element type does not match collection", expr.span)
            return T_BOOL
        if op in ("union", "inter", "\\"):
            for side, t in ((expr.left, left), (expr.right, right)):
                if t is not None and t.kind != "set":
                    self.error(f"set operation needs set operands, found {t.kind}", side.span)
            return self.unify(left, right)
        return None

    # ════════════════════════════════════════════════════════
    # DECLARATIONS
    # ════════════════════════════════════════════════════════

    def check(self) -> List[Diagnostic]:
        spec = self.spec
        for decl in spec.types:
            self.check_type(decl.type)
        for obj in spec.object_types:
            for p in obj.params:
                self.check_type(p.type)
                if p.direction is None:
                    self.error(f"parameter '{p.name}' of {obj.name} needs a direction", p.span)
        self.check_constants()
        for fn in spec.functions:
            self.check_function(fn)
        for scenario in spec.scenarios:
            self.check_scenario(scenario)
        self.check_systemtest()
        for inst in spec.instances:
            self.check_instance(inst)
        return self.diagnostics

    def check_constants(self):
        scope = Scope(self, {})
        for entry in self.spec.constants.entries:
            self.check_type(entry.type)
            if entry.value is not None:
                actual = self.infer(entry.value, scope)
                if not self.compatible(entry.type, actual):
                    self.error(f"value of constant '{entry.name}' does not match its type", entry.value.span)
        for constraint in self.spec.constants.constraints:
            for name in free_names(constraint):
                if name not in self.const_types and self.spec.enum_of_literal(name) is None:
                    self.error(f"constraint reads undeclared constant '{name}'", constraint.span)
            self.expect_bool(constraint, scope)

        values = constant_values(self.spec, strict=False)
        for constraint in self.spec.constants.constraints:
            for part in _conjuncts(constraint):
                try:
                    holds = eval_expr(part, {}, values, spec=self.spec)
                except RuntimeFault:
                    continue
                if holds is False:
                    self.error(f"constant constraint violated: {render_expr(part)}", part.span)

    def check_function(self, fn):
        locals_ = {}
        for p in fn.params:
            self.check_type(p.type)
            locals_[p.name] = self.resolve(p.type)
        if fn.body is not None:
            actual = self.infer(fn.body, Scope(self, locals_))
            if not self.compatible(fn.result, actual):
                self.error(f"body of function '{fn.name}' does not match its result type", fn.body.span)

    def check_scenario(self, scenario: ScenarioTypeDecl):
        params = {}
        for p in scenario.params:
            self.check_type(p.type)
            params[p.name] = self.resolve(p.type)

        aux: Dict[str, Optional[TypeExpr]] = {}
        scope = Scope(self, params, aux=aux)
        for action in scenario.initact or ():
            self.check_action(action, scope, scenario)
        for cndact in scenario.cndacts:
            if isinstance(cndact.condition, Change):
                self.expect_bool(cndact.condition.expr, scope)
            else:
                self.expect_bool(cndact.condition.expr, scope)
            for action in cndact.actions:
                self.check_action(action, scope, scenario)

        if scenario.precondition is not None:
            pre_scope = Scope(self, params, forbidden=set(aux))
            self.expect_bool(scenario.precondition, pre_scope)

        for phi in scenario.specs:
            self.expect_bool(phi, scope)

    def check_action(self, action, scope: "Scope", scenario: ScenarioTypeDecl):
        if isinstance(action, Assign):
            value_type = self.infer(action.value, scope)
            target = action.target
            if isinstance(target, Name):
                self._assign_name(target, value_type, scope, scenario, action)
            elif isinstance(target, Index) and isinstance(target.base, Name) and not scope.knows_fixed(target.base.name):
                name = target.base.name
                self.infer(target.index, scope)
                scope.assign_aux(name, TypeExpr("list", elem=value_type), action.span)
            else:
                target_type = self.infer(target, scope)
                if not self.compatible(target_type, value_type):
                    self.error("assigned value does not match the target type", action.span)
        elif isinstance(action, IfAction):
            self.expect_bool(action.cond, scope)
            for sub in action.then + action.orelse:
                self.check_action(sub, scope, scenario)
        elif isinstance(action, CollDelete):
            self._check_coll(action.coll, scope, action.span)
            target = self.resolve(self.infer(action.target, scope))
            if target is not None and target.kind != "object":
                self.error("only objects can be deleted from a collaboration", action.span)
        elif isinstance(action, CollCreateObject):
            self._check_coll(action.coll, scope, action.span)
            if self.spec.object_type(action.type_name) is None:
                self.error(f"unknown object type '{action.type_name}'", action.span)
        elif isinstance(action, CollCreateInterface):
            self._check_coll(action.coll, scope, action.span)

    def _assign_name(self, target: Name, value_type, scope: "Scope", scenario, action):
        name = target.name
        if name == "frame":
            if value_type is not None and value_type.kind != "set":
                self.error("frame must be assigned a set of parameter references", action.span)
            return
        param = scenario.param(name)
        if param is not None:
            kind = "const parameter" if param.const else "parameter"
            self.error(f"cannot assign to {kind} '{name}'", action.span)
            return
        if name in self.const_types:
            self.error(f"cannot assign to global constant '{name}'", action.span)
            return
        if name in BUILTIN_SYMBOLS:
            self.error(f"cannot assign to built-in '{name}'", action.span)
            return
        scope.assign_aux(name, value_type, action.span)

    def _check_coll(self, name: str, scope: "Scope", span: SourceSpan):
        t = self.resolve(scope.locals.get(name))
        if t is None or t.kind != "collaboration":
            self.error(f"'{name}' is not a collaboration parameter", span)

    # ════════════════════════════════════════════════════════
    # SYSTEM TEST
    # ════════════════════════════════════════════════════════

    def check_systemtest(self):
        st = self.spec.systemtest
        if st is None:
            return
        coll = st.collaboration
        members = {}
        for obj in coll.objects:
            decl = self.spec.object_type(obj.type_name)
            if decl is None:
                self.error(f"unknown object type '{obj.type_name}'", obj.span)
                continue
            obj_type = TypeExpr("object", name=obj.type_name)
            if obj.extent is not None:
                self.check_size(obj.extent)
                obj_type = TypeExpr("array", elem=obj_type, size=obj.extent)
            members[obj.name] = obj_type

        scope = Scope(self, {coll.name: T_COLLAB}, members=members)
        self.system_scope = scope
        for iface in coll.interfaces:
            inner = scope.bind(iface.var, T_INT) if iface.var else scope
            source = self._endpoint(iface.source, members, inner)
            target = self._endpoint(iface.target, members, inner)
            if source is not None and source[0].direction != Direction.OUT:
                self.error("interface source must be an out parameter", iface.source.span)
            if target is not None and target[0].direction != Direction.IN:
                self.error("interface target must be an in parameter", iface.target.span)
            if source is not None and target is not None and not self.same_type(source[1], target[1]):
                self.error(f"interface {iface.name} connects parameters of different types", iface.span)

        if st.schedule is not None:
            self._check_sched(st.schedule, scope)

    def _endpoint(self, expr: Expr, members: dict, scope: "Scope"):
        """Return (object parameter, endpoint type) for r[i].s or cc.s[i] forms"""
        element = False
        if isinstance(expr, Index):
            self.infer(expr.index, scope)
            expr = expr.base
            element = True
        if not isinstance(expr, Field):
            self.error("interface endpoint must name an object parameter", expr.span)
            return None
        base = expr.base
        if isinstance(base, Index):
            self.infer(base.index, scope)
            base = base.base
        if not isinstance(base, Name) or base.name not in members:
            self.error("interface endpoint must name a collaboration object", expr.span)
            return None
        obj_type = self.resolve(members[base.name])
        if obj_type.kind == "array":
            obj_type = self.resolve(obj_type.elem)
        decl = self.spec.object_type(obj_type.name)
        param = decl.param(expr.name)
        if param is None:
            self.error(f"object type {decl.name} has no parameter '{expr.name}'", expr.span)
            return None
        t = self.resolve(param.type)
        if element:
            if t.kind != "array":
                self.error(f"parameter '{param.name}' is not an array", expr.span)
                return None
            t = self.resolve(t.elem)
        return param, t

    def _check_sched(self, node, scope: "Scope"):
        if isinstance(node, SchedLeaf):
            decl = self.spec.scenario(node.scenario)
            if decl is None:
                self.error(f"unknown scenario type '{node.scenario}'", node.span)
                return
            if len(decl.params) != len(node.args):
                self.error(f"{node.scenario} expects {len(decl.params)} argument(s), got {len(node.args)}",
                           node.span)
            for param, arg in zip(decl.params, node.args):
                if not self.compatible(param.type, self.infer(arg, scope)):
                    self.error(f"argument '{param.name}' of {node.scenario} has incompatible type", arg.span)
        elif isinstance(node, SchedRef):
            if self.spec.instance(node.name) is None:
                self.error(f"unknown scenario instance '{node.name}'", node.span)
        elif isinstance(node, SchedSeq):
            for item in node.items:
                self._check_sched(item, scope)
        elif isinstance(node, SchedPar):
            for branch in node.branches:
                self._check_sched(branch, scope)
        elif isinstance(node, SchedReplicate):
            self.infer(node.lo, scope)
            self.infer(node.hi, scope)
            self._check_sched(node.body, scope.bind(node.var, T_INT))

    def check_instance(self, inst):
        decl = self.spec.scenario(inst.scenario)
        if decl is None:
            self.error(f"unknown scenario type '{inst.scenario}'", inst.span)
            return
        # bindings may address collaboration members, e.g. coll.r[2]
        scope = self.system_scope or Scope(self, {})
        for name, value in inst.bindings:
            param = decl.param(name)
            if param is None:
                self.error(f"{inst.scenario} has no parameter '{name}'", value.span)
                continue
            if not self.compatible(param.type, self.infer(value, scope)):
                self.error(f"binding of '{name}' has incompatible type", value.span)


class Scope:
    """Name environment of one expression context"""

    def __init__(self, checker: TypeChecker, locals_: dict, aux: Optional[dict] = None,
                 forbidden: Optional[Set[str]] = None, members: Optional[dict] = None):
        self.checker = checker
        self.locals = dict(locals_)
        self.aux = aux if aux is not None else {}
        self.forbidden = forbidden or set()
        self.members = members or {}

    def bind(self, name: str, t: Optional[TypeExpr]) -> "Scope":
        inner = Scope(self.checker, self.locals, self.aux, self.forbidden, self.members)
        inner.locals[name] = t
        return inner

    def knows(self, name: str) -> bool:
        return name in self.locals or name in self.aux

    def knows_fixed(self, name: str) -> bool:
        return name in self.locals or name in self.checker.const_types

    def assign_aux(self, name: str, t: Optional[TypeExpr], span: SourceSpan):
        if name in self.aux:
            previous = self.aux[name]
            if not self.checker.compatible(previous, t):
                self.checker.error(f"conflicting types for auxiliary variable '{name}'", span)
                return
            self.aux[name] = self.checker.unify(previous, t)
        else:
            self.aux[name] = t

    def member(self, name: str, span: SourceSpan) -> Optional[TypeExpr]:
        if name not in self.members:
            self.checker.error(f"collaboration has no member '{name}'", span)
            return None
        return self.members[name]

    def lookup(self, expr: Name) -> Optional[TypeExpr]:
        name = expr.name
        spec = self.checker.spec
        if name in self.locals:
            return self.locals[name]
        if name in self.forbidden:
            self.checker.error(f"precondition may not read auxiliary variable '{name}'", expr.span)
            return None
        if name in self.aux:
            return self.aux[name]
        if name in BUILTIN_SYMBOLS:
            return BUILTIN_SYMBOLS[name]
        if name in self.checker.const_types:
            return self.checker.resolve(self.checker.const_types[name])
        enum = spec.enum_of_literal(name)
        if enum is not None:
            return TypeExpr("enum", name=enum.name)
        self.checker.error(f"unknown symbol '{name}'", expr.span)
        return None


def _conjuncts(expr: Expr) -> List[Expr]:
    if isinstance(expr, Binary) and expr.op == "&&":
        return _conjuncts(expr.left) + _conjuncts(expr.right)
    return [expr]


def typecheck(spec: Specification) -> List[Diagnostic]:
    """Run all static checks; an empty list means the specification is well-formed"""
    diagnostics = TypeChecker(spec).check()
    if diagnostics:
        logger.debug(f"typecheck found {len(diagnostics)} problem(s)")
    return diagnostics
