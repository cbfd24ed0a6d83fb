"""
SCSL Renderer
Serializes a Specification back to SCSL source text

Expressions are fully parenthesized so that parse(render(spec)) rebuilds the
same tree regardless of operator precedence.
"""
from typing import List

from models.specification import (
    Assign, Binary, Call, Change, CollCreateInterface, CollCreateObject, CollDelete,
    Comprehension, CondAction, Expr, Field, Forall, IfAction, Index, InstanceDecl, ListLit,
    Literal, Name, Param, Range, RecordLit, SchedLeaf, SchedPar, SchedRef, SchedReplicate,
    SchedSeq, SetLit, Specification, TypeExpr, Unary,
)

INDENT = "  "


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Literal):
        return _literal(expr.value)
    if isinstance(expr, Name):
        return expr.name
    if isinstance(expr, Field):
        return f"{render_expr(expr.base)}.{expr.name}"
    if isinstance(expr, Index):
        return f"{render_expr(expr.base)}[{render_expr(expr.index)}]"
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(render_expr(a) for a in expr.args)})"
    if isinstance(expr, Unary):
        return f"({expr.op} {render_expr(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({render_expr(expr.left)} {expr.op} {render_expr(expr.right)})"
    if isinstance(expr, SetLit):
        return "{" + ", ".join(render_expr(e) for e in expr.elements) + "}"
    if isinstance(expr, ListLit):
        return "[" + ", ".join(render_expr(e) for e in expr.elements) + "]"
    if isinstance(expr, RecordLit):
        return "(" + ", ".join(f"{n}: {render_expr(v)}" for n, v in expr.items) + ")"
    if isinstance(expr, Range):
        return f"{render_expr(expr.lo)}..{render_expr(expr.hi)}"
    if isinstance(expr, Comprehension):
        return _comprehension(expr)
    if isinstance(expr, Forall):
        return (f"(forall {expr.var} : {render_expr(expr.lo)}..{render_expr(expr.hi)} . "
                f"{render_expr(expr.body)})")
    raise TypeError(f"cannot render {type(expr).__name__}")


def _literal(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return '"' + value.replace('"', '\\"') + '"'
    if isinstance(value, float):
        text = repr(value)
        return text if "e" not in text else format(value, "f")
    return str(value)


def _comprehension(expr: Comprehension) -> str:
    binder_only = len(expr.elements) == 1 and expr.elements[0] == Name(expr.var)
    if binder_only and isinstance(expr.source, Range):
        text = f"{{{expr.var} : {render_expr(expr.source)}"
        if expr.predicate is not None:
            text += f" | {render_expr(expr.predicate)}"
        return text + "}"
    elements = ", ".join(render_expr(e) for e in expr.elements)
    if isinstance(expr.source, Range):
        return f"{{{elements} | {expr.var} : {render_expr(expr.source)}}}"
    return f"{{{elements} | {expr.var} in {render_expr(expr.source)}}}"


def render_type(t: TypeExpr) -> str:
    if t.kind == "named":
        return t.name
    if t.kind == "collaboration":
        return "collaboration"
    if t.kind in ("list", "set"):
        return f"{t.kind}({render_type(t.elem)})"
    if t.kind == "array":
        return f"{render_type(t.elem)}[{render_expr(t.size)}]"
    if t.kind == "record":
        return "record(" + ", ".join(f"{n} : {render_type(ft)}" for n, ft in t.fields) + ")"
    return t.kind


def _param(p: Param) -> str:
    prefix = ""
    if p.direction is not None:
        prefix = f"{p.direction.value} "
    if p.const:
        prefix += "const "
    return f"{prefix}{p.name} : {render_type(p.type)}"


def _params(params) -> str:
    return "(" + ", ".join(_param(p) for p in params) + ")"


# ════════════════════════════════════════════════════════
# ACTIONS AND SCHEDULES
# ════════════════════════════════════════════════════════

def render_actions(actions, depth: int) -> List[str]:
    pad = INDENT * depth
    lines = []
    for action in actions:
        if isinstance(action, Assign):
            lines.append(f"{pad}{render_expr(action.target)} := {render_expr(action.value)};")
        elif isinstance(action, IfAction):
            lines.append(f"{pad}if {render_expr(action.cond)} then")
            lines.extend(render_actions(action.then, depth + 1))
            if action.orelse:
                lines.append(f"{pad}else")
                lines.extend(render_actions(action.orelse, depth + 1))
            lines.append(f"{pad}endif;")
        elif isinstance(action, CollDelete):
            lines.append(f"{pad}{action.coll}.delete({render_expr(action.target)});")
        elif isinstance(action, CollCreateObject):
            lines.append(f"{pad}{action.coll}.create({action.name}{_index(action.index)} : {action.type_name});")
        elif isinstance(action, CollCreateInterface):
            lines.append(f"{pad}{action.coll}.create(interface {action.name}{_index(action.index)} "
                         f"from {render_expr(action.source)} to {render_expr(action.target)});")
    return lines


def _index(index) -> str:
    return "" if index is None else f"[{render_expr(index)}]"


def render_schedule(node) -> str:
    if isinstance(node, SchedPar):
        return " || ".join(_sched_branch(b) for b in node.branches)
    return _sched_branch(node)


def _sched_branch(node) -> str:
    if isinstance(node, SchedReplicate):
        return f"{node.var} : {render_expr(node.lo)}..{render_expr(node.hi)} {_sched_item(node.body)}"
    if isinstance(node, SchedSeq):
        return "; ".join(_sched_item(i) for i in node.items)
    return _sched_item(node)


def _sched_item(node) -> str:
    if isinstance(node, SchedLeaf):
        return f"{node.scenario}({', '.join(render_expr(a) for a in node.args)})"
    if isinstance(node, SchedRef):
        return node.name
    return f"({render_schedule(node)})"


def render_instance(inst: InstanceDecl) -> str:
    bindings = ", ".join(f"{p} := {render_expr(e)}" for p, e in inst.bindings)
    return f"instance {inst.name} of scenario {inst.scenario}({bindings});"


# ════════════════════════════════════════════════════════
# SPECIFICATION
# ════════════════════════════════════════════════════════

def render(spec: Specification) -> str:
    """Render a specification as SCSL text (empty text for an empty spec)"""
    blocks: List[List[str]] = []

    if spec.enums:
        lines = ["enum"]
        lines += [f"{INDENT}{e.name} : {{ {', '.join(e.literals)} }};" for e in spec.enums]
        lines.append("end enum")
        blocks.append(lines)

    for decl in spec.types:
        blocks.append([f"type {decl.name} = {render_type(decl.type)};"])

    consts = spec.constants
    if consts.entries or consts.constraints:
        lines = ["global const"]
        for entry in consts.entries:
            value = f" := {render_expr(entry.value)}" if entry.value is not None else ""
            lines.append(f"{INDENT}{entry.name} : {render_type(entry.type)}{value};")
        for constraint in consts.constraints:
            lines.append(f"{INDENT}constraint {render_expr(constraint)};")
        lines.append("end const")
        blocks.append(lines)

    if spec.functions:
        lines = ["global function"]
        for fn in spec.functions:
            head = f"{fn.name}{_params(fn.params)} : {render_type(fn.result)}"
            if fn.external:
                lines.append(f"{INDENT}external {head};")
            else:
                lines.append(f"{INDENT}{head} := {render_expr(fn.body)};")
        lines.append("end function")
        blocks.append(lines)

    for obj in spec.object_types:
        prefix = "auxiliary " if obj.auxiliary else ""
        blocks.append([f"{prefix}object type {obj.name}{_params(obj.params)}",
                       f"{INDENT}cycletime {obj.cycletime}",
                       "end type"])

    for scenario in spec.scenarios:
        lines = [f"elementary scenario {scenario.name}{_params(scenario.params)}"]
        if scenario.precondition is not None:
            lines.append(f"{INDENT}precondition {render_expr(scenario.precondition)};")
        for phi in scenario.specs:
            lines.append(f"{INDENT}spec {render_expr(phi)};")
        if scenario.initact is not None:
            lines.append(f"{INDENT}initact")
            lines.extend(render_actions(scenario.initact, 2))
        for cndact in scenario.cndacts:
            lines.append(f"{INDENT}cndact {_condition(cndact)} /")
            lines.extend(render_actions(cndact.actions, 2))
        lines.append("end scenario")
        blocks.append(lines)

    if spec.systemtest is not None:
        st = spec.systemtest
        coll = st.collaboration
        lines = [f"systemtest {st.name}", f"{INDENT}collaboration {coll.name}"]
        for obj in coll.objects:
            lines.append(f"{INDENT * 2}{obj.name} : {obj.type_name}{_index(obj.extent)};")
        for iface in coll.interfaces:
            text = (f"{INDENT * 2}interface {iface.name}{_index(iface.index)} "
                    f"from {render_expr(iface.source)} to {render_expr(iface.target)}")
            if iface.var is not None:
                text += f" for {iface.var} : {render_expr(iface.lo)}..{render_expr(iface.hi)}"
            lines.append(text + ";")
        lines.append(f"{INDENT}end collaboration")
        lines.append(f"{INDENT}schedule")
        if st.schedule is not None:
            lines.append(f"{INDENT * 2}{render_schedule(st.schedule)}")
        lines.append(f"{INDENT}end schedule")
        lines.append("end systemtest")
        blocks.append(lines)

    for inst in spec.instances:
        blocks.append([render_instance(inst)])

    if not blocks:
        return ""
    return "\n\n".join("\n".join(lines) for lines in blocks) + "\n"


def _condition(cndact: CondAction) -> str:
    if isinstance(cndact.condition, Change):
        return f"chg({render_expr(cndact.condition.expr)})"
    return f"[{render_expr(cndact.condition.expr)}]"
