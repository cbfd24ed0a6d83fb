"""
Runtime Values
Dynamic values of the evaluator, their default construction and JSON conversion

Representation:
- bool, int, float, str natively; None is null
- EnumLit for enumeration literals, Record for composite values
- arrays and lists as tuples, sets as frozensets
- ObjectRef / CollabRef handles for collaboration members
"""
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Tuple

from models.specification import Specification, TypeExpr


@dataclass(frozen=True)
class EnumLit:
    enum: str
    name: str
    index: int = 0

    def __lt__(self, other):
        if not isinstance(other, EnumLit):
            return NotImplemented
        return (self.enum, self.index) < (other.enum, other.index)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Record:
    """Composite value; items are kept sorted by field name"""
    items: Tuple[Tuple[str, Any], ...]

    @classmethod
    def of(cls, **values) -> "Record":
        return cls(tuple(sorted(values.items())))

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any]) -> "Record":
        return cls(tuple(sorted(values.items())))

    def get(self, name: str, default: Any = None) -> Any:
        for key, value in self.items:
            if key == name:
                return value
        return default

    def has(self, name: str) -> bool:
        return any(key == name for key, _ in self.items)

    def __lt__(self, other):
        if not isinstance(other, Record):
            return NotImplemented
        return order_key(self) < order_key(other)


@dataclass(frozen=True)
class ObjectRef:
    """Handle of a live object, e.g. path 'coll.r[2]'"""
    path: str
    type_name: str

    def __str__(self) -> str:
        return self.path


@dataclass(frozen=True)
class CollabRef:
    name: str

    def __str__(self) -> str:
        return self.name


def order_key(value: Any):
    """Total order used for deterministic iteration and solver tie-breaks"""
    if value is None:
        return (0,)
    if isinstance(value, bool):
        return (1, int(value))
    if isinstance(value, (int, float)):
        return (2, value)
    if isinstance(value, EnumLit):
        return (3, value.enum, value.index)
    if isinstance(value, str):
        return (4, value)
    if isinstance(value, Record):
        return (5, tuple((k, order_key(v)) for k, v in value.items))
    if isinstance(value, tuple):
        return (6, tuple(order_key(v) for v in value))
    if isinstance(value, frozenset):
        return (7, tuple(sorted(order_key(v) for v in value)))
    if isinstance(value, ObjectRef):
        return (8, value.path)
    return (9, repr(value))


def sorted_values(values) -> list:
    return sorted(values, key=order_key)


# ════════════════════════════════════════════════════════
# DEFAULTS
# ════════════════════════════════════════════════════════

def default_value(t: TypeExpr, spec: Specification, size_of=None) -> Any:
    """
    Initial value of a parameter of type t.

    Args:
        t: Declared type
        spec: Specification used to resolve named types
        size_of: Callable evaluating an array size expression to an int
    """
    t = spec.resolve_type(t)
    if t.kind == "bool":
        return False
    if t.kind in ("int", "nat"):
        return 0
    if t.kind == "real":
        return 0.0
    if t.kind == "string":
        return ""
    if t.kind == "enum":
        decl = spec.enum(t.name)
        return EnumLit(decl.name, decl.literals[0], 0)
    if t.kind == "record":
        return Record.from_mapping({n: default_value(ft, spec, size_of) for n, ft in t.fields})
    if t.kind == "array":
        size = size_of(t.size) if (size_of is not None and t.size is not None) else 0
        return tuple(default_value(t.elem, spec, size_of) for _ in range(size))
    if t.kind == "list":
        return ()
    if t.kind == "set":
        return frozenset()
    return None


# ════════════════════════════════════════════════════════
# JSON CONVERSION
# ════════════════════════════════════════════════════════

def value_to_json(value: Any) -> Any:
    """Plain JSON rendering (enum literals by name, records as objects)"""
    if isinstance(value, EnumLit):
        return value.name
    if isinstance(value, Record):
        return {k: value_to_json(v) for k, v in value.items}
    if isinstance(value, tuple):
        return [value_to_json(v) for v in value]
    if isinstance(value, frozenset):
        return [value_to_json(v) for v in sorted_values(value)]
    if isinstance(value, (ObjectRef, CollabRef)):
        return str(value)
    return value


def value_from_json(data: Any, t: TypeExpr, spec: Specification) -> Any:
    """Typed conversion of plain JSON into a runtime value"""
    t = spec.resolve_type(t)
    if data is None:
        return None
    if t.kind == "bool":
        return bool(data)
    if t.kind in ("int", "nat"):
        return int(data)
    if t.kind == "real":
        return float(data)
    if t.kind == "string":
        return str(data)
    if t.kind == "enum":
        decl = spec.enum(t.name)
        if data not in decl.literals:
            raise ValueError(f"'{data}' is not a literal of {decl.name}")
        return EnumLit(decl.name, data, decl.literals.index(data))
    if t.kind == "record":
        return Record.from_mapping({n: value_from_json(data[n], ft, spec) for n, ft in t.fields})
    if t.kind in ("array", "list"):
        return tuple(value_from_json(v, t.elem, spec) for v in data)
    if t.kind == "set":
        return frozenset(value_from_json(v, t.elem, spec) for v in data)
    return data


def to_wire(value: Any) -> Any:
    """Tagged JSON encoding that round-trips every runtime value"""
    if isinstance(value, EnumLit):
        return {"$enum": [value.enum, value.name, value.index]}
    if isinstance(value, Record):
        return {"$rec": [[k, to_wire(v)] for k, v in value.items]}
    if isinstance(value, tuple):
        return [to_wire(v) for v in value]
    if isinstance(value, frozenset):
        return {"$set": [to_wire(v) for v in sorted_values(value)]}
    if isinstance(value, ObjectRef):
        return {"$ref": [value.path, value.type_name]}
    if isinstance(value, CollabRef):
        return {"$coll": value.name}
    return value


def from_wire(data: Any) -> Any:
    if isinstance(data, list):
        return tuple(from_wire(v) for v in data)
    if isinstance(data, dict):
        if "$enum" in data:
            enum, name, index = data["$enum"]
            return EnumLit(enum, name, index)
        if "$rec" in data:
            return Record(tuple((k, from_wire(v)) for k, v in data["$rec"]))
        if "$set" in data:
            return frozenset(from_wire(v) for v in data["$set"])
        if "$ref" in data:
            return ObjectRef(*data["$ref"])
        if "$coll" in data:
            return CollabRef(data["$coll"])
    return data


def format_value(value: Any) -> str:
    """Compact text used in run logs, e.g. (5,1) for a Location"""
    if isinstance(value, Record) and value.has("x") and value.has("y") and len(value.items) == 2:
        return f"({_num(value.get('x'))},{_num(value.get('y'))})"
    if isinstance(value, Record):
        return "(" + ", ".join(f"{k}: {format_value(v)}" for k, v in value.items) + ")"
    if isinstance(value, tuple):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    if isinstance(value, frozenset):
        return "{" + ", ".join(format_value(v) for v in sorted_values(value)) + "}"
    if value is None:
        return "null"
    if isinstance(value, float):
        return _num(value)
    return str(value)


def _num(v: Any) -> str:
    if isinstance(v, float) and v.is_integer():
        return str(int(v))
    return str(v)


def location(x: float, y: float) -> Record:
    return Record.of(x=float(x), y=float(y))


def location_xy(value: Any) -> Optional[Tuple[float, float]]:
    if isinstance(value, Record) and value.has("x") and value.has("y"):
        return float(value.get("x")), float(value.get("y"))
    return None
