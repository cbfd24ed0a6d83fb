"""
LTL Formula Model
Finite-trace temporal formulas whose atoms are quantifier-free expressions
"""
from dataclasses import dataclass
from typing import Iterator, Tuple

from models.specification import Expr, Literal


class LtlFormula:
    """Base class of formula nodes"""


@dataclass(frozen=True)
class Atom(LtlFormula):
    expr: Expr


@dataclass(frozen=True)
class Not(LtlFormula):
    arg: LtlFormula


@dataclass(frozen=True)
class And(LtlFormula):
    args: Tuple[LtlFormula, ...]


@dataclass(frozen=True)
class Or(LtlFormula):
    args: Tuple[LtlFormula, ...]


@dataclass(frozen=True)
class Implies(LtlFormula):
    left: LtlFormula
    right: LtlFormula


@dataclass(frozen=True)
class Iff(LtlFormula):
    left: LtlFormula
    right: LtlFormula


@dataclass(frozen=True)
class Next(LtlFormula):
    arg: LtlFormula


@dataclass(frozen=True)
class Until(LtlFormula):
    left: LtlFormula
    right: LtlFormula


@dataclass(frozen=True)
class Finally(LtlFormula):
    arg: LtlFormula


@dataclass(frozen=True)
class Globally(LtlFormula):
    arg: LtlFormula


@dataclass(frozen=True)
class Window(LtlFormula):
    """
    Pending obligation of a widened Next: arg must hold at one of the next
    `remaining` positions, starting with the current one.
    """
    arg: LtlFormula
    remaining: int


TRUE = Atom(Literal(True))
FALSE = Atom(Literal(False))


def is_true(f: LtlFormula) -> bool:
    return isinstance(f, Atom) and isinstance(f.expr, Literal) and f.expr.value is True


def is_false(f: LtlFormula) -> bool:
    return isinstance(f, Atom) and isinstance(f.expr, Literal) and f.expr.value is False


def sub_formulas(f: LtlFormula) -> Iterator[LtlFormula]:
    if isinstance(f, (Not, Next, Finally, Globally, Window)):
        yield f.arg
    elif isinstance(f, (And, Or)):
        yield from f.args
    elif isinstance(f, (Implies, Iff, Until)):
        yield f.left
        yield f.right


def atoms(f: LtlFormula) -> list:
    """Atoms of f in first-occurrence order, without duplicates"""
    found = []

    def walk(node):
        if isinstance(node, Atom):
            if not isinstance(node.expr, Literal) and node not in found:
                found.append(node)
            return
        for sub in sub_formulas(node):
            walk(sub)

    walk(f)
    return found


def depth(f: LtlFormula) -> int:
    subs = list(sub_formulas(f))
    return 0 if not subs else 1 + max(depth(s) for s in subs)
