"""Abstract syntax of interface-aware STL formulas and specifications."""
from __future__ import annotations

import hashlib
from collections.abc import Iterator
from dataclasses import dataclass, field

from ..predicates import Atom, _render
from ..signals import Kind, VariableProfile, check_variable_set


class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: int = 0
    hi: int | None = None  # None is +infinity

    def __post_init__(self):
        if self.lo < 0 or (self.hi is not None and self.hi < self.lo):
            raise FormulaError(f"malformed interval {self}")

    @property
    def bounded(self) -> bool:
        return self.hi is not None

    def __str__(self):
        return f"[{self.lo},{'inf)' if self.hi is None else f'{self.hi}]'}"


UNBOUNDED = Interval(0, None)


class Formula:
    """Base class of formula nodes; nodes are immutable and hashable."""

    def children(self) -> tuple["Formula", ...]:
        return ()

    def walk(self) -> Iterator["Formula"]:
        yield self
        for c in self.children():
            yield from c.walk()

    def __invert__(self):
        return Not(self)

    def __or__(self, other):
        return Or(self, other)

    def __and__(self, other):
        return And(self, other)


@dataclass(frozen=True)
class TrueF(Formula):
    def __str__(self):
        return "true"


TRUE = TrueF()


@dataclass(frozen=True)
class Pred(Formula):
    """Atomic comparison; robustness is the atom's affine value."""

    atom: Atom

    def __str__(self):
        return _render(self.atom.coeffs, self.atom.offset, self.atom.op)


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula

    def children(self):
        return (self.arg,)

    def __str__(self):
        return "false" if self.arg == TRUE else f"not {_paren(self.arg)}"


FALSE = Not(TRUE)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} or {self.right})"


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} and {self.right})"


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} -> {self.right})"


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula
    interval: Interval = UNBOUNDED

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} U{self.interval} {self.right})"


@dataclass(frozen=True)
class Since(Formula):
    left: Formula
    right: Formula
    interval: Interval = UNBOUNDED

    def children(self):
        return (self.left, self.right)

    def __str__(self):
        return f"({self.left} S{self.interval} {self.right})"


@dataclass(frozen=True)
class _Unary(Formula):
    arg: Formula
    interval: Interval = UNBOUNDED
    symbol = "?"

    def children(self):
        return (self.arg,)

    def __str__(self):
        return f"{self.symbol}{self.interval} {_paren(self.arg)}"


class Eventually(_Unary):
    symbol = "F"


class Always(_Unary):
    symbol = "G"


class Once(_Unary):
    symbol = "P"


class Historically(_Unary):
    symbol = "H"


def _paren(f: Formula) -> str:
    s = str(f)
    return s if isinstance(f, (TrueF, Pred)) or s.startswith("(") else f"({s})"


FUTURE = (Until, Eventually, Always)
PAST = (Since, Once, Historically)


def to_core(phi: Formula) -> Formula:
    """Rewrite derived operators into True, Pred, Not, Or, Until and Since."""
    if isinstance(phi, (TrueF, Pred)):
        return phi
    if isinstance(phi, Not):
        return Not(to_core(phi.arg))
    if isinstance(phi, Or):
        return Or(to_core(phi.left), to_core(phi.right))
    if isinstance(phi, And):
        return Not(Or(Not(to_core(phi.left)), Not(to_core(phi.right))))
    if isinstance(phi, Implies):
        return Or(Not(to_core(phi.left)), to_core(phi.right))
    if isinstance(phi, Until):
        return Until(to_core(phi.left), to_core(phi.right), phi.interval)
    if isinstance(phi, Since):
        return Since(to_core(phi.left), to_core(phi.right), phi.interval)
    arg = to_core(phi.arg)
    if isinstance(phi, Eventually):
        return Until(TRUE, arg, phi.interval)
    if isinstance(phi, Always):
        return Not(Until(TRUE, Not(arg), phi.interval))
    if isinstance(phi, Once):
        return Since(TRUE, arg, phi.interval)
    if isinstance(phi, Historically):
        return Not(Since(TRUE, Not(arg), phi.interval))
    raise FormulaError(f"unknown formula node {phi!r}")


def atoms_of(phi: Formula) -> list[Atom]:
    seen: dict[Atom, None] = {}
    for node in phi.walk():
        if isinstance(node, Pred):
            seen.setdefault(node.atom)
    return list(seen)


def variables_of(phi: Formula) -> frozenset[str]:
    return frozenset(n for a in atoms_of(phi) for n in a.variables)


def depth(phi: Formula) -> int:
    kids = phi.children()
    return 1 + max((depth(k) for k in kids), default=0)


@dataclass(frozen=True)
class IaStlSpec:
    inputs: tuple[VariableProfile, ...]
    outputs: tuple[VariableProfile, ...]
    formula: Formula
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        inputs = check_variable_set(self.inputs)
        outputs = check_variable_set(self.outputs)
        if any(v.kind is not Kind.INPUT for v in inputs) or any(v.kind is not Kind.OUTPUT for v in outputs):
            raise FormulaError("input/output profiles carry the wrong kind")
        names_in = {v.name for v in inputs}
        clash = names_in & {v.name for v in outputs}
        if clash:
            raise FormulaError(f"variables declared as both input and output: {sorted(clash)}")
        undeclared = variables_of(self.formula) - names_in - {v.name for v in outputs}
        if undeclared:
            raise FormulaError(f"undeclared variables {sorted(undeclared)}")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)

    @property
    def variables(self) -> tuple[VariableProfile, ...]:
        return self.inputs + self.outputs

    @property
    def input_names(self) -> list[str]:
        return [v.name for v in self.inputs]

    @property
    def output_names(self) -> list[str]:
        return [v.name for v in self.outputs]

    def digest(self) -> str:
        text = self.source if self.source is not None else repr((self.variables, str(self.formula)))
        return hashlib.sha256(text.encode()).hexdigest()
