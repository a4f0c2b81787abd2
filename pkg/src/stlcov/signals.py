"""Variables, valuations and discrete-time signals.

Time is 0-indexed: a signal of length n covers steps 0..n-1.
"""
from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum


class SignalError(ValueError):
    pass


class DisjointnessViolation(SignalError):
    pass


class LengthMismatch(SignalError):
    pass


class UnknownVariable(SignalError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown variable"


class DomainViolation(SignalError):
    pass


class Kind(str, Enum):
    INPUT = "input"
    OUTPUT = "output"


@dataclass(frozen=True)
class VariableProfile:
    name: str
    kind: Kind
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if not self.name.isidentifier():
            raise SignalError(f"invalid variable name {self.name!r}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or self.lo > self.hi:
            raise SignalError(f"variable {self.name}: bad domain [{self.lo}, {self.hi}]")

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    @property
    def is_input(self) -> bool:
        return self.kind is Kind.INPUT


def check_variable_set(variables: Iterable[VariableProfile]) -> tuple[VariableProfile, ...]:
    """Return the profiles as a tuple, rejecting duplicate names."""
    out = tuple(variables)
    seen = set()
    for var in out:
        if var.name in seen:
            raise SignalError(f"duplicate variable {var.name!r}")
        seen.add(var.name)
    return out


def box_of(variables: Iterable[VariableProfile]) -> dict[str, tuple[float, float]]:
    return {v.name: (v.lo, v.hi) for v in variables}


class Valuation(Mapping):
    """Immutable map from variable names to floats.

    When ``variables`` is given, the valuation must bind exactly those
    variables and every value must lie in its domain.
    """

    __slots__ = ("_data",)

    def __init__(self, bindings: Mapping[str, float] | Iterable[tuple[str, float]] = (),
                 variables: Iterable[VariableProfile] | None = None):
        data = {k: float(v) for k, v in dict(bindings).items()}
        if variables is not None:
            names = set()
            for var in variables:
                names.add(var.name)
                if var.name not in data:
                    raise UnknownVariable(f"valuation does not bind {var.name!r}")
                value = data[var.name]
                if not var.contains(value):
                    raise DomainViolation(
                        f"{var.name}={value} outside [{var.lo}, {var.hi}]")
            extra = set(data) - names
            if extra:
                raise UnknownVariable(f"undeclared variables {sorted(extra)}")
        object.__setattr__(self, "_data", data)

    def __setattr__(self, name, value):
        raise AttributeError("Valuation is immutable")

    def __getitem__(self, key: str) -> float:
        try:
            return self._data[key]
        except KeyError:
            raise UnknownVariable(f"unknown variable {key!r}") from None

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __hash__(self):
        return hash(frozenset(self._data.items()))

    def __repr__(self):
        inner = ", ".join(f"{k}: {v:g}" for k, v in self._data.items())
        return f"Valuation({{{inner}}})"

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self._data)

    def as_dict(self) -> dict[str, float]:
        return dict(self._data)


def compose(v1: Mapping[str, float], v2: Mapping[str, float]) -> Valuation:
    """Composition ``v1 || v2`` of valuations over disjoint variable sets."""
    shared = set(v1) & set(v2)
    if shared:
        raise DisjointnessViolation(f"variables bound on both sides: {sorted(shared)}")
    data = dict(v1.items())
    data.update(v2.items())
    return Valuation(data)


def project(v: Mapping[str, float], names: Iterable[str]) -> Valuation:
    names = list(names)
    missing = [n for n in names if n not in v]
    if missing:
        raise UnknownVariable(f"cannot project onto unbound {missing}")
    return Valuation({n: v[n] for n in names})


class Signal(Sequence):
    """A finite sequence of valuations that all bind the same variables."""

    __slots__ = ("_steps", "_names")

    def __init__(self, steps: Iterable[Mapping[str, float]] = (), variables=None):
        vals = []
        names = None
        for step in steps:
            val = step if isinstance(step, Valuation) and variables is None \
                else Valuation(step, variables)
            if names is None:
                names = val.variables
            elif val.variables != names:
                raise SignalError("all steps of a signal must bind the same variables")
            vals.append(val)
        if names is None and variables is not None:
            names = frozenset(v.name for v in variables)
        self._steps = tuple(vals)
        self._names = names if names is not None else frozenset()

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Signal(self._steps[i])
        return self._steps[i]

    def __len__(self) -> int:
        return len(self._steps)

    def __eq__(self, other):
        if isinstance(other, Signal):
            return self._steps == other._steps
        return NotImplemented

    def __hash__(self):
        return hash(self._steps)

    def __repr__(self):
        return f"Signal({list(self._steps)!r})"

    @property
    def variables(self) -> frozenset[str]:
        return self._names

    def column(self, name: str) -> list[float]:
        return [step[name] for step in self._steps]

    def append(self, step: Mapping[str, float]) -> "Signal":
        return Signal(self._steps + (Valuation(step),))

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[float]], variables=None) -> "Signal":
        lengths = {len(c) for c in columns.values()}
        if len(lengths) > 1:
            raise LengthMismatch(f"columns have different lengths {sorted(lengths)}")
        n = lengths.pop() if lengths else 0
        return cls(({k: col[t] for k, col in columns.items()} for t in range(n)), variables)


def compose_signals(w1: Signal, w2: Signal) -> Signal:
    if len(w1) != len(w2):
        raise LengthMismatch(f"cannot compose signals of lengths {len(w1)} and {len(w2)}")
    shared = w1.variables & w2.variables
    if shared:
        raise DisjointnessViolation(f"variables bound on both sides: {sorted(shared)}")
    return Signal(compose(a, b) for a, b in zip(w1, w2))


def read_trace_csv(path) -> Signal:
    """Read a trace file with header ``t,<var>,...`` and strictly increasing t from 0."""
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if row.strip() and not row.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise SignalError(f"{path}: empty trace file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "t":
            raise SignalError(f"{path}: header must start with 't'")
        names = header[1:]
        steps = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SignalError(f"{path}:{lineno}: expected {len(header)} fields")
            t = int(float(row[0]))
            if t != len(steps):
                raise SignalError(f"{path}:{lineno}: expected t={len(steps)}, got {t}")
            steps.append({n: float(x) for n, x in zip(names, row[1:])})
    if not steps:
        raise SignalError(f"{path}: trace has no samples")
    return Signal(steps)


def write_trace_csv(w: Signal, path, order: Sequence[str] | None = None) -> None:
    names = list(order) if order is not None else sorted(w.variables)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *names])
        for t, step in enumerate(w):
            writer.writerow([t, *(repr(step[n]) for n in names)])
