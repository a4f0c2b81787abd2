"""Location and transition coverage of a symbolic automaton by a test suite."""
from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .automaton import Run, SymbolicAutomaton


class DegenerateCriterion(ValueError):
    pass


class CriterionKind(str, Enum):
    LOCATION = "location"
    TRANSITION = "transition"


@dataclass(frozen=True)
class Criterion:
    kind: CriterionKind
    requirements: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "kind", CriterionKind(self.kind))
        object.__setattr__(self, "requirements", frozenset(self.requirements))

    @classmethod
    def of(cls, A: SymbolicAutomaton, kind: CriterionKind | str) -> "Criterion":
        kind = CriterionKind(kind)
        if kind is CriterionKind.LOCATION:
            return cls(kind, frozenset(l.id for l in A.locations))
        return cls(kind, frozenset(t.id for t in A.transitions))


def requirements_of(run: Run, criterion: Criterion | CriterionKind | str) -> set[int]:
    """Requirements a run satisfies: its locations (q0 included) or its transitions."""
    kind = criterion.kind if isinstance(criterion, Criterion) else CriterionKind(criterion)
    items = run.locations if kind is CriterionKind.LOCATION else run.transitions
    return set(items)


def _visits(run: Run, kind: CriterionKind):
    return run.locations if kind is CriterionKind.LOCATION else run.transitions


def percent(ratio: Fraction) -> int:
    """Integer percentage rounded half-up: 5/14 -> 36."""
    return math.floor(Fraction(ratio) * 100 + Fraction(1, 2))


@dataclass
class SuiteEntry:
    id: int
    inputs: list[dict[str, float]]
    run: Run


@dataclass
class CoverageLedger:
    criterion: Criterion
    counts: Counter = field(default_factory=Counter)
    per_test: dict[int, frozenset[int]] = field(default_factory=dict)
    tests: list[SuiteEntry] = field(default_factory=list)

    def record(self, run: Run, inputs: Iterable[Mapping[str, float]] = (), test_id: int | None = None
               ) -> set[int]:
        """Add one test; returns the requirements it satisfied for the first time."""
        before = self.satisfied
        tid = len(self.tests) if test_id is None else test_id
        for item in _visits(run, self.criterion.kind):
            if item in self.criterion.requirements:
                self.counts[item] += 1
        reqs = frozenset(requirements_of(run, self.criterion) & self.criterion.requirements)
        self.per_test[tid] = reqs
        self.tests.append(SuiteEntry(tid, [dict(v) for v in inputs], run))
        return set(reqs - before)

    @property
    def satisfied(self) -> frozenset[int]:
        return frozenset(r for r, n in self.counts.items() if n > 0)

    def ratio(self) -> Fraction:
        return coverage_ratio(self, self.criterion)

    def to_json(self) -> dict:
        ratio = self.ratio()
        return {
            "criterion": self.criterion.kind.value,
            "total": len(self.criterion.requirements),
            "satisfied": sorted(self.satisfied),
            "counts": {str(k): self.counts[k] for k in sorted(self.counts)},
            "ratio": f"{ratio.numerator}/{ratio.denominator}",
            "percent": percent(ratio),
            "tests": [{"id": t.id, "inputs": t.inputs,
                       "run": {"locations": list(t.run.locations),
                               "transitions": list(t.run.transitions)}}
                      for t in self.tests],
        }


def coverage_ratio(ledger: CoverageLedger | Iterable[int], criterion: Criterion) -> Fraction:
    """|R(T, C)| / |C| as an exact fraction."""
    if not criterion.requirements:
        raise DegenerateCriterion("criterion has no requirements")
    got = ledger.satisfied if isinstance(ledger, CoverageLedger) else frozenset(ledger)
    return Fraction(len(got & criterion.requirements), len(criterion.requirements))
