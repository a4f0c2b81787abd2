"""Symbolic automata: guarded transition systems over real-valued variables.

Guards are :class:`~stlcov.predicates.Predicate` objects.  Every location
carries a verdict label; error-sinks are absorbing.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

from .predicates import (Predicate, PredicateError, enumerate_minterms, evaluate,
                         find_model, is_satisfiable, predicate_under, universe_of)
from .signals import Kind, VariableProfile, box_of, check_variable_set

FORMAT_VERSION = 1


class AutomatonError(ValueError):
    pass


class SchemaError(AutomatonError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class ValidationBug(RuntimeError):
    """Raised when a run hits zero or several enabled transitions."""


class LocationKind(str, Enum):
    ACTIVE = "active"
    ACCEPTING = "accepting"
    SINK = "error-sink"


@dataclass(frozen=True)
class Location:
    id: int
    name: str
    verdict: LocationKind = LocationKind.ACTIVE

    def __post_init__(self):
        object.__setattr__(self, "verdict", LocationKind(self.verdict))


@dataclass(frozen=True)
class Transition:
    id: int
    src: int
    dst: int
    guard: Predicate


@dataclass(frozen=True)
class Run:
    """Alternating locations and transition ids; ``len(locations) == len(transitions) + 1``."""

    locations: tuple[int, ...]
    transitions: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def last(self) -> int:
        return self.locations[-1]


class SymbolicAutomaton:
    def __init__(self, variables: Iterable[VariableProfile], locations: Iterable[Location],
                 initial: Iterable[int], transitions: Iterable[Transition],
                 final: Iterable[int] | None = None, spec_hash: str | None = None):
        self.variables = check_variable_set(variables)
        self.locations = tuple(sorted(locations, key=lambda l: l.id))
        self.transitions = tuple(sorted(transitions, key=lambda t: t.id))
        self.initial = tuple(initial)
        ids = [l.id for l in self.locations]
        if len(set(ids)) != len(ids):
            raise AutomatonError("duplicate location ids")
        tids = [t.id for t in self.transitions]
        if len(set(tids)) != len(tids):
            raise AutomatonError("duplicate transition ids")
        known = set(ids)
        for t in self.transitions:
            if t.src not in known or t.dst not in known:
                raise AutomatonError(f"transition {t.id} references an unknown location")
        if not set(self.initial) <= known:
            raise AutomatonError("initial location not among the locations")
        if final is None:
            final = [l.id for l in self.locations if l.verdict is LocationKind.ACCEPTING]
        self.final = frozenset(final)
        if not self.final <= known:
            raise AutomatonError("final location not among the locations")
        self.spec_hash = spec_hash
        self._loc = {l.id: l for l in self.locations}
        self._trans = {t.id: t for t in self.transitions}
        self._out: dict[int, list[Transition]] = {i: [] for i in ids}
        for t in self.transitions:
            self._out[t.src].append(t)

    # -- accessors
    @property
    def init(self) -> int:
        if len(self.initial) != 1:
            raise AutomatonError("automaton does not have a unique initial location")
        return self.initial[0]

    @property
    def inputs(self) -> tuple[VariableProfile, ...]:
        return tuple(v for v in self.variables if v.kind is Kind.INPUT)

    @property
    def outputs(self) -> tuple[VariableProfile, ...]:
        return tuple(v for v in self.variables if v.kind is Kind.OUTPUT)

    @property
    def box(self) -> dict[str, tuple[float, float]]:
        return box_of(self.variables)

    def location(self, q: int) -> Location:
        return self._loc[q]

    def transition(self, tid: int) -> Transition:
        return self._trans[tid]

    def outgoing(self, q: int) -> list[Transition]:
        return self._out[q]

    def sinks(self) -> list[int]:
        return [l.id for l in self.locations if l.verdict is LocationKind.SINK]

    def without(self, removed: Iterable[int]) -> "SymbolicAutomaton":
        """Copy with the given transition ids deleted."""
        removed = set(removed)
        return SymbolicAutomaton(self.variables, self.locations, self.initial,
                                 [t for t in self.transitions if t.id not in removed],
                                 self.final, self.spec_hash)

    def step(self, q: int, v: Mapping[str, float]) -> Transition | None:
        """The transition enabled by ``v`` from ``q``; None if there is none."""
        enabled = [t for t in self._out[q] if evaluate(v, t.guard)]
        if len(enabled) > 1:
            raise ValidationBug(
                f"location {q}: transitions {[t.id for t in enabled]} all enabled by {dict(v)}")
        return enabled[0] if enabled else None

    # -- comparison and hashing
    def to_json(self) -> dict:
        return {
            "format": FORMAT_VERSION,
            "variables": [{"name": v.name, "kind": v.kind.value, "lo": v.lo, "hi": v.hi}
                          for v in self.variables],
            "locations": [{"id": l.id, "name": l.name, "verdict": l.verdict.value}
                          for l in self.locations],
            "initial": list(self.initial),
            "final": sorted(self.final),
            "transitions": [{"id": t.id, "src": t.src, "dst": t.dst, "guard": t.guard.to_json()}
                            for t in self.transitions],
            "spec_hash": self.spec_hash,
        }

    def digest(self) -> str:
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, SymbolicAutomaton):
            return NotImplemented
        return (self.variables == other.variables and self.locations == other.locations
                and self.initial == other.initial and self.final == other.final
                and self.transitions == other.transitions)

    def __hash__(self):
        return hash(self.digest())

    def __repr__(self):
        return (f"SymbolicAutomaton(|Q|={len(self.locations)}, "
                f"|Δ|={len(self.transitions)}, init={list(self.initial)})")


# ---------------------------------------------------------------------------
# validation

@dataclass
class ValidationReport:
    deterministic: bool
    complete: bool
    all_guards_satisfiable: bool
    witnesses: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.deterministic and self.complete and self.all_guards_satisfiable


def validate(A: SymbolicAutomaton, cap: int = 20) -> ValidationReport:
    """Exact determinism, completeness and guard-satisfiability checks."""
    box = A.box
    witnesses = []
    sat = True
    for t in A.transitions:
        if not is_satisfiable(t.guard, box):
            sat = False
            witnesses.append(f"transition {t.id} ({t.src}->{t.dst}): unsatisfiable guard {t.guard}")
    det = len(A.initial) == 1
    if not det:
        witnesses.append(f"{len(A.initial)} initial locations")
    complete = True
    for loc in A.locations:
        out = A.outgoing(loc.id)
        for t1, t2 in itertools.combinations(out, 2):
            both = find_model(t1.guard & t2.guard, box)
            if both is not None:
                det = False
                witnesses.append(f"location {loc.id}: transitions {t1.id} and {t2.id} "
                                 f"both enabled at {dict(both)}")
        # a cell of the guards' atom universe reached by no guard is uncovered
        atoms = universe_of(t.guard for t in out)
        try:
            cells = enumerate_minterms(atoms, box, cap=cap)
        except PredicateError as exc:
            complete = False
            witnesses.append(f"location {loc.id}: completeness undecided ({exc})")
            continue
        for m in cells:
            a = m.assignment()
            if not any(predicate_under(t.guard, a) for t in out):
                complete = False
                witnesses.append(f"location {loc.id}: no transition enabled on {m}")
                break
    return ValidationReport(det, complete, sat, witnesses)


def induced_run(A: SymbolicAutomaton, w: Sequence[Mapping[str, float]]) -> Run:
    """The unique run of a deterministic complete automaton on ``w``."""
    q = A.init
    locs, trans = [q], []
    for i, v in enumerate(w):
        t = A.step(q, v)
        if t is None:
            raise ValidationBug(f"location {q}: no transition enabled at step {i} by {dict(v)}")
        q = t.dst
        locs.append(q)
        trans.append(t.id)
    return Run(tuple(locs), tuple(trans))


# ---------------------------------------------------------------------------
# file I/O

def _require(obj, key: str, kind, path: str):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    if key not in obj:
        raise SchemaError(f"{path}.{key}", "missing")
    value = obj[key]
    if kind is float:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    elif kind is int:
        ok = isinstance(value, int) and not isinstance(value, bool)
    else:
        ok = isinstance(value, kind)
    if not ok:
        raise SchemaError(f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}")
    return value


def from_json(obj: Mapping) -> SymbolicAutomaton:
    """Build an automaton from its JSON form; schema errors name the offending path."""
    if not isinstance(obj, dict):
        raise SchemaError("$", "expected an object")
    variables = []
    for i, v in enumerate(_require(obj, "variables", list, "$")):
        p = f"$.variables[{i}]"
        kind = _require(v, "kind", str, p)
        if kind not in ("input", "output"):
            raise SchemaError(f"{p}.kind", f"unknown kind {kind!r}")
        try:
            variables.append(VariableProfile(_require(v, "name", str, p), Kind(kind),
                                             float(_require(v, "lo", float, p)),
                                             float(_require(v, "hi", float, p))))
        except ValueError as exc:
            raise SchemaError(p, str(exc)) from None
    locations = []
    for i, l in enumerate(_require(obj, "locations", list, "$")):
        p = f"$.locations[{i}]"
        verdict = l.get("verdict", "active") if isinstance(l, dict) else None
        if verdict not in {k.value for k in LocationKind}:
            raise SchemaError(f"{p}.verdict", f"unknown verdict {verdict!r}")
        locations.append(Location(_require(l, "id", int, p), str(l.get("name", "")), verdict))
    transitions = []
    for i, t in enumerate(_require(obj, "transitions", list, "$")):
        p = f"$.transitions[{i}]"
        try:
            guard = Predicate.from_json(_require(t, "guard", list, p))
        except (PredicateError, KeyError, TypeError) as exc:
            raise SchemaError(f"{p}.guard", str(exc)) from None
        transitions.append(Transition(_require(t, "id", int, p), _require(t, "src", int, p),
                                      _require(t, "dst", int, p), guard))
    initial = _require(obj, "initial", list, "$")
    final = obj.get("final")
    try:
        return SymbolicAutomaton(variables, locations, initial, transitions, final,
                                 obj.get("spec_hash"))
    except (AutomatonError, ValueError) as exc:
        raise SchemaError("$", str(exc)) from None


def save(A: SymbolicAutomaton, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(A.to_json(), fh, indent=2)
        fh.write("\n")


def load(path) -> SymbolicAutomaton:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from None
    return from_json(obj)


# ---------------------------------------------------------------------------
# Graphviz

def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def export_dot(A: SymbolicAutomaton, annotations: Mapping | None = None) -> str:
    """DOT text; with ``annotations`` visited elements are green with counts, the rest red.

    ``annotations`` maps ``"locations"`` and ``"transitions"`` to ``{id: count}``.
    """
    loc_counts = dict(annotations.get("locations", {})) if annotations is not None else None
    tr_counts = dict(annotations.get("transitions", {})) if annotations is not None else None
    lines = ["digraph automaton {", "  rankdir=LR;", '  node [shape=circle];',
             '  __start [shape=point, label=""];']
    for loc in A.locations:
        attrs = []
        label = f"q{loc.id}"
        if loc.verdict is LocationKind.ACCEPTING:
            attrs.append("shape=doublecircle")
        elif loc.verdict is LocationKind.SINK:
            attrs.append("shape=octagon")
        if loc_counts is not None:
            n = loc_counts.get(loc.id, 0)
            attrs.append(f'color={"green" if n else "red"}')
            if n:
                label += f"\\n{n}"
        attrs.insert(0, f'label="{label}"')
        lines.append(f"  q{loc.id} [{', '.join(attrs)}];")
    for q in A.initial:
        lines.append(f"  __start -> q{q};")
    for t in A.transitions:
        label = f"t{t.id}: {_dot_escape(str(t.guard))}"
        attrs = []
        if tr_counts is not None:
            n = tr_counts.get(t.id, 0)
            attrs.append(f'color={"green" if n else "red"}')
            if n:
                label += f" [{n}]"
        attrs.insert(0, f'label="{label}"')
        lines.append(f"  q{t.src} -> q{t.dst} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
