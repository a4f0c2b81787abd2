"""Transition-guard predicates: DNF over affine atoms on bounded boxes.

An atom is ``sum(c_i * x_i) + c_0 > 0`` (strict) or ``>= 0``.  A literal is an
atom with a polarity, a clause is a conjunction of literals and a predicate is
a disjunction of clauses.  The empty predicate is False, the predicate holding
one empty clause is True.

Feasibility, centering and distance are exact interval arithmetic when every
literal of a clause constrains a single variable, and a small linear program
otherwise.
"""
from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .signals import UnknownVariable, Valuation

Box = Mapping[str, tuple[float, float]]

# strict literals count as satisfiable only above this slack (LP path only)
STRICT_TOL = 1e-9
DEFAULT_MINTERM_CAP = 16


class PredicateError(ValueError):
    pass


class MixedAtom(PredicateError):
    pass


class CapExceeded(PredicateError):
    pass


def _fmt(x: float) -> str:
    return f"{x + 0.0:g}" if math.isfinite(x) else repr(x)


@dataclass(frozen=True, order=True)
class Atom:
    """``sum(coeffs) + offset > 0`` if strict, else ``>= 0``."""

    coeffs: tuple[tuple[str, float], ...]
    offset: float = 0.0
    strict: bool = False

    def __post_init__(self):
        cleaned = tuple(sorted((str(k), float(c) + 0.0) for k, c in dict(self.coeffs).items() if c != 0))
        if not cleaned:
            raise PredicateError("atom must mention at least one variable")
        if not all(math.isfinite(c) for _, c in cleaned) or not math.isfinite(self.offset):
            raise PredicateError("atom coefficients must be finite")
        object.__setattr__(self, "coeffs", cleaned)
        object.__setattr__(self, "offset", float(self.offset) + 0.0)

    @classmethod
    def make(cls, coeffs: Mapping[str, float], offset: float = 0.0, strict: bool = False) -> "Atom":
        return cls(tuple(coeffs.items()), offset, strict)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(k for k, _ in self.coeffs)

    @property
    def op(self) -> str:
        return ">" if self.strict else ">="

    def value(self, v: Mapping[str, float]) -> float:
        total = self.offset
        for name, c in self.coeffs:
            try:
                total += c * v[name]
            except KeyError:
                raise UnknownVariable(f"unbound variable {name!r}") from None
        return total

    def holds(self, v: Mapping[str, float]) -> bool:
        e = self.value(v)
        return e > 0 if self.strict else e >= 0

    def canonical(self) -> tuple["Atom", bool]:
        """Scale-free representative and the polarity relating it to ``self``.

        ``self`` holds exactly when the returned atom has the returned polarity.
        """
        lead = self.coeffs[0][1]
        scale = abs(lead)
        coeffs = {k: c / scale for k, c in self.coeffs}
        offset = self.offset / scale
        if lead > 0:
            return Atom.make(coeffs, offset, self.strict), True
        # e >= 0  <=>  not(-e > 0);  e > 0  <=>  not(-e >= 0)
        neg = {k: -c for k, c in coeffs.items()}
        return Atom.make(neg, -offset, not self.strict), False

    def __str__(self):
        return _render(self.coeffs, self.offset, self.op)


_FLIP = {">": "<", ">=": "<=", "<": ">", "<=": ">="}


def _render(coeffs, offset: float, rel: str) -> str:
    """Text of ``sum(coeffs) + offset <rel> 0`` with the constant moved right."""
    if len(coeffs) == 1:
        (name, c), = coeffs
        return f"{name} {rel if c > 0 else _FLIP[rel]} {_fmt(-offset / c)}"
    return f"{_affine_str(coeffs)} {rel} {_fmt(-offset)}"


def _affine_str(coeffs) -> str:
    parts = []
    for i, (name, c) in enumerate(coeffs):
        mag = abs(c)
        term = name if mag == 1 else f"{_fmt(mag)}*{name}"
        if i == 0:
            parts.append(term if c > 0 else f"-{term}")
        else:
            parts.append(f"{'+' if c > 0 else '-'} {term}")
    return " ".join(parts)


@dataclass(frozen=True, order=True)
class Literal:
    atom: Atom
    positive: bool = True

    def holds(self, v: Mapping[str, float]) -> bool:
        return self.atom.holds(v) == self.positive

    def negate(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def constraint(self) -> tuple[dict[str, float], float, bool]:
        """As ``g.x + h`` compared (> if strict else >=) against zero."""
        g = dict(self.atom.coeffs)
        if self.positive:
            return g, self.atom.offset, self.atom.strict
        return {k: -c for k, c in g.items()}, -self.atom.offset, not self.atom.strict

    def __str__(self):
        if self.positive:
            return str(self.atom)
        return _render(self.atom.coeffs, self.atom.offset, "<=" if self.atom.strict else "<")

    def to_json(self) -> dict:
        return {"coeffs": dict(self.atom.coeffs), "offset": self.atom.offset,
                "op": self.atom.op, "neg": not self.positive}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Literal":
        op = obj["op"]
        if op not in (">", ">="):
            raise PredicateError(f"unknown literal op {op!r}")
        atom = Atom.make(obj["coeffs"], obj.get("offset", 0.0), op == ">")
        return cls(atom, not obj.get("neg", False))


Clause = tuple[Literal, ...]


def _canonical_clause(literals: Iterable[Literal]) -> Clause | None:
    """Sorted, deduplicated clause; None if it contains complementary literals."""
    lits = sorted(set(literals))
    seen: dict[Atom, bool] = {}
    for lit in lits:
        if seen.get(lit.atom, lit.positive) != lit.positive:
            return None
        seen[lit.atom] = lit.positive
    return tuple(lits)


@dataclass(frozen=True)
class Predicate:
    clauses: tuple[Clause, ...] = field(default=())

    def __post_init__(self):
        out, seen = [], set()
        for clause in self.clauses:
            canon = _canonical_clause(clause)
            if canon is None or canon in seen:
                continue
            seen.add(canon)
            out.append(canon)
        object.__setattr__(self, "clauses", tuple(out))

    @classmethod
    def true(cls) -> "Predicate":
        return cls(((),))

    @classmethod
    def false(cls) -> "Predicate":
        return cls(())

    @classmethod
    def of(cls, *literals: Literal | Atom) -> "Predicate":
        """Single-clause predicate from literals (bare atoms count as positive)."""
        lits = [x if isinstance(x, Literal) else Literal(x) for x in literals]
        return cls((tuple(lits),))

    @property
    def is_true(self) -> bool:
        return () in self.clauses

    @property
    def is_false(self) -> bool:
        return not self.clauses

    @property
    def atoms(self) -> frozenset[Atom]:
        return frozenset(lit.atom for c in self.clauses for lit in c)

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(n for a in self.atoms for n in a.variables)

    def __or__(self, other: "Predicate") -> "Predicate":
        return Predicate(self.clauses + other.clauses)

    def __and__(self, other: "Predicate") -> "Predicate":
        return Predicate(tuple(a + b for a in self.clauses for b in other.clauses))

    def __str__(self):
        if self.is_false:
            return "false"
        parts = []
        for clause in self.clauses:
            if not clause:
                return "true"
            body = " and ".join(str(l) for l in clause)
            parts.append(f"({body})" if len(self.clauses) > 1 and len(clause) > 1 else body)
        return " or ".join(parts)

    def to_json(self) -> list:
        return [[lit.to_json() for lit in c] for c in self.clauses]

    @classmethod
    def from_json(cls, obj) -> "Predicate":
        if not isinstance(obj, list):
            raise PredicateError("predicate must be a list of clauses")
        return cls(tuple(tuple(Literal.from_json(l) for l in c) for c in obj))


def evaluate(v: Mapping[str, float], psi: Predicate) -> bool:
    return any(all(lit.holds(v) for lit in clause) for clause in psi.clauses)


def clause_holds(v: Mapping[str, float], clause: Clause) -> bool:
    return all(lit.holds(v) for lit in clause)


# ---------------------------------------------------------------------------
# single-clause geometry

def _is_axis_aligned(clause: Clause) -> bool:
    return all(len(lit.atom.coeffs) == 1 for lit in clause)


@dataclass
class _Interval:
    lo: float
    hi: float
    lo_open: bool = False
    hi_open: bool = False

    def cut_below(self, bound: float, strict: bool):
        if bound > self.lo or (bound == self.lo and strict):
            self.lo, self.lo_open = bound, strict

    def cut_above(self, bound: float, strict: bool):
        if bound < self.hi or (bound == self.hi and strict):
            self.hi, self.hi_open = bound, strict

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and (self.lo_open or self.hi_open))


def _intervals(clause: Clause, box: Box) -> dict[str, _Interval]:
    out: dict[str, _Interval] = {}
    for lit in clause:
        g, h, strict = lit.constraint()
        (name, c), = g.items()
        if name not in box:
            raise UnknownVariable(f"variable {name!r} has no domain")
        iv = out.get(name)
        if iv is None:
            lo, hi = box[name]
            iv = out[name] = _Interval(lo, hi)
        bound = -h / c
        if c > 0:
            iv.cut_below(bound, strict)
        else:
            iv.cut_above(bound, strict)
    return out


def _lp_rows(clause: Clause, names: Sequence[str]):
    index = {n: i for i, n in enumerate(names)}
    rows = []
    for lit in clause:
        g, h, strict = lit.constraint()
        vec = np.zeros(len(names))
        for k, c in g.items():
            vec[index[k]] = c
        rows.append((vec, h, strict))
    return rows


def _clause_vars(clause: Clause, box: Box) -> list[str]:
    names = sorted({n for lit in clause for n in lit.atom.variables})
    for n in names:
        if n not in box:
            raise UnknownVariable(f"variable {n!r} has no domain")
    return names


def _solve(c, A_ub, b_ub, bounds):
    res = linprog(c, A_ub=A_ub if len(A_ub) else None, b_ub=b_ub if len(b_ub) else None,
                  bounds=bounds, method="highs")
    return res if res.status == 0 else None


def _lp_center(clause: Clause, box: Box, names: list[str], strict_only: bool):
    """Maximise the minimum normalised slack.

    With ``strict_only`` the slack variable applies to strict literals and
    everything else is a hard constraint; otherwise it applies to every
    literal and every box face (a Chebyshev-style centre).
    """
    d = len(names)
    rows = _lp_rows(clause, names)
    A, b = [], []
    for vec, h, strict in rows:
        norm = np.abs(vec).sum()
        soft = strict or not strict_only
        A.append(np.append(-vec / norm, 1.0 if soft else 0.0))
        b.append(h / norm)
    bounds = [box[n] for n in names]
    if not strict_only:
        for i, (lo, hi) in enumerate(bounds):
            e = np.zeros(d + 1)
            e[i], e[d] = -1.0, 1.0
            A.append(e)
            b.append(-lo)
            e = np.zeros(d + 1)
            e[i], e[d] = 1.0, 1.0
            A.append(e)
            b.append(hi)
    c = np.zeros(d + 1)
    c[d] = -1.0
    res = _solve(c, np.array(A), np.array(b), bounds + [(None, 1.0 if strict_only else None)])
    if res is None:
        return None
    return res.x[:d], res.x[d]


def _clause_model(clause: Clause, box: Box) -> dict[str, float] | None:
    """A model of one clause restricted to its own variables, or None."""
    if _is_axis_aligned(clause):
        ivs = _intervals(clause, box)
        if any(iv.empty for iv in ivs.values()):
            return None
        return {n: (iv.lo + iv.hi) / 2 for n, iv in ivs.items()}
    names = _clause_vars(clause, box)
    for strict_only in (False, True):
        sol = _lp_center(clause, box, names, strict_only)
        if sol is None:
            continue
        x, _ = sol
        point = {n: float(min(max(xi, box[n][0]), box[n][1])) for n, xi in zip(names, x)}
        if clause_holds(point, clause):
            return point
    return None


def _box_center(box: Box) -> dict[str, float]:
    return {n: (lo + hi) / 2 for n, (lo, hi) in box.items()}


def find_model(psi: Predicate, box: Box) -> Valuation | None:
    """Interior-preferring model of the first satisfiable clause.

    Variables of ``box`` not constrained by that clause sit at the box centre.
    """
    for clause in psi.clauses:
        point = _clause_model(clause, box)
        if point is not None:
            full = _box_center(box)
            full.update(point)
            return Valuation(full)
    return None


def is_satisfiable(psi: Predicate, box: Box) -> bool:
    return any(_clause_model(c, box) is not None for c in psi.clauses)


def _clause_distance(v: Mapping[str, float], clause: Clause, box: Box) -> float:
    if not clause:
        return 0.0
    if _is_axis_aligned(clause):
        worst = 0.0
        for name, iv in _intervals(clause, box).items():
            if iv.empty:
                return math.inf
            x = v[name]
            worst = max(worst, iv.lo - x, x - iv.hi)
        return worst
    if _clause_model(clause, box) is None:
        return math.inf
    names = _clause_vars(clause, box)
    d = len(names)
    A, b = [], []
    for vec, h, _strict in _lp_rows(clause, names):
        A.append(np.append(-vec, 0.0))
        b.append(h)
    for i, n in enumerate(names):
        e = np.zeros(d + 1)
        e[i], e[d] = 1.0, -1.0
        A.append(e)
        b.append(v[n])
        e = np.zeros(d + 1)
        e[i], e[d] = -1.0, -1.0
        A.append(e)
        b.append(-v[n])
    c = np.zeros(d + 1)
    c[d] = 1.0
    res = _solve(c, np.array(A), np.array(b), [box[n] for n in names] + [(0, None)])
    if res is None:
        return math.inf
    return max(0.0, float(res.x[d]))


def distance(v: Mapping[str, float], psi: Predicate, box: Box) -> float:
    """L-infinity distance from ``v`` to the closure of psi's models in the box."""
    if evaluate(v, psi):
        return 0.0
    return min((_clause_distance(v, c, box) for c in psi.clauses), default=math.inf)


# ---------------------------------------------------------------------------
# input/output factoring and minterms

def split_io(psi: Predicate, inputs: Iterable[str], outputs: Iterable[str]
             ) -> list[tuple[Predicate, Predicate]]:
    """Factor every clause into an input part and an output part."""
    xi, xo = set(inputs), set(outputs)
    out = []
    for clause in psi.clauses:
        pin, pout = [], []
        for lit in clause:
            names = lit.atom.variables
            if names <= xi:
                pin.append(lit)
            elif names <= xo:
                pout.append(lit)
            else:
                raise MixedAtom(f"atom '{lit.atom}' mixes input and output variables")
        out.append((Predicate((tuple(pin),)), Predicate((tuple(pout),))))
    return out


@dataclass(frozen=True)
class Minterm:
    """A total sign assignment over an atom universe (satisfiable by construction)."""

    atoms: tuple[Atom, ...]
    values: tuple[bool, ...]
    satisfiable: bool = True

    @property
    def clause(self) -> Clause:
        return tuple(Literal(a, s) for a, s in zip(self.atoms, self.values))

    def predicate(self) -> Predicate:
        return Predicate((self.clause,))

    def assignment(self) -> dict[Atom, bool]:
        return dict(zip(self.atoms, self.values))

    def __str__(self):
        return " and ".join(str(l) for l in self.clause) or "true"


def enumerate_minterms(atoms: Sequence[Atom], box: Box, cap: int = DEFAULT_MINTERM_CAP
                       ) -> list[Minterm]:
    """Satisfiable sign assignments, lexicographic with True before False."""
    atoms = tuple(atoms)
    if len(atoms) > cap:
        raise CapExceeded(f"{len(atoms)} atoms exceed the minterm cap of {cap}")
    out: list[Minterm] = []

    def walk(prefix: tuple[bool, ...]):
        k = len(prefix)
        if k == len(atoms):
            out.append(Minterm(atoms, prefix))
            return
        for sign in (True, False):
            nxt = prefix + (sign,)
            clause = tuple(Literal(a, s) for a, s in zip(atoms, nxt))
            if _clause_model(clause, box) is not None:
                walk(nxt)

    walk(())
    return out


def clause_under(clause: Clause, assignment: Mapping[Atom, bool]) -> bool:
    """Truth of a clause whose atoms are all decided by ``assignment``."""
    return all(assignment[lit.atom] == lit.positive for lit in clause)


def predicate_under(psi: Predicate, assignment: Mapping[Atom, bool]) -> bool:
    return any(clause_under(c, assignment) for c in psi.clauses)


def cover_cubes(atoms: Sequence[Atom], on: Iterable[tuple[bool, ...]],
                off: Iterable[tuple[bool, ...]]) -> Predicate:
    """Compact DNF covering the ``on`` sign vectors and none of ``off``.

    Vectors absent from both sets (infeasible cells) are treated as don't-cares.
    Each uncovered on-vector is grown greedily by dropping literals in atom
    order while no off-vector is hit; redundant cubes are then removed.
    """
    atoms = tuple(atoms)
    on = list(dict.fromkeys(on))
    off = list(off)
    cubes: list[tuple] = []

    def covers(cube, vec):
        return all(c is None or c == x for c, x in zip(cube, vec))

    for vec in on:
        if any(covers(c, vec) for c in cubes):
            continue
        cube = list(vec)
        for i in range(len(atoms)):
            saved = cube[i]
            cube[i] = None
            if any(covers(cube, o) for o in off):
                cube[i] = saved
        cubes.append(tuple(cube))
    # drop cubes whose on-vectors are all covered by the others
    kept = list(cubes)
    for cube in cubes:
        rest = [c for c in kept if c != cube]
        if all(any(covers(c, v) for c in rest) for v in on if covers(cube, v)):
            kept = rest
    return Predicate(tuple(
        tuple(Literal(a, s) for a, s in zip(atoms, cube) if s is not None) for cube in kept))


def universe_of(predicates: Iterable[Predicate]) -> tuple[Atom, ...]:
    return tuple(sorted(set(itertools.chain.from_iterable(p.atoms for p in predicates))))
