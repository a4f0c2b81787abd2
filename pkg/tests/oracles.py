"""Independent reference implementations and random generators for tests."""
from __future__ import annotations

import itertools
import math

import numpy as np

from stlcov.predicates import Atom
from stlcov.stl.formula import (TRUE, Always, And, Eventually, Historically, Implies, Interval,
                                Not, Once, Or, Pred, Since, TrueF, Until, to_core)

INF = math.inf


def brute_rho(phi, w, t=0):
    """Textbook robustness over core syntax, by direct enumeration of the windows."""
    return _rho(to_core(phi), w, t)


def _rho(phi, w, t):
    n = len(w)
    if isinstance(phi, TrueF):
        return INF
    if isinstance(phi, Pred):
        return phi.atom.value(w[t])
    if isinstance(phi, Not):
        return -_rho(phi.arg, w, t)
    if isinstance(phi, Or):
        return max(_rho(phi.left, w, t), _rho(phi.right, w, t))
    lo, hi = phi.interval.lo, phi.interval.hi
    if isinstance(phi, Until):
        last = n - 1 if hi is None else min(n - 1, t + hi)
        window = range(t + lo, last + 1)
        between = lambda tp: range(t + 1, tp)
    elif isinstance(phi, Since):
        first = 0 if hi is None else max(0, t - hi)
        window = range(first, t - lo + 1)
        between = lambda tp: range(tp + 1, t)
    else:
        raise TypeError(phi)
    best = -INF
    for tp in window:
        inner = min((_rho(phi.left, w, s) for s in between(tp)), default=INF)
        best = max(best, min(_rho(phi.right, w, tp), inner))
    return best


def brute_sat(phi, w, t=0):
    """Boolean semantics over core syntax, strict atoms strict."""
    return _sat(to_core(phi), w, t)


def _sat(phi, w, t):
    n = len(w)
    if isinstance(phi, TrueF):
        return True
    if isinstance(phi, Pred):
        return phi.atom.holds(w[t])
    if isinstance(phi, Not):
        return not _sat(phi.arg, w, t)
    if isinstance(phi, Or):
        return _sat(phi.left, w, t) or _sat(phi.right, w, t)
    lo, hi = phi.interval.lo, phi.interval.hi
    if isinstance(phi, Until):
        last = n - 1 if hi is None else min(n - 1, t + hi)
        return any(_sat(phi.right, w, tp) and all(_sat(phi.left, w, s) for s in range(t + 1, tp))
                   for tp in range(t + lo, last + 1))
    first = 0 if hi is None else max(0, t - hi)
    return any(_sat(phi.right, w, tp) and all(_sat(phi.left, w, s) for s in range(tp + 1, t))
               for tp in range(first, t - lo + 1))


# ---------------------------------------------------------------------------
# generators

VARS = ("x", "y")


def random_atom(rng: np.random.Generator, names=VARS) -> Atom:
    name = names[int(rng.integers(len(names)))]
    sign = 1.0 if rng.random() < 0.5 else -1.0
    return Atom.make({name: sign}, float(rng.integers(-3, 4)), bool(rng.random() < 0.5))


def random_interval(rng, hi_cap=3) -> Interval:
    lo = int(rng.integers(0, hi_cap + 1))
    hi = int(rng.integers(lo, hi_cap + 1))
    return Interval(lo, hi)


def random_formula(rng: np.random.Generator, depth: int = 4, names=VARS):
    """Formula of nesting depth at most ``depth`` with bounded intervals in [0,3]."""
    if depth <= 1 or rng.random() < 0.25:
        return TRUE if rng.random() < 0.05 else Pred(random_atom(rng, names))
    k = int(rng.integers(11))
    sub = lambda: random_formula(rng, depth - 1, names)
    if k == 0:
        return Not(sub())
    if k == 1:
        return Or(sub(), sub())
    if k == 2:
        return And(sub(), sub())
    if k == 3:
        return Implies(sub(), sub())
    if k == 4:
        return Until(sub(), sub(), random_interval(rng))
    if k == 5:
        return Since(sub(), sub(), random_interval(rng))
    cls = (Eventually, Always, Once, Historically, Eventually)[k - 6]
    return cls(sub(), random_interval(rng))


def random_trace(rng: np.random.Generator, n: int, names=VARS) -> list[dict[str, float]]:
    return [{v: float(rng.integers(-4, 5)) for v in names} for _ in range(n)]


def random_game_automaton(rng: np.random.Generator, max_locations: int = 8):
    """Deterministic complete automaton over input ``a`` and output ``c``.

    Every location splits the plane with one input and one output threshold
    and sends each of the four quadrants to a random location.
    """
    from stlcov.automaton import Location, SymbolicAutomaton, Transition
    from stlcov.predicates import Literal, Predicate
    from stlcov.signals import Kind, VariableProfile

    n = int(rng.integers(1, max_locations + 1))
    variables = [VariableProfile("a", Kind.INPUT, -10, 10), VariableProfile("c", Kind.OUTPUT, -10, 10)]
    locations = [Location(i, f"q{i}") for i in range(n)]
    transitions = []
    for q in range(n):
        ta = Atom.make({"a": 1.0}, -float(rng.integers(-8, 9)))
        tc = Atom.make({"c": 1.0}, -float(rng.integers(-8, 9)))
        by_dst: dict[int, list] = {}
        for sa, sc in itertools.product((True, False), repeat=2):
            dst = int(rng.integers(n))
            by_dst.setdefault(dst, []).append((Literal(ta, sa), Literal(tc, sc)))
        for dst, clauses in sorted(by_dst.items()):
            transitions.append(Transition(len(transitions), q, dst, Predicate(tuple(clauses))))
    return SymbolicAutomaton(variables, locations, [0], transitions)


def backward_closure(A, targets) -> set[int]:
    """Locations with a graph path into ``targets`` (naive fixpoint)."""
    reach = set(targets)
    changed = True
    while changed:
        changed = False
        for t in A.transitions:
            if t.dst in reach and t.src not in reach:
                reach.add(t.src)
                changed = True
    return reach
