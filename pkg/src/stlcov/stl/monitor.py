"""Offline robustness and Boolean monitors over discrete finite traces.

The temporal windows are clipped to the trace: ``U[a,b]`` at ``t`` ranges over
``t' in [t+a, t+b]`` within ``0..n-1``, and the left operand is required only
strictly between ``t`` and ``t'``.  Empty sups are -inf, empty infs +inf.
"""
from __future__ import annotations

import math
from collections.abc import Sequence
from enum import Enum
from typing import Mapping

from .formula import (Always, And, Eventually, Formula, FormulaError, Historically,
                      Implies, Not, Once, Or, Pred, Since, TrueF, Until)

INF = math.inf


class Verdict(str, Enum):
    SATISFIED = "satisfied"
    VIOLATED = "violated"


class MonitorError(ValueError):
    pass


def _future_window(t: int, n: int, interval) -> range:
    hi = n - 1 if interval.hi is None else min(n - 1, t + interval.hi)
    return range(t + interval.lo, hi + 1)


def _past_window(t: int, interval) -> range:
    lo = 0 if interval.hi is None else max(0, t - interval.hi)
    return range(t - interval.lo, lo - 1, -1)


class _Evaluator:
    """Bottom-up evaluation of every subformula at every time step.

    Parameterised by the lattice (max/min/neg over reals, or any/all/not over
    booleans) so the quantitative and the Boolean monitor share one traversal.
    """

    def __init__(self, w: Sequence[Mapping[str, float]], atom, top, bottom, join, meet, neg):
        self.w = w
        self.n = len(w)
        self.atom = atom
        self.top, self.bottom = top, bottom
        self.join, self.meet, self.neg = join, meet, neg
        self.memo: dict[Formula, list] = {}

    def trace(self, phi: Formula) -> list:
        got = self.memo.get(phi)
        if got is None:
            got = self.memo[phi] = self._compute(phi)
        return got

    def _compute(self, phi: Formula) -> list:
        n = self.n
        if isinstance(phi, TrueF):
            return [self.top] * n
        if isinstance(phi, Pred):
            return [self.atom(phi.atom, self.w[t]) for t in range(n)]
        if isinstance(phi, Not):
            return [self.neg(x) for x in self.trace(phi.arg)]
        if isinstance(phi, (Or, And, Implies)):
            left, right = self.trace(phi.left), self.trace(phi.right)
            if isinstance(phi, Or):
                return [self.join(a, b) for a, b in zip(left, right)]
            if isinstance(phi, And):
                return [self.meet(a, b) for a, b in zip(left, right)]
            return [self.join(self.neg(a), b) for a, b in zip(left, right)]
        if isinstance(phi, (Eventually, Always)):
            arg = self.trace(phi.arg)
            red, unit = (self.join, self.bottom) if isinstance(phi, Eventually) else (self.meet, self.top)
            return [self._fold(red, unit, (arg[s] for s in _future_window(t, n, phi.interval)))
                    for t in range(n)]
        if isinstance(phi, (Once, Historically)):
            arg = self.trace(phi.arg)
            red, unit = (self.join, self.bottom) if isinstance(phi, Once) else (self.meet, self.top)
            return [self._fold(red, unit, (arg[s] for s in _past_window(t, phi.interval)))
                    for t in range(n)]
        if isinstance(phi, Until):
            return [self._until(phi, t) for t in range(n)]
        if isinstance(phi, Since):
            return [self._since(phi, t) for t in range(n)]
        raise FormulaError(f"unknown formula node {phi!r}")

    @staticmethod
    def _fold(red, unit, values):
        acc = unit
        for v in values:
            acc = red(acc, v)
        return acc

    def _until(self, phi: Until, t: int):
        left, right = self.trace(phi.left), self.trace(phi.right)
        hi = self.n - 1 if phi.interval.hi is None else min(self.n - 1, t + phi.interval.hi)
        best, run = self.bottom, self.top  # run = inf of left over (t, t')
        for tp in range(t, hi + 1):
            if tp >= t + phi.interval.lo:
                best = self.join(best, self.meet(right[tp], run))
            if tp > t:
                run = self.meet(run, left[tp])
        return best

    def _since(self, phi: Since, t: int):
        left, right = self.trace(phi.left), self.trace(phi.right)
        lo = 0 if phi.interval.hi is None else max(0, t - phi.interval.hi)
        best, run = self.bottom, self.top  # run = inf of left over (t', t)
        for tp in range(t, lo - 1, -1):
            if tp <= t - phi.interval.lo:
                best = self.join(best, self.meet(right[tp], run))
            if tp < t:
                run = self.meet(run, left[tp])
        return best


def _check(w, t):
    if not 0 <= t < len(w):
        raise MonitorError(f"time index {t} outside trace of length {len(w)}")


def _quantitative(w) -> _Evaluator:
    return _Evaluator(w, lambda a, v: a.value(v), INF, -INF, max, min, lambda x: -x)


def _boolean(w) -> _Evaluator:
    return _Evaluator(w, lambda a, v: a.holds(v), True, False,
                      lambda a, b: a or b, lambda a, b: a and b, lambda x: not x)


def robustness(phi: Formula, w: Sequence[Mapping[str, float]], t: int = 0) -> float:
    _check(w, t)
    return _quantitative(w).trace(phi)[t] + 0.0


def robustness_trace(phi: Formula, w: Sequence[Mapping[str, float]]) -> list[float]:
    return list(_quantitative(w).trace(phi))


def satisfies(phi: Formula, w: Sequence[Mapping[str, float]], t: int = 0) -> bool:
    """Boolean semantics: strict atoms strict, same windows as ``robustness``."""
    _check(w, t)
    return _boolean(w).trace(phi)[t]


def verdict(phi: Formula, w: Sequence[Mapping[str, float]]) -> Verdict:
    """Satisfied iff the Boolean semantics holds at t=0.

    Agrees with the sign of ``robustness`` whenever that is non-zero; at zero
    robustness the strictness of the atoms decides.
    """
    if len(w) == 0:
        raise MonitorError("verdict of an empty trace is undefined")
    return Verdict.SATISFIED if satisfies(phi, w, 0) else Verdict.VIOLATED
