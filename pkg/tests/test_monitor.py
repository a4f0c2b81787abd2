import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_rho, brute_sat, random_formula, random_trace
from stlcov.stl import (Always, Eventually, Historically, Interval, MonitorError, Once, Pred,
                        Since, Until, Verdict, parse_formula, robustness, robustness_trace,
                        satisfies, verdict)
from stlcov.predicates import Atom

INF = math.inf


def x_ge(c):
    return Pred(Atom.make({"x": 1.0}, -c))


def trace(xs):
    return [{"x": float(v)} for v in xs]


class TestHandComputed:
    def test_atom_is_affine_value(self):
        assert robustness(x_ge(2), trace([5]), 0) == 3.0

    def test_eventually_clips_to_trace(self):
        w = trace([0, 1, 7])
        phi = Eventually(x_ge(2), Interval(0, 5))
        assert robustness_trace(phi, w) == [5.0, 5.0, 5.0]

    def test_always_on_suffix(self):
        phi = Always(x_ge(0), Interval(1, 2))
        assert robustness_trace(phi, trace([-9, 3, 1, 4])) == [1.0, 1.0, 4.0, INF]

    def test_empty_future_window_is_bottom(self):
        phi = Eventually(x_ge(0), Interval(2, 3))
        assert robustness(phi, trace([1, 1]), 0) == -INF

    def test_historically_window(self):
        phi = Historically(x_ge(4), Interval(0, 1))
        assert robustness_trace(phi, trace([4, 5, 3])) == [0.0, 0.0, -1.0]

    def test_once_lower_bound(self):
        phi = Once(x_ge(0), Interval(1, 1))
        assert robustness_trace(phi, trace([5, -2, 7])) == [-INF, 5.0, -2.0]

    def test_until_inner_interval_is_open(self):
        # left operand is never checked at t itself nor at t'
        phi = Until(x_ge(0), x_ge(10), Interval(1, 2))
        w = trace([-100, 3, 10])
        assert robustness(phi, w, 0) == 0.0

    def test_since_inner_interval_is_open(self):
        phi = Since(x_ge(0), x_ge(10), Interval(0, 2))
        w = trace([12, -1, -50])
        # t'=0 needs x>=0 at index 1 only; index 2 is t itself
        assert robustness(phi, w, 2) == max(min(2.0, -1.0), -10.0 - 1.0, -60.0)

    def test_no_negative_zero(self):
        r = robustness(~x_ge(3), trace([3]), 0)
        assert r == 0.0 and math.copysign(1.0, r) == 1.0


class TestVerdict:
    def test_strict_atom_tie_is_violated(self):
        phi = Pred(Atom.make({"x": 1.0}, -3.0, strict=True))
        assert robustness(phi, trace([3]), 0) == 0.0
        assert verdict(phi, trace([3])) is Verdict.VIOLATED

    def test_nonstrict_atom_tie_is_satisfied(self):
        assert verdict(x_ge(3), trace([3])) is Verdict.SATISFIED

    def test_empty_signal_rejected(self):
        with pytest.raises(MonitorError):
            robustness(x_ge(0), [], 0)

    def test_time_out_of_range(self):
        with pytest.raises(MonitorError):
            robustness(x_ge(0), trace([1]), 1)


class TestRunningExample:
    phi = parse_formula("G ((H[0,1] a >= 4) -> ((b <= 0 and F[0,1] c >= 4) or "
                        "(b > 0 and F[0,1] d >= 6)))")

    def test_s1_trace_satisfies(self):
        w = [{"a": 3, "b": 2, "c": 3, "d": 7}, {"a": 4, "b": 2, "c": 4, "d": 8},
             {"a": 3, "b": 2, "c": 3, "d": 7}]
        assert verdict(self.phi, w) is Verdict.SATISFIED
        assert robustness(self.phi, w) == 1.0

    def test_s2_violation(self):
        # a=4 twice with b=9 makes d = 5 < 6
        w = [{"a": 4, "b": 9, "c": 17, "d": 5}] * 3
        assert verdict(self.phi, w) is Verdict.VIOLATED

    def test_s2_violation_with_margin(self):
        w = [{"a": 5, "b": 9.5, "c": 19.5, "d": 5.5}] * 3
        assert robustness(self.phi, w) < 0


def test_oracle_agreement_fixed_sample():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        phi = random_formula(rng, 4)
        w = random_trace(rng, int(rng.integers(1, 13)))
        for t in range(len(w)):
            assert robustness(phi, w, t) == brute_rho(phi, w, t), (str(phi), w, t)
            assert satisfies(phi, w, t) == brute_sat(phi, w, t), (str(phi), w, t)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_robustness_matches_oracle(seed, n):
    rng = np.random.default_rng(seed)
    phi = random_formula(rng, 4)
    w = random_trace(rng, n)
    assert robustness_trace(phi, w) == [brute_rho(phi, w, t) for t in range(n)]


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_sign_soundness(seed, n):
    """Positive robustness implies satisfaction, negative implies violation."""
    rng = np.random.default_rng(seed)
    phi = random_formula(rng, 4)
    w = random_trace(rng, n)
    for t in range(n):
        r = robustness(phi, w, t)
        if r > 0:
            assert satisfies(phi, w, t)
        elif r < 0:
            assert not satisfies(phi, w, t)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 10))
def test_negation_flips_robustness(seed, n):
    rng = np.random.default_rng(seed)
    phi = random_formula(rng, 3)
    w = random_trace(rng, n)
    assert robustness(~phi, w, 0) == -robustness(phi, w, 0)
