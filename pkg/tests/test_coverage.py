from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TAU1
from stlcov.automaton import Run, induced_run
from stlcov.coverage import (Criterion, CriterionKind, CoverageLedger, DegenerateCriterion,
                             coverage_ratio, percent, requirements_of)
from stlcov.signals import compose
from stlcov.sut import builtin


def test_tau1_requirements(automaton):
    model = builtin("s2")
    w = [compose(u, y) for u, y in zip(TAU1, model.simulate(TAU1))]
    run = induced_run(automaton, w)
    assert requirements_of(run, "location") == {0, 3}
    # the run re-enters the a<4 location by the same transition, so only two are distinct
    assert requirements_of(run, "transition") == {3, 12}
    assert len(run.transitions) == 3


def test_empty_run():
    run = Run((0,))
    assert requirements_of(run, "location") == {0}
    assert requirements_of(run, "transition") == set()


def test_self_loop_twice():
    run = Run((0, 0, 0), (5, 5))
    assert requirements_of(run, "location") == {0}
    assert requirements_of(run, "transition") == {5}


def test_percentages():
    five = Criterion(CriterionKind.LOCATION, range(5))
    fourteen = Criterion(CriterionKind.TRANSITION, range(14))
    r1 = coverage_ratio({0, 1, 2}, five)
    r2 = coverage_ratio({0, 1, 2, 3, 4}, fourteen)
    assert r1 == Fraction(3, 5) and percent(r1) == 60
    assert r2 == Fraction(5, 14) and percent(r2) == 36
    assert percent(coverage_ratio(set(), five)) == 0


def test_percent_rounds_half_up():
    assert percent(Fraction(1, 8)) == 13
    assert percent(Fraction(1, 200)) == 1
    assert percent(Fraction(1, 201)) == 0


def test_degenerate_criterion():
    with pytest.raises(DegenerateCriterion):
        coverage_ratio(set(), Criterion(CriterionKind.LOCATION, ()))


def test_ledger_records_new_and_counts(automaton):
    ledger = CoverageLedger(Criterion.of(automaton, "location"))
    assert ledger.record(Run((0, 3, 0), (3, 12)), [{"a": 1}, {"a": 5}]) == {0, 3}
    assert ledger.record(Run((0, 0), (0,))) == set()
    assert ledger.counts[0] == 4 and ledger.counts[3] == 1
    out = ledger.to_json()
    assert out["ratio"] == "2/5" and out["percent"] == 40 and out["total"] == 5
    assert out["counts"] == {"0": 4, "3": 1}
    assert len(out["tests"]) == 2


def test_ledger_ignores_foreign_ids():
    ledger = CoverageLedger(Criterion(CriterionKind.LOCATION, {0, 1}))
    ledger.record(Run((0, 9), (1,)))
    assert ledger.satisfied == {0}


@given(st.lists(st.lists(st.integers(0, 6), min_size=1, max_size=6), max_size=10))
def test_ratio_monotone_and_bounded(runs):
    ledger = CoverageLedger(Criterion(CriterionKind.LOCATION, range(5)))
    last = Fraction(0)
    for locs in runs:
        ledger.record(Run(tuple(locs), tuple(range(len(locs) - 1))))
        r = ledger.ratio()
        assert last <= r <= 1
        last = r
    expected = {q for locs in runs for q in locs if q < 5}
    assert ledger.satisfied == expected
