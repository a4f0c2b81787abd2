import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stlcov.automaton import Location, SymbolicAutomaton, Transition, induced_run
from stlcov.engine import (AdaptiveConfig, Campaign, adaptive_testing, explore_strategy,
                           falsify_global, random_testing, select_target,
                           transition_coverage_campaign)
from stlcov.game import Game, Role, build_strategy
from stlcov.predicates import Atom, Literal, Predicate, evaluate
from stlcov.pso import PsoConfig
from stlcov.signals import Kind, VariableProfile, compose
from stlcov.stl import Verdict, verdict
from stlcov.sut import CountingSystem, Stateless, builtin

SMALL_PSO = PsoConfig(swarm_size=8, max_iterations=5)


def replay_visits(A, model, tests):
    seen = set()
    for tau in tests:
        w = [compose(u, y) for u, y in zip(tau, model.simulate(tau))]
        seen |= set(induced_run(A, w).locations)
    return seen


class TestSelectTarget:
    def test_nearest_first_picks_neighbour(self, automaton):
        cands = [l.id for l in automaton.locations if l.id != automaton.init]
        pick = select_target(cands, automaton)
        assert pick in {t.dst for t in automaton.outgoing(automaton.init)}
        assert pick == 1

    def test_single_candidate(self, automaton):
        for policy in ("nearest-first", "id-order", "seeded-random"):
            assert select_target([4], automaton, policy) == 4

    def test_seeded_random_reproducible(self, automaton):
        picks = [select_target([1, 2, 3, 4], automaton, "seeded-random", np.random.default_rng(5))
                 for _ in range(2)]
        assert picks[0] == picks[1]

    def test_empty_rejected(self, automaton):
        with pytest.raises(ValueError):
            select_target([], automaton)


class TestExplore:
    def test_target_is_start(self, automaton):
        camp = Campaign(automaton, CountingSystem(builtin("s2")), AdaptiveConfig())
        strat = build_strategy(Game(automaton, {automaton.init}))
        res = explore_strategy(camp, strat, automaton.init)
        assert res.success and camp.model.calls == 0

    def test_force_step_uses_sigma(self, automaton):
        camp = Campaign(automaton, builtin("s2"), AdaptiveConfig())
        strat = build_strategy(Game(automaton, {3}))
        q = automaton.init
        assert strat.role[q] is Role.FORCE and str(strat.sigma[q]) == "a < 4"
        res = explore_strategy(camp, strat, 3)
        assert res.success and len(res.prefix) == 1
        u = res.prefix[0]
        assert evaluate(u, strat.sigma[q])
        v = compose(u, camp.model.simulate([u])[-1])
        t = automaton.step(q, v)
        assert t.dst == 3 and evaluate(v, t.guard)

    def test_cooperation_failure_prunes(self):
        a = VariableProfile("a", Kind.INPUT, -10, 10)
        c = VariableProfile("c", Kind.OUTPUT, -10, 10)
        c4 = Atom.make({"c": 1.0}, -4.0)
        A = SymbolicAutomaton([a, c], [Location(0, "q0"), Location(1, "q1")], [0],
                              [Transition(0, 0, 1, Predicate.of(c4)),
                               Transition(1, 0, 0, Predicate.of(Literal(c4, False))),
                               Transition(2, 1, 1, Predicate.true())])
        zero = Stateless([a], [c], lambda v: {"c": 0.0})
        camp = Campaign(A, zero, AdaptiveConfig(pso=SMALL_PSO))
        strat = build_strategy(Game(A, {1}))
        assert strat.role[0] is Role.COOP
        res = explore_strategy(camp, strat, 1)
        assert not res.success and res.removed == 0 and camp.removed == {0}
        assert camp.budget.used == 8 * 5
        assert build_strategy(Game(A.without(camp.removed), {1})) is None
        # the whole campaign ends with the target marked unreachable
        _, visited, report = adaptive_testing(A, zero, AdaptiveConfig(pso=SMALL_PSO))
        assert visited == {0} and report.evidence == [1]


class TestLocationCampaign:
    def test_s1_unlimited_budget(self, automaton, sink):
        model = CountingSystem(builtin("s1"))
        tests, visited, report = adaptive_testing(automaton, model, AdaptiveConfig(budget=None, seed=11))
        assert sink not in visited
        unvisited = {l.id for l in automaton.locations} - visited
        assert unvisited and set(report.evidence) == unvisited
        assert report.simulations == model.calls == len(tests)
        assert report.budget_remaining is None

    def test_s2_reaches_sink(self, automaton, sink):
        model = CountingSystem(builtin("s2"))
        tests, visited, report = adaptive_testing(automaton, model, AdaptiveConfig(budget=2000, seed=11))
        assert sink in visited and report.percent == 100
        assert report.simulations == model.calls == 2000 - report.budget_remaining
        assert report.first_visit[sink] <= report.simulations

    def test_zero_budget(self, automaton):
        model = CountingSystem(builtin("s2"))
        tests, _, report = adaptive_testing(automaton, model, AdaptiveConfig(budget=0))
        assert model.calls <= 1 and len(tests) <= 1 and report.simulations == model.calls

    def test_soundness_of_visited(self, automaton):
        model = builtin("s2")
        tests, visited, report = adaptive_testing(automaton, model, AdaptiveConfig(budget=300, seed=4))
        assert visited <= replay_visits(automaton, model, tests)
        assert set(report.coverage["satisfied"]) == visited

    def test_report_shape(self, automaton):
        _, _, report = adaptive_testing(automaton, builtin("s2"), AdaptiveConfig(budget=300, seed=2))
        out = report.to_json()
        assert out["automaton_hash"] == automaton.digest()
        assert out["coverage"]["criterion"] == "location"
        assert out["secondary"]["criterion"] == "transition"
        assert out["tests"] >= out["distinct_maximal_tests"] >= 1
        assert all(ev["kind"] in {"target", "new_location", "new_transition", "prune"}
                   for ev in out["events"])

    def test_deterministic_under_seed(self, automaton):
        cfg = AdaptiveConfig(budget=300, seed=6)
        r1 = adaptive_testing(automaton, builtin("s2"), cfg)
        r2 = adaptive_testing(automaton, builtin("s2"), cfg)
        assert r1.tests == r2.tests and r1.visited == r2.visited

    def test_carry_pruning_switch(self, automaton):
        cfg = AdaptiveConfig(budget=None, seed=11, carry_pruning=True, pso=SMALL_PSO)
        _, visited, report = adaptive_testing(automaton, builtin("s1"), cfg)
        assert 4 not in visited and report.evidence

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AdaptiveConfig(budget=-1)
        with pytest.raises(ValueError):
            AdaptiveConfig(policy="widest")
        with pytest.raises(ValueError):
            AdaptiveConfig(criterion="paths")

    def test_variable_mismatch(self, automaton):
        with pytest.raises(ValueError):
            Campaign(automaton, builtin("leaky_integrator"), AdaptiveConfig())


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.integers(0, 120), st.integers(0, 120))
def test_monotone_in_budget(automaton, seed, b1, extra):
    small = adaptive_testing(automaton, builtin("s2"), AdaptiveConfig(budget=b1, seed=seed))
    large = adaptive_testing(automaton, builtin("s2"), AdaptiveConfig(budget=b1 + extra, seed=seed))
    assert small.visited <= large.visited
    assert small.report.simulations <= b1 + 1


class TestTransitionCampaign:
    def test_beats_incidental_coverage(self, automaton, sink):
        cfg = AdaptiveConfig(budget=2000, seed=11)
        loc = adaptive_testing(automaton, builtin("s2"), cfg).report
        tr = transition_coverage_campaign(automaton, builtin("s2"), cfg).report
        assert len(tr.coverage["satisfied"]) > len(loc.secondary["satisfied"])
        into_sink = {t.id for t in automaton.transitions if t.dst == sink and t.src != sink}
        assert len(into_sink & set(tr.coverage["satisfied"])) >= 2

    def test_covered_transition_costs_nothing(self, automaton):
        camp = Campaign(automaton, CountingSystem(builtin("s2")), AdaptiveConfig(criterion="transition"))
        camp.run_test([{"a": 0.0, "b": 0.0}])
        used = camp.budget.used
        assert camp.cover_transition(3) == "visited" and camp.budget.used == used

    def test_transition_from_unreachable_location(self, automaton):
        camp = Campaign(automaton, CountingSystem(builtin("s1")),
                        AdaptiveConfig(budget=None, criterion="transition", pso=SMALL_PSO))
        out = camp.cover_transition(14)  # the sink self-loop
        assert out == "unreachable"


class TestFalsify:
    def test_s2_witness_regression(self, spec):
        model = CountingSystem(builtin("s2"))
        res = falsify_global(spec, model, AdaptiveConfig(budget=3000, seed=5), 3)
        assert res.witness is not None and res.robustness < 0
        assert verdict(spec.formula, res.witness) is Verdict.VIOLATED
        assert res.simulations == model.calls == 71

    def test_s1_no_witness(self, spec):
        res = falsify_global(spec, builtin("s1"), AdaptiveConfig(budget=400, seed=1), 3)
        assert res.witness is None and res.robustness >= 0 and res.simulations == 401

    def test_zero_budget(self, spec):
        res = falsify_global(spec, builtin("s2"), AdaptiveConfig(budget=0), 3)
        assert res.simulations <= 1

    def test_bad_length(self, spec):
        with pytest.raises(ValueError):
            falsify_global(spec, builtin("s2"), AdaptiveConfig(), 0)


class TestRandom:
    def test_not_better_than_adaptive(self, automaton):
        rnd = random_testing(automaton, builtin("s2"), AdaptiveConfig(budget=100, seed=3))
        ada = adaptive_testing(automaton, builtin("s2"), AdaptiveConfig(budget=100, seed=3)).report
        assert rnd.percent <= ada.percent
        assert rnd.simulations == 100

    def test_zero_budget(self, automaton):
        rnd = random_testing(automaton, builtin("s2"), AdaptiveConfig(budget=0))
        assert rnd.simulations == 0 and rnd.coverage["satisfied"] == [] and rnd.tests == 0

    def test_replay(self, automaton):
        cfg = AdaptiveConfig(budget=50, seed=8)
        r1 = random_testing(automaton, builtin("s2"), cfg).to_json()
        r2 = random_testing(automaton, builtin("s2"), cfg).to_json()
        for key in ("coverage", "secondary", "visited", "simulations"):
            assert r1[key] == r2[key]

    def test_needs_finite_budget(self, automaton):
        with pytest.raises(ValueError):
            random_testing(automaton, builtin("s2"), AdaptiveConfig(budget=None))
