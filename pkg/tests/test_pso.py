import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stlcov.budget import SimulationBudget
from stlcov.pso import PsoConfig, StopReason, pso_minimize

BOX = [(-5.0, 5.0), (-5.0, 5.0)]


def sphere(x):
    return float(np.sum(x * x))


def test_constant_zero_meets_goal_at_once():
    out = pso_minimize(lambda x: 0.0, BOX, goal=lambda x: True)
    assert out.success and out.reason is StopReason.GOAL_MET and out.evaluations == 1


def test_sphere_regression():
    out = pso_minimize(sphere, BOX, PsoConfig(seed=7), threshold=1e-2)
    assert out.reason is StopReason.GOAL_MET
    assert out.evaluations == 449
    assert out.best_fitness <= 1e-2
    assert out.evaluations <= 30 * 50


def test_zero_budget_single_evaluation():
    budget = SimulationBudget(0)
    out = pso_minimize(sphere, BOX, budget=budget, threshold=-1.0)
    assert out.reason is StopReason.BUDGET_EXHAUSTED and out.evaluations == 1
    assert budget.remaining == -1


def test_iterations_exhausted():
    cfg = PsoConfig(swarm_size=5, max_iterations=4, seed=1)
    out = pso_minimize(sphere, BOX, cfg, threshold=-1.0)
    assert out.reason is StopReason.ITERATIONS_EXHAUSTED and out.evaluations == 20
    assert not out.success


def test_goal_check_required_for_success():
    out = pso_minimize(lambda x: (0.0, False), BOX, PsoConfig(swarm_size=3, max_iterations=2))
    assert not out.success and out.evaluations == 6


def test_objective_charging_itself():
    budget = SimulationBudget(10)

    def objective(x):
        budget.charge()
        return sphere(x)

    out = pso_minimize(objective, BOX, PsoConfig(seed=3), budget, threshold=-1.0, charge=False)
    assert out.reason is StopReason.BUDGET_EXHAUSTED and out.evaluations == 11


def test_config_validation():
    with pytest.raises(ValueError):
        PsoConfig(swarm_size=0)
    with pytest.raises(ValueError):
        PsoConfig(velocity_clamp=0)


def test_budget_unlimited_and_threadsafe():
    b = SimulationBudget(None)
    assert not b.exhausted and b.remaining is None
    b = SimulationBudget(4000)

    def work():
        for _ in range(1000):
            b.charge()

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert b.used == 4000 and b.remaining == 0 and not b.exhausted
    b.charge()
    assert b.exhausted


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 60), st.integers(1, 8), st.integers(1, 8))
def test_budget_safety_and_box(seed, limit, swarm, iters):
    budget = SimulationBudget(limit)
    seen = []

    def objective(x):
        seen.append(x.copy())
        return sphere(x)

    cfg = PsoConfig(swarm_size=swarm, max_iterations=iters, seed=seed)
    out = pso_minimize(objective, BOX, cfg, budget, threshold=-1.0)
    assert out.evaluations == len(seen) <= limit + 1
    assert budget.used == out.evaluations
    pts = np.array(seen)
    assert np.all(pts >= -5.0) and np.all(pts <= 5.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31))
def test_determinism(seed):
    cfg = PsoConfig(swarm_size=6, max_iterations=5, seed=seed)
    runs = []
    for _ in range(2):
        seq = []
        out = pso_minimize(lambda x: seq.append(x.copy()) or sphere(x), BOX, cfg, threshold=-1.0)
        runs.append((np.array(seq), out.best_fitness))
    assert np.array_equal(runs[0][0], runs[1][0]) and runs[0][1] == runs[1][1]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(-5, 5))
def test_early_stop_dominance(seed, cut):
    goal = lambda x: x[0] <= cut
    initial = []
    pso_minimize(lambda x: initial.append(x.copy()) or 1.0, BOX,
                 PsoConfig(swarm_size=10, max_iterations=1, seed=seed), threshold=-1.0)
    out = pso_minimize(lambda x: max(0.0, float(x[0]) - cut), BOX, PsoConfig(swarm_size=10, seed=seed))
    if any(goal(x) for x in initial):
        assert out.success and out.evaluations <= 10
