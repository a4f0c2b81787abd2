"""Global-best particle swarm optimisation with early stop and budget accounting."""
from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .budget import SimulationBudget


class StopReason(str, Enum):
    GOAL_MET = "goal_met"
    ITERATIONS_EXHAUSTED = "iterations_exhausted"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 30
    max_iterations: int = 50
    inertia: float = 0.7298
    c1: float = 1.49618
    c2: float = 1.49618
    velocity_clamp: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 1 or self.max_iterations < 1:
            raise ValueError("swarm_size and max_iterations must be positive")
        if self.velocity_clamp <= 0:
            raise ValueError("velocity_clamp must be positive")

    def with_seed(self, seed: int) -> "PsoConfig":
        return PsoConfig(self.swarm_size, self.max_iterations, self.inertia, self.c1, self.c2,
                         self.velocity_clamp, seed)


@dataclass
class SearchOutcome:
    best_point: np.ndarray | None
    best_fitness: float
    evaluations: int
    success: bool
    reason: StopReason


Objective = Callable[[np.ndarray], "float | tuple[float, bool]"]


class _Stop(Exception):
    def __init__(self, reason: StopReason):
        self.reason = reason


def pso_minimize(objective: Objective, box: Sequence[tuple[float, float]],
                 config: PsoConfig = PsoConfig(), budget: SimulationBudget | None = None,
                 threshold: float = 0.0, goal: Callable[[np.ndarray], bool] | None = None,
                 charge: bool = True) -> SearchOutcome:
    """Minimise ``objective`` over ``box``.

    ``objective`` may return ``(fitness, goal_ok)``; otherwise ``goal`` (or
    ``fitness <= threshold`` alone) decides success.  Every evaluation is
    charged to ``budget`` (unless ``charge`` is false because the objective
    charges itself) and the search stops as soon as the goal holds or the
    budget drops below zero.
    """
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    extent = hi - lo
    vmax = config.velocity_clamp * extent
    dim, n = len(lo), config.swarm_size
    # one stream per particle, so evaluation order cannot change the numbers drawn
    rngs = [np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(n)]

    state = {"evals": 0, "best_x": None, "best_f": math.inf}

    def evaluate(x: np.ndarray) -> float:
        if budget is not None and budget.exhausted:
            raise _Stop(StopReason.BUDGET_EXHAUSTED)
        out = objective(x.copy())
        f, ok = out if isinstance(out, tuple) else (out, None)
        f = math.inf if f is None or math.isnan(f) else float(f)
        state["evals"] += 1
        if charge and budget is not None:
            budget.charge()
        if ok is None:
            ok = goal(x) if goal is not None else True
        if f < state["best_f"] or state["best_x"] is None:
            state["best_f"], state["best_x"] = f, x.copy()
        if f <= threshold and ok:
            state["best_f"], state["best_x"] = f, x.copy()
            raise _Stop(StopReason.GOAL_MET)
        if budget is not None and budget.exhausted:
            raise _Stop(StopReason.BUDGET_EXHAUSTED)
        return f

    try:
        x = np.array([lo + rng.random(dim) * extent for rng in rngs]).reshape(n, dim)
        v = np.array([rng.uniform(-vmax, vmax) for rng in rngs]).reshape(n, dim)
        pbest = x.copy()
        pbest_f = np.full(n, math.inf)
        for i in range(n):
            pbest_f[i] = evaluate(x[i])
        g = int(np.argmin(pbest_f))
        gbest, gbest_f = pbest[g].copy(), pbest_f[g]
        for _ in range(1, config.max_iterations):
            for i in range(n):
                r1, r2 = rngs[i].random(dim), rngs[i].random(dim)
                v[i] = (config.inertia * v[i] + config.c1 * r1 * (pbest[i] - x[i])
                        + config.c2 * r2 * (gbest - x[i]))
                v[i] = np.clip(v[i], -vmax, vmax)
                x[i] = np.clip(x[i] + v[i], lo, hi)
                f = evaluate(x[i])
                if f < pbest_f[i]:
                    pbest[i], pbest_f[i] = x[i].copy(), f
            g = int(np.argmin(pbest_f))
            if pbest_f[g] < gbest_f:
                gbest, gbest_f = pbest[g].copy(), pbest_f[g]
        reason = StopReason.ITERATIONS_EXHAUSTED
    except _Stop as stop:
        reason = stop.reason
    return SearchOutcome(state["best_x"], state["best_f"], state["evals"],
                         reason is StopReason.GOAL_MET, reason)
