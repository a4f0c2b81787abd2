"""Adaptive coverage testing driven by cooperative reachability strategies.

The location campaign repeatedly picks an unvisited location, solves the game
towards it on a working copy of the automaton, and executes the strategy
against the system: force locations take a model of the strategy's input
predicate, cooperative locations search for an input with particle swarm
optimisation so the system's output enables the chosen transition.  A failed
cooperative step removes that transition from the working copy.

Every simulation, including each optimiser probe, is a test whose induced run
on the original automaton feeds the coverage ledgers.
"""
from __future__ import annotations

import logging
import math
import time
from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .automaton import SymbolicAutomaton, induced_run
from .budget import SimulationBudget
from .coverage import Criterion, CriterionKind, CoverageLedger, percent
from .game import CellTable, Game, Role, StrategyAutomaton, build_strategy
from .predicates import distance, evaluate, find_model
from .pso import PsoConfig, StopReason, pso_minimize
from .signals import Signal, box_of, compose
from .stl.formula import IaStlSpec
from .stl.monitor import robustness
from .sut import SystemModel, simulate

log = logging.getLogger(__name__)

POLICIES = ("nearest-first", "id-order", "seeded-random")


@dataclass(frozen=True)
class AdaptiveConfig:
    budget: int | None = 2000
    criterion: str = "location"
    policy: str = "nearest-first"
    pso: PsoConfig = PsoConfig()
    seed: int = 0
    max_length: int = 64
    carry_pruning: bool = False
    targets: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.budget is not None and self.budget < 0:
            raise ValueError("budget must be nonnegative")
        CriterionKind(self.criterion)
        if self.policy not in POLICIES:
            raise ValueError(f"unknown target policy {self.policy!r}; expected one of {POLICIES}")
        if self.max_length < 1:
            raise ValueError("max_length must be positive")


class _BudgetOut(Exception):
    pass


@dataclass
class ExploreResult:
    success: bool
    prefix: list[dict[str, float]]
    location: int
    removed: int | None = None
    reason: str = ""


def _episode_seed(master: int, episode: int) -> int:
    return int(np.random.SeedSequence([master & 0xFFFFFFFFFFFFFFFF, episode]).generate_state(1)[0])


def _bfs_distance(A: SymbolicAutomaton) -> dict[int, int]:
    dist = {A.init: 0}
    queue = deque([A.init])
    while queue:
        q = queue.popleft()
        for t in A.outgoing(q):
            if t.dst not in dist:
                dist[t.dst] = dist[q] + 1
                queue.append(t.dst)
    return dist


def select_target(candidates: Sequence[int], A: SymbolicAutomaton, policy: str = "nearest-first",
                  rng: np.random.Generator | None = None, kind: str = "location") -> int:
    """Next requirement to pursue.

    ``nearest-first`` takes the smallest BFS distance from the initial location
    (a transition counts from its source), ties broken by smallest id.
    """
    if not candidates:
        raise ValueError("no candidate targets")
    cands = sorted(candidates)
    if policy == "id-order":
        return cands[0]
    if policy == "seeded-random":
        rng = rng if rng is not None else np.random.default_rng(0)
        return cands[int(rng.integers(len(cands)))]
    dist = _bfs_distance(A)
    if kind == "transition":
        key = lambda tid: dist.get(A.transition(tid).src, math.inf) if tid in _tids(A) else math.inf
    else:
        key = lambda q: dist.get(q, math.inf)
    return min(cands, key=lambda c: (key(c), c))


def _tids(A):
    return {t.id for t in A.transitions}


# ---------------------------------------------------------------------------
# campaign state and report

@dataclass
class CampaignReport:
    mode: str
    criterion: str
    coverage: dict
    secondary: dict
    simulations: int
    budget: int | None
    budget_remaining: int | None
    tests: int
    distinct_maximal_tests: int
    visited: list[int]
    evidence: list[int]
    targets: list[dict] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)
    first_visit: dict[int, int] = field(default_factory=dict)
    new_locations_per_minute: list[int] = field(default_factory=list)
    wall_time: float = 0.0
    automaton_hash: str = ""
    automaton: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def percent(self) -> int:
        return self.coverage["percent"]

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["first_visit"] = {str(k): v for k, v in self.first_visit.items()}
        return out


class CampaignResult(NamedTuple):
    tests: list[list[dict[str, float]]]
    visited: set[int]
    report: CampaignReport


class Campaign:
    """Mutable state of one test campaign against one system."""

    def __init__(self, A: SymbolicAutomaton, model: SystemModel, config: AdaptiveConfig,
                 mode: str = "adaptive"):
        names = {v.name for v in A.variables}
        if set(model.input_names) | set(model.output_names) != names or \
                set(model.input_names) != {v.name for v in A.inputs}:
            raise ValueError("system variables do not match the automaton's inputs and outputs")
        self.A = A
        self.model = model
        self.config = config
        self.mode = mode
        self.budget = SimulationBudget(config.budget)
        self.kind = CriterionKind(config.criterion)
        self.locations = CoverageLedger(Criterion.of(A, CriterionKind.LOCATION))
        self.transitions = CoverageLedger(Criterion.of(A, CriterionKind.TRANSITION))
        self.tests: list[list[dict[str, float]]] = []
        self.visited: set[int] = set()
        self.evidence: set[int] = set()
        self.removed: set[int] = set()
        self.outcomes: list[dict] = []
        self.events: list[dict] = []
        self.first_visit: dict[int, int] = {}
        self.episode = 0
        self.rng = np.random.default_rng(config.seed)
        self.in_box = box_of(A.inputs)
        self.box = A.box
        self.input_names = [v.name for v in A.inputs]
        self._t0 = time.monotonic()

    # -- bookkeeping
    @property
    def ledger(self) -> CoverageLedger:
        return self.locations if self.kind is CriterionKind.LOCATION else self.transitions

    def _event(self, kind: str, **data):
        ev = {"time": round(time.monotonic() - self._t0, 6), "simulations": self.budget.used,
              "kind": kind, **data}
        self.events.append(ev)
        log.debug("%s", ev)

    def _next_pso(self) -> PsoConfig:
        self.episode += 1
        return self.config.pso.with_seed(_episode_seed(self.config.seed, self.episode))

    def run_test(self, prefix: list[dict[str, float]]) -> Signal:
        """Simulate a whole input prefix, record it as a test, return the outputs."""
        if self.budget.exhausted:
            raise _BudgetOut()
        out = simulate(self.model, prefix, self.budget)
        w = [compose(u, y) for u, y in zip(prefix, out)]
        run = induced_run(self.A, w)
        self.tests.append([dict(u) for u in prefix])
        for q in self.locations.record(run, prefix):
            self.first_visit[q] = self.budget.used
            self._event("new_location", id=q)
        for t in self.transitions.record(run, prefix):
            self._event("new_transition", id=t)
        self.visited |= set(run.locations)
        return out

    def _covered(self) -> set[int]:
        if self.kind is CriterionKind.LOCATION:
            return set(self.visited)
        return set(self.transitions.satisfied)

    # -- strategy-guided exploration
    def explore(self, W: SymbolicAutomaton, strat: StrategyAutomaton, target: int) -> ExploreResult:
        q = W.init
        prefix: list[dict[str, float]] = []
        self.visited.add(q)
        while True:
            if q == target:
                return ExploreResult(True, prefix, q)
            if len(prefix) >= self.config.max_length:
                return ExploreResult(False, prefix, q, reason="max_length")
            if q not in strat.role:
                return ExploreResult(False, prefix, q, reason="left the winning region")
            if strat.role[q] is Role.FORCE:
                u = find_model(strat.sigma[q], self.in_box)
                if u is None:
                    return ExploreResult(False, prefix, q, reason="empty force predicate")
                u = {n: u[n] for n in self.input_names}
                trial = prefix + [u]
                try:
                    out = self.run_test(trial)
                except _BudgetOut:
                    return ExploreResult(False, prefix, q, reason="budget")
                t = W.step(q, compose(u, out[-1]))
                if t is None:
                    return ExploreResult(False, prefix, q, reason="force move hit a pruned transition")
                prefix, q = trial, t.dst
                self.visited.add(q)
                continue
            # cooperative step: try the strategy edge towards the smallest rank
            tid = min(strat.delta[q], key=lambda i: (strat.rank[W.transition(i).dst], i))
            tr = W.transition(tid)
            u = self._cooperate(prefix, tr.guard)
            if u is None:
                if self.budget.exhausted:
                    return ExploreResult(False, prefix, q, reason="budget")
                self._event("prune", transition=tid)
                return ExploreResult(False, prefix, q, removed=tid, reason="cooperation failed")
            prefix, q = prefix + [u], tr.dst
            self.visited.add(q)

    def _cooperate(self, prefix, guard) -> dict[str, float] | None:
        """PSO for an input whose composed valuation satisfies ``guard``; None on failure."""
        names = self.input_names

        def objective(x):
            u = dict(zip(names, map(float, x)))
            try:
                out = self.run_test(prefix + [u])
            except _BudgetOut:
                return math.inf, False
            v = compose(u, out[-1])
            return distance(v, guard, self.box), evaluate(v, guard)

        bounds = [self.in_box[n] for n in names]
        res = pso_minimize(objective, bounds, self._next_pso(), self.budget, threshold=0.0,
                           charge=False)
        if not res.success:
            return None
        return dict(zip(names, map(float, res.best_point)))

    def _strategy(self, target: int) -> tuple[SymbolicAutomaton, StrategyAutomaton | None]:
        W = self.A.without(self.removed)
        return W, build_strategy(Game(W, {target}), CellTable(W))

    def reach(self, target: int) -> ExploreResult | None:
        """Prune and retry until one location is reached; None when no strategy exists."""
        if not self.config.carry_pruning:
            self.removed = set()
        result = None
        while not self.budget.exhausted:
            W, strat = self._strategy(target)
            if strat is None:
                return None
            result = self.explore(W, strat, target)
            if result.success or result.removed is None:
                return result
            self.removed.add(result.removed)
        return result if result is not None else ExploreResult(False, [], self.A.init, reason="budget")

    # -- location campaign
    def location_campaign(self):
        pool = self.config.targets if self.config.targets is not None else \
            [l.id for l in self.A.locations]
        while not self.budget.exhausted:
            cands = [q for q in pool if q not in self.visited and q not in self.evidence]
            if not cands:
                break
            target = select_target(cands, self.A.without(self.removed), self.config.policy, self.rng)
            used = self.budget.used
            self._event("target", id=target)
            res = self.reach(target)
            if res is None:
                outcome = "unreachable"
                self.evidence.add(target)
            elif res.success or target in self.visited:
                outcome = "visited"
            elif res.reason == "budget" or self.budget.exhausted:
                outcome = "budget_exhausted"
            else:
                outcome = "failed"
                self.evidence.add(target)
            self.outcomes.append({"target": target, "outcome": outcome,
                                  "simulations": self.budget.used - used})

    def transition_campaign(self):
        pool = self.config.targets if self.config.targets is not None else \
            [t.id for t in self.A.transitions]
        while not self.budget.exhausted:
            covered = self.transitions.satisfied
            cands = [t for t in pool if t not in covered and t not in self.evidence]
            if not cands:
                break
            tid = select_target(cands, self.A, self.config.policy, self.rng, kind="transition")
            used = self.budget.used
            outcome = self.cover_transition(tid)
            if outcome in ("unreachable", "failed"):
                self.evidence.add(tid)
            self.outcomes.append({"target": tid, "outcome": outcome,
                                  "simulations": self.budget.used - used})

    def cover_transition(self, tid: int) -> str:
        if tid in self.transitions.satisfied:
            return "visited"
        tr = self.A.transition(tid)
        self._event("target", transition=tid)
        res = self.reach(tr.src)
        if res is None:
            return "unreachable"
        if not res.success:
            return "budget_exhausted" if self.budget.exhausted else "failed"
        if tid in self.transitions.satisfied:
            return "visited"
        cells = CellTable(self.A)
        forced = cells.force_cells(tr.src, frozenset({tr.dst}))
        try:
            if forced:
                u = find_model(cells.input_predicate(forced), self.in_box)
                self.run_test(res.prefix + [{n: u[n] for n in self.input_names}])
            else:
                self._cooperate(res.prefix, tr.guard)
        except _BudgetOut:
            pass
        if tid in self.transitions.satisfied:
            return "visited"
        return "budget_exhausted" if self.budget.exhausted else "failed"

    # -- report
    def report(self, extra: dict | None = None) -> CampaignReport:
        wall = time.monotonic() - self._t0
        main, other = (self.locations, self.transitions) if self.kind is CriterionKind.LOCATION \
            else (self.transitions, self.locations)
        per_minute: list[int] = []
        for ev in self.events:
            if ev["kind"] == "new_location":
                m = int(ev["time"] // 60)
                per_minute.extend([0] * (m + 1 - len(per_minute)))
                per_minute[m] += 1
        return CampaignReport(
            mode=self.mode, criterion=self.kind.value,
            coverage=main.to_json(), secondary=other.to_json(),
            simulations=self.budget.used, budget=self.budget.initial,
            budget_remaining=self.budget.remaining, tests=len(self.tests),
            distinct_maximal_tests=_maximal(self.tests),
            visited=sorted(self._covered()), evidence=sorted(self.evidence),
            targets=self.outcomes, events=self.events, first_visit=dict(self.first_visit),
            new_locations_per_minute=per_minute, wall_time=wall,
            automaton_hash=self.A.digest(), automaton=self.A.to_json(), extra=extra or {})


def _maximal(tests: list[list[dict[str, float]]]) -> int:
    """Number of distinct tests that are not a proper prefix of another test."""
    keys = {tuple(tuple(sorted(u.items())) for u in t) for t in tests}
    prefixes = {k[:i] for k in keys for i in range(len(k))}
    return len(keys - prefixes)


# ---------------------------------------------------------------------------
# entry points

def adaptive_testing(A: SymbolicAutomaton, model: SystemModel, config: AdaptiveConfig = AdaptiveConfig()
                     ) -> CampaignResult:
    """Run the adaptive campaign for ``config.criterion``; returns (tests, visited, report)."""
    camp = Campaign(A, model, config)
    if camp.kind is CriterionKind.LOCATION:
        camp.location_campaign()
    else:
        camp.transition_campaign()
    return CampaignResult(camp.tests, camp._covered(), camp.report())


def transition_coverage_campaign(A: SymbolicAutomaton, model: SystemModel,
                                 config: AdaptiveConfig = AdaptiveConfig()) -> CampaignResult:
    return adaptive_testing(A, model, replace(config, criterion="transition"))


def explore_strategy(campaign: Campaign, strat: StrategyAutomaton, target: int,
                     automaton: SymbolicAutomaton | None = None) -> ExploreResult:
    """One execution of a strategy towards ``target`` (pruning, if any, goes to the campaign)."""
    W = automaton if automaton is not None else campaign.A.without(campaign.removed)
    res = campaign.explore(W, strat, target)
    if res.removed is not None:
        campaign.removed.add(res.removed)
    return res


@dataclass
class FalsifyResult:
    witness: Signal | None
    robustness: float
    simulations: int
    budget: int | None
    runs: int


def falsify_global(spec: IaStlSpec, model: SystemModel, config: AdaptiveConfig = AdaptiveConfig(),
                   length: int = 3) -> FalsifyResult:
    """Minimise robustness over whole input traces of ``length`` steps.

    With a finite budget the swarm restarts with fresh seeds until the budget
    runs out; with no budget it runs once.
    """
    if length < 1:
        raise ValueError("trace length must be at least 1")
    budget = SimulationBudget(config.budget)
    names = [v.name for v in model.inputs]
    in_box = box_of(model.inputs)
    bounds = [in_box[n] for n in names] * length
    phi = spec.formula

    def decode(x) -> list[dict[str, float]]:
        k = len(names)
        return [dict(zip(names, map(float, x[i * k:(i + 1) * k]))) for i in range(length)]

    best = {"rho": math.inf, "w": None}

    def objective(x):
        tau = decode(x)
        out = simulate(model, tau, budget)
        w = [compose(u, y) for u, y in zip(tau, out)]
        rho = robustness(phi, w, 0)
        if rho < best["rho"]:
            best["rho"], best["w"] = rho, w
        return rho, rho < 0

    runs = 0
    while True:
        runs += 1
        res = pso_minimize(objective, bounds, config.pso.with_seed(_episode_seed(config.seed, runs)),
                           budget, threshold=0.0, charge=False)
        if res.success or res.reason is StopReason.BUDGET_EXHAUSTED or budget.initial is None:
            break
    witness = Signal(best["w"]) if best["rho"] < 0 else None
    return FalsifyResult(witness, best["rho"], budget.used, budget.initial, runs)


def random_testing(A: SymbolicAutomaton, model: SystemModel, config: AdaptiveConfig = AdaptiveConfig(),
                   length: int = 3) -> CampaignReport:
    """Exactly ``config.budget`` uniformly random input traces of ``length`` steps."""
    if length < 1:
        raise ValueError("trace length must be at least 1")
    if config.budget is None:
        raise ValueError("random testing needs a finite budget")
    camp = Campaign(A, model, config, mode="random")
    rng = np.random.default_rng(config.seed)
    for _ in range(config.budget):
        tau = [{n: float(rng.uniform(lo, hi)) for n, (lo, hi) in camp.in_box.items()}
               for _ in range(length)]
        camp.run_test(tau)
    return camp.report()
