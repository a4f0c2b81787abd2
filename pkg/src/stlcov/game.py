"""Cooperative reachability games on symbolic automata.

The tester picks inputs, the system answers with outputs.  At *force*
locations some input reaches the next region whatever the output; at
*cooperative* locations progress needs a helpful output.  Input and output
choices are enumerated exactly as minterm cells, which needs guards whose
atoms are purely over inputs or purely over outputs.
"""
from __future__ import annotations

from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from enum import Enum

from .automaton import SymbolicAutomaton
from .predicates import (MixedAtom, Predicate, cover_cubes, enumerate_minterms,
                         is_satisfiable, predicate_under, split_io, universe_of)
from .signals import box_of

Rank = tuple[int, int]


class GameError(ValueError):
    pass


class Role(str, Enum):
    TARGET = "target"
    FORCE = "force"
    COOP = "coop"


class CellTable:
    """For each location, the location reached from every (input cell, output cell)."""

    def __init__(self, A: SymbolicAutomaton):
        self.automaton = A
        names_in = {v.name for v in A.inputs}
        names_out = {v.name for v in A.outputs}
        atoms = universe_of(t.guard for t in A.transitions)
        for atom in atoms:
            if not (atom.variables <= names_in or atom.variables <= names_out):
                raise MixedAtom(f"atom '{atom}' mixes input and output variables")
        self.in_atoms = tuple(a for a in atoms if a.variables <= names_in)
        self.out_atoms = tuple(a for a in atoms if a not in self.in_atoms)
        self.in_cells = enumerate_minterms(self.in_atoms, box_of(A.inputs), cap=len(self.in_atoms))
        self.out_cells = enumerate_minterms(self.out_atoms, box_of(A.outputs),
                                            cap=len(self.out_atoms))
        self.dst: dict[int, list[list[int | None]]] = {}
        for loc in A.locations:
            rows = []
            for ic in self.in_cells:
                row = []
                for oc in self.out_cells:
                    assignment = ic.assignment() | oc.assignment()
                    hit = [t.dst for t in A.outgoing(loc.id) if predicate_under(t.guard, assignment)]
                    if len(hit) > 1:
                        raise GameError(f"location {loc.id} is not deterministic")
                    row.append(hit[0] if hit else None)
                rows.append(row)
            self.dst[loc.id] = rows

    def input_predicate(self, chosen: Iterable[int]) -> Predicate:
        chosen = set(chosen)
        on = [c.values for i, c in enumerate(self.in_cells) if i in chosen]
        off = [c.values for i, c in enumerate(self.in_cells) if i not in chosen]
        return cover_cubes(self.in_atoms, on, off)

    def force_cells(self, q: int, S: frozenset[int]) -> list[int]:
        return [i for i, row in enumerate(self.dst[q]) if all(d in S for d in row)]

    def coop_cells(self, q: int, S: frozenset[int]) -> list[int]:
        return [i for i, row in enumerate(self.dst[q]) if any(d in S for d in row)]


def ins_force(A: SymbolicAutomaton, q: int, S: Iterable[int], cells: CellTable | None = None
              ) -> Predicate:
    """Inputs from which every output moves ``q`` into ``S`` in one step."""
    cells = cells or CellTable(A)
    return cells.input_predicate(cells.force_cells(q, frozenset(S)))


def ins_coop(A: SymbolicAutomaton, q: int, S: Iterable[int]) -> Predicate:
    """Inputs from which some output moves ``q`` into ``S``: union of input projections."""
    S = frozenset(S)
    names_in = [v.name for v in A.inputs]
    names_out = [v.name for v in A.outputs]
    box_in, box_out = box_of(A.inputs), box_of(A.outputs)
    clauses = []
    for t in A.outgoing(q):
        if t.dst not in S:
            continue
        for pin, pout in split_io(t.guard, names_in, names_out):
            if is_satisfiable(pin, box_in) and is_satisfiable(pout, box_out):
                clauses.extend(pin.clauses)
    return Predicate(tuple(clauses))


@dataclass(frozen=True)
class Game:
    automaton: SymbolicAutomaton
    targets: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "targets", frozenset(self.targets))
        if not self.targets:
            raise GameError("a game needs at least one target")
        unknown = self.targets - {l.id for l in self.automaton.locations}
        if unknown:
            raise GameError(f"unknown target locations {sorted(unknown)}")


@dataclass
class Fixpoint:
    regions: list[list[frozenset[int]]]
    rank: dict[int, Rank]

    @property
    def winning(self) -> frozenset[int]:
        return self.regions[-1][-1]

    def region(self, i: int, j: int | None = None) -> frozenset[int]:
        row = self.regions[i]
        return row[-1] if j is None or j >= len(row) else row[j]


def _pre_force(cells: CellTable, S: frozenset[int]) -> set[int]:
    return {q for q in cells.dst if cells.force_cells(q, S)}


def _pre_coop(cells: CellTable, S: frozenset[int]) -> set[int]:
    return {q for q in cells.dst if cells.coop_cells(q, S)}


def winning_fixpoint(game: Game, cells: CellTable | None = None) -> Fixpoint:
    """Nested fixpoint: grow by force moves while possible, then by one cooperative move."""
    cells = cells or CellTable(game.automaton)
    Y = game.targets
    regions = [[Y]]
    while True:
        while True:
            grown = Y | _pre_force(cells, Y)
            if grown == Y:
                break
            Y = frozenset(grown)
            regions[-1].append(Y)
        grown = Y | _pre_coop(cells, Y)
        if grown == Y:
            break
        Y = frozenset(grown)
        regions.append([Y])
    rank: dict[int, Rank] = {}
    for i, row in enumerate(regions):
        for j, region in enumerate(row):
            for q in region:
                rank.setdefault(q, (i, j))
    return Fixpoint(regions, rank)


@dataclass
class StrategyAutomaton:
    """Winning-region subgraph with ranks, roles and the good inputs per location."""

    automaton: SymbolicAutomaton
    targets: frozenset[int]
    init: int
    rank: dict[int, Rank]
    role: dict[int, Role]
    sigma: dict[int, Predicate]
    delta: dict[int, list[int]]  # location -> strategy transition ids
    fixpoint: Fixpoint = field(repr=False)

    @property
    def locations(self) -> frozenset[int]:
        return frozenset(self.rank)

    @property
    def force(self) -> frozenset[int]:
        return frozenset(q for q, r in self.role.items() if r is Role.FORCE)

    @property
    def coop(self) -> frozenset[int]:
        return frozenset(q for q, r in self.role.items() if r is Role.COOP)

    def edges(self) -> list[int]:
        return sorted(t for ts in self.delta.values() for t in ts)

    def to_json(self) -> dict:
        return {
            "init": self.init,
            "targets": sorted(self.targets),
            "locations": [{"id": q, "rank": list(self.rank[q]), "role": self.role[q].value,
                           "sigma": self.sigma[q].to_json(), "sigma_text": str(self.sigma[q])}
                          for q in sorted(self.rank)],
            "edges": [{"id": t, "src": self.automaton.transition(t).src,
                       "dst": self.automaton.transition(t).dst} for t in self.edges()],
        }

    def to_dot(self) -> str:
        lines = ["digraph strategy {", "  rankdir=LR;", "  node [shape=circle];"]
        for q in sorted(self.rank):
            style = {Role.COOP: "bold", Role.TARGET: "dashed"}.get(self.role[q])
            label = f"q{q}\\n({self.rank[q][0]},{self.rank[q][1]})"
            attrs = [f'label="{label}"', f'tooltip="{self.sigma[q]}"']
            if style:
                attrs.append(f"style={style}")
            lines.append(f"  q{q} [{', '.join(attrs)}];")
        for t in self.edges():
            tr = self.automaton.transition(t)
            guard = str(tr.guard).replace('"', '\\"')
            lines.append(f'  q{tr.src} -> q{tr.dst} [label="t{t}: {guard}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_strategy(game: Game, cells: CellTable | None = None) -> StrategyAutomaton | None:
    """Positional cooperative strategy, or None when the initial location cannot win."""
    A = game.automaton
    cells = cells or CellTable(A)
    fp = winning_fixpoint(game, cells)
    if A.init not in fp.winning:
        return None
    true_in = Predicate.true()
    role, sigma, delta = {}, {}, {}
    box = A.box
    for q, (i, j) in fp.rank.items():
        if (i, j) == (0, 0):
            role[q], sigma[q], delta[q] = Role.TARGET, true_in, []
            continue
        if j > 0:
            nxt = fp.region(i, j - 1)
            role[q] = Role.FORCE
            sigma[q] = cells.input_predicate(cells.force_cells(q, nxt))
        else:
            nxt = fp.region(i - 1)
            role[q] = Role.COOP
            # same set as ins_coop's projection, expressed over input cells
            sigma[q] = cells.input_predicate(cells.coop_cells(q, nxt))
        delta[q] = [t.id for t in A.outgoing(q)
                    if t.dst in nxt and is_satisfiable(t.guard & sigma[q], box)]
    return StrategyAutomaton(A, game.targets, A.init, dict(fp.rank), role, sigma, delta, fp)


def backward_reachable(A: SymbolicAutomaton, targets: Iterable[int]) -> frozenset[int]:
    """Plain graph predecessors closure; equals the winning region for satisfiable guards."""
    preds: dict[int, set[int]] = {l.id: set() for l in A.locations}
    for t in A.transitions:
        preds[t.dst].add(t.src)
    seen = set(targets)
    queue = deque(seen)
    while queue:
        q = queue.popleft()
        for p in preds[q] - seen:
            seen.add(p)
            queue.append(p)
    return frozenset(seen)
