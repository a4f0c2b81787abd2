"""Translation of IA-STL specifications into deterministic symbolic automata.

The construction is formula progression.  A state is an *obligation*: a
negation-normal-form formula describing what the rest of the trace must
satisfy, paired with shift registers that remember the recent truth values of
every past (``S``/``P``/``H``) subformula.  States are explored over the
satisfiable minterms of the specification's atoms, dead states collapse into
an error-sink, and the result is minimised and given one guard per location
pair.

Bounded future operators are supported anywhere; an unbounded ``G`` only at
the root.  Past operators may be unbounded but must have past-only operands.
"""
from __future__ import annotations

from collections import deque
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

from .automaton import Location, LocationKind, SymbolicAutomaton, Transition
from .predicates import (DEFAULT_MINTERM_CAP, Atom, MixedAtom, Minterm, cover_cubes,
                         enumerate_minterms, predicate_under, universe_of)
from .signals import box_of
from .stl.formula import (Always, And, Eventually, Formula, FormulaError, Historically,
                          IaStlSpec, Implies, Not, Once, Or, Pred, Since, TrueF, Until)


class UnsupportedFormula(FormulaError):
    pass


# ---------------------------------------------------------------------------
# obligation terms (negation normal form)

class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Node):
    value: bool

    def __str__(self):
        return "true" if self.value else "false"


TOP, BOT = Const(True), Const(False)


@dataclass(frozen=True, order=True)
class SinceRef:
    index: int

    def __str__(self):
        return f"s{self.index}"


@dataclass(frozen=True)
class Leaf(Node):
    """A canonical atom or a past subformula, evaluated at the current step."""

    key: Atom | SinceRef
    positive: bool = True

    def __str__(self):
        return str(self.key) if self.positive else f"not {self.key}"


@dataclass(frozen=True)
class AndN(Node):
    args: frozenset

    def __str__(self):
        return "(" + " and ".join(sorted(map(str, self.args))) + ")"


@dataclass(frozen=True)
class OrN(Node):
    args: frozenset

    def __str__(self):
        return "(" + " or ".join(sorted(map(str, self.args))) + ")"


@dataclass(frozen=True)
class UntilN(Node):
    """``left U[lo,hi] right``; ``closed`` also demands ``left`` at the current step."""

    left: Node
    right: Node
    lo: int
    hi: int | None
    closed: bool = False

    def __str__(self):
        hi = "inf" if self.hi is None else self.hi
        tag = "U!" if self.closed else "U"
        return f"({self.left} {tag}[{self.lo},{hi}] {self.right})"


@dataclass(frozen=True)
class ReleaseN(Node):
    """Dual of :class:`UntilN`: every ``t'`` in the window has ``right`` or an earlier ``left``."""

    left: Node
    right: Node
    lo: int
    hi: int | None
    closed: bool = False

    def __str__(self):
        hi = "inf" if self.hi is None else self.hi
        tag = "R!" if self.closed else "R"
        return f"({self.left} {tag}[{self.lo},{hi}] {self.right})"


def mk_and(args) -> Node:
    flat: set[Node] = set()
    for a in args:
        if a == BOT:
            return BOT
        if a == TOP:
            continue
        flat.update(a.args if isinstance(a, AndN) else (a,))
    if _has_complement(flat):
        return BOT
    if not flat:
        return TOP
    return next(iter(flat)) if len(flat) == 1 else AndN(frozenset(flat))


def mk_or(args) -> Node:
    flat: set[Node] = set()
    for a in args:
        if a == TOP:
            return TOP
        if a == BOT:
            continue
        flat.update(a.args if isinstance(a, OrN) else (a,))
    if _has_complement(flat):
        return TOP
    if not flat:
        return BOT
    return next(iter(flat)) if len(flat) == 1 else OrN(frozenset(flat))


def _has_complement(nodes) -> bool:
    return any(isinstance(n, Leaf) and Leaf(n.key, not n.positive) in nodes for n in nodes)


def mk_until(left, right, lo, hi, closed) -> Node:
    if right == BOT:
        return BOT
    return UntilN(left, right, lo, hi, closed and left != TOP)


def mk_release(left, right, lo, hi, closed) -> Node:
    if right == TOP:
        return TOP
    return ReleaseN(left, right, lo, hi, closed and left != BOT)


def end_value(node: Node) -> bool:
    """Truth of an obligation when the trace stops before its next step."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, AndN):
        return all(end_value(a) for a in node.args)
    if isinstance(node, OrN):
        return any(end_value(a) for a in node.args)
    return isinstance(node, ReleaseN)


def _leaves(node: Node):
    if isinstance(node, Leaf):
        yield node
    elif isinstance(node, (AndN, OrN)):
        for a in node.args:
            yield from _leaves(a)
    elif isinstance(node, (UntilN, ReleaseN)):
        yield from _leaves(node.left)
        yield from _leaves(node.right)


# ---------------------------------------------------------------------------
# past registers

@dataclass(frozen=True)
class SinceNode:
    left: Node
    right: Node
    lo: int
    hi: int | None

    @property
    def width(self) -> int:
        # c_k for k = 1..m, plus a saturating tail bit when unbounded
        m = self.hi if self.hi is not None else self.lo
        return m + (1 if self.hi is None else 0)

    def value(self, reg: tuple[bool, ...], v1: bool, v2: bool) -> bool:
        a = self.lo
        if a == 0 and v2:
            return True
        if self.hi is not None:
            return any(reg[k - 1] for k in range(max(a, 1), self.hi + 1))
        return (a >= 1 and reg[a - 1]) or reg[-1]

    def shift(self, reg: tuple[bool, ...], v1: bool, v2: bool) -> tuple[bool, ...]:
        m = self.hi if self.hi is not None else self.lo
        vec = ((v2,) + tuple(c and v1 for c in reg[:m - 1])) if m else ()
        if self.hi is None:
            tail = reg[-1]
            tail = (v2 or (v1 and tail)) if self.lo == 0 else (v1 and (reg[m - 1] or tail))
            vec += (tail,)
        return vec


# ---------------------------------------------------------------------------
# the progression context

@dataclass(frozen=True)
class Obligation:
    """Residual requirement plus past registers; equal obligations compare equal."""

    formula: Node
    registers: tuple[tuple[bool, ...], ...]
    context: "Progression" = field(compare=False, repr=False)

    @property
    def accepting(self) -> bool:
        return end_value(self.formula)

    def __str__(self):
        if not self.registers:
            return str(self.formula)
        regs = " ".join("".join("1" if b else "0" for b in r) for r in self.registers)
        return f"{self.formula} | {regs}"


class Progression:
    """Translation of one formula into obligations and their one-step progression."""

    def __init__(self, phi: Formula, inputs: Sequence[str] = (), outputs: Sequence[str] = ()):
        self.inputs, self.outputs = set(inputs), set(outputs)
        self.since: list[SinceNode] = []
        self._since_index: dict[SinceNode, int] = {}
        self.root = self._nnf(phi, True, in_past=False)
        self._check_bounds(self.root, top=True)
        self.atoms: tuple[Atom, ...] = tuple(sorted(
            {l.key for n in [self.root, *self._past_operands()] for l in _leaves(n)
             if isinstance(l.key, Atom)}))

    # -- translation
    def _atom_leaf(self, atom: Atom, positive: bool) -> Leaf:
        names = atom.variables
        if (self.inputs or self.outputs) and not (names <= self.inputs or names <= self.outputs):
            raise MixedAtom(f"atom '{atom}' mixes input and output variables")
        canon, pol = atom.canonical()
        return Leaf(canon, pol == positive)

    def _intern(self, node: SinceNode) -> SinceRef:
        idx = self._since_index.get(node)
        if idx is None:
            idx = self._since_index[node] = len(self.since)
            self.since.append(node)
        return SinceRef(idx)

    def _nnf(self, phi: Formula, pos: bool, in_past: bool) -> Node:
        if isinstance(phi, TrueF):
            return TOP if pos else BOT
        if isinstance(phi, Pred):
            return self._atom_leaf(phi.atom, pos)
        if isinstance(phi, Not):
            return self._nnf(phi.arg, not pos, in_past)
        if isinstance(phi, (Or, And, Implies)):
            left_pos = not pos if isinstance(phi, Implies) else pos
            left = self._nnf(phi.left, left_pos, in_past)
            right = self._nnf(phi.right, pos, in_past)
            disjunctive = isinstance(phi, (Or, Implies)) == pos
            return mk_or((left, right)) if disjunctive else mk_and((left, right))
        if isinstance(phi, (Until, Eventually, Always)):
            if in_past:
                raise UnsupportedFormula(f"future operator inside a past operator: {phi}")
            lo, hi = phi.interval.lo, phi.interval.hi
            left = phi.left if isinstance(phi, Until) else None
            right = phi.right if isinstance(phi, Until) else phi.arg
            if isinstance(phi, Always) != pos:
                l = TOP if left is None else self._nnf(left, pos, False)
                return mk_until(l, self._nnf(right, pos, False), lo, hi, False)
            l = BOT if left is None else self._nnf(left, pos, False)
            return mk_release(l, self._nnf(right, pos, False), lo, hi, False)
        if isinstance(phi, (Since, Once, Historically)):
            lo, hi = phi.interval.lo, phi.interval.hi
            if isinstance(phi, Since):
                node = SinceNode(self._nnf(phi.left, True, True),
                                 self._nnf(phi.right, True, True), lo, hi)
            elif isinstance(phi, Once):
                node = SinceNode(TOP, self._nnf(phi.arg, True, True), lo, hi)
            else:
                node = SinceNode(TOP, self._nnf(phi.arg, False, True), lo, hi)
                pos = not pos
            return Leaf(self._intern(node), pos)
        raise FormulaError(f"unknown formula node {phi!r}")

    def _check_bounds(self, node: Node, top: bool):
        if isinstance(node, (UntilN, ReleaseN)):
            if node.hi is None and not (top and isinstance(node, ReleaseN) and node.left == BOT):
                raise UnsupportedFormula(
                    "unbounded future operators are only supported as a top-level G")
            self._check_bounds(node.left, False)
            self._check_bounds(node.right, False)
        elif isinstance(node, (AndN, OrN)):
            for a in node.args:
                self._check_bounds(a, False)

    def _past_operands(self):
        for s in self.since:
            yield s.left
            yield s.right

    # -- obligations
    def initial(self) -> Obligation:
        return self._prune(self.root, tuple(tuple([False] * s.width) for s in self.since))

    def _prune(self, formula: Node, registers) -> Obligation:
        """Reset registers of past nodes the obligation can no longer consult."""
        live: set[int] = set()
        stack = [l.key.index for l in _leaves(formula) if isinstance(l.key, SinceRef)]
        while stack:
            i = stack.pop()
            if i in live:
                continue
            live.add(i)
            s = self.since[i]
            stack.extend(l.key.index for n in (s.left, s.right) for l in _leaves(n)
                         if isinstance(l.key, SinceRef))
        regs = tuple(r if i in live else tuple([False] * len(r)) for i, r in enumerate(registers))
        return Obligation(formula, regs, self)

    def past_values(self, assignment: Mapping[Atom, bool], registers) -> list[bool]:
        """Current truth of every past node (nodes only reference earlier indices)."""
        values: list[bool] = []
        for i, s in enumerate(self.since):
            v1 = self._eval_past(s.left, assignment, values)
            v2 = self._eval_past(s.right, assignment, values)
            values.append(s.value(registers[i], v1, v2))
        return values

    def _eval_past(self, node: Node, assignment, values) -> bool:
        if isinstance(node, Const):
            return node.value
        if isinstance(node, Leaf):
            v = values[node.key.index] if isinstance(node.key, SinceRef) else assignment[node.key]
            return v == node.positive
        if isinstance(node, AndN):
            return all(self._eval_past(a, assignment, values) for a in node.args)
        if isinstance(node, OrN):
            return any(self._eval_past(a, assignment, values) for a in node.args)
        raise UnsupportedFormula(f"temporal future node inside a past operator: {node}")

    def progress(self, ob: Obligation, assignment: Mapping[Atom, bool]) -> Obligation:
        """Residual obligation after one step whose atoms take ``assignment``."""
        values = self.past_values(assignment, ob.registers)
        new_regs = []
        for i, s in enumerate(self.since):
            v1 = self._eval_past(s.left, assignment, values)
            v2 = self._eval_past(s.right, assignment, values)
            new_regs.append(s.shift(ob.registers[i], v1, v2))

        def leaf(l: Leaf) -> bool:
            v = values[l.key.index] if isinstance(l.key, SinceRef) else assignment[l.key]
            return v == l.positive

        return self._prune(_progress(ob.formula, leaf), tuple(new_regs))


def _progress(node: Node, leaf) -> Node:
    if isinstance(node, Const):
        return node
    if isinstance(node, Leaf):
        return TOP if leaf(node) else BOT
    if isinstance(node, AndN):
        return mk_and(_progress(a, leaf) for a in node.args)
    if isinstance(node, OrN):
        return mk_or(_progress(a, leaf) for a in node.args)
    lo, hi = node.lo, node.hi
    nlo, nhi = max(lo - 1, 0), (None if hi is None else hi - 1)
    if isinstance(node, UntilN):
        nxt = BOT if hi == 0 else mk_until(node.left, node.right, nlo, nhi, True)
        if lo >= 1:
            return mk_and((_progress(node.left, leaf), nxt)) if node.closed else nxt
        rest = mk_and((_progress(node.left, leaf), nxt)) if node.closed else nxt
        return mk_or((_progress(node.right, leaf), rest))
    nxt = TOP if hi == 0 else mk_release(node.left, node.right, nlo, nhi, True)
    if lo >= 1:
        return mk_or((_progress(node.left, leaf), nxt)) if node.closed else nxt
    rest = mk_or((_progress(node.left, leaf), nxt)) if node.closed else nxt
    return mk_and((_progress(node.right, leaf), rest))


def obligation_of(phi: Formula) -> Obligation:
    return Progression(phi).initial()


def progress(ob: Obligation, m: Minterm | Mapping[Atom, bool]) -> Obligation:
    """One progression step; ``m`` assigns a truth value to every atom of ``ob``.

    Atoms of ``m`` are canonicalised, so ``a >= 4`` and ``-a > -4`` agree.
    """
    assignment = m.assignment() if isinstance(m, Minterm) else dict(m)
    canon = {}
    for atom, value in assignment.items():
        c, pol = atom.canonical()
        canon[c] = value == pol
    return ob.context.progress(ob, canon)


# ---------------------------------------------------------------------------
# automaton construction

@dataclass
class _Table:
    """Explicit deterministic machine over a minterm alphabet."""

    minterms: list[Minterm]
    labels: list[LocationKind]
    succ: list[list[int]]
    names: list[str]
    init: int = 0


def _minimise(table: _Table) -> _Table:
    """Moore partition refinement, then renumber reachable blocks in BFS order."""
    n = len(table.labels)
    kinds = {k: i for i, k in enumerate(dict.fromkeys(table.labels))}
    block = [kinds[k] for k in table.labels]
    while True:
        sigs = {}
        new = []
        for q in range(n):
            sig = (block[q], tuple(block[s] for s in table.succ[q]))
            new.append(sigs.setdefault(sig, len(sigs)))
        if len(sigs) == len(set(block)):
            break
        block = new
    rep = {}
    for q in range(n):
        rep.setdefault(block[q], q)
    order = {block[table.init]: 0}
    queue = deque([block[table.init]])
    while queue:
        b = queue.popleft()
        for s in table.succ[rep[b]]:
            if block[s] not in order:
                order[block[s]] = len(order)
                queue.append(block[s])
    reps = sorted(order, key=order.get)
    return _Table(table.minterms,
                  [table.labels[rep[b]] for b in reps],
                  [[order[block[s]] for s in table.succ[rep[b]]] for b in reps],
                  [table.names[rep[b]] for b in reps], 0)


def _to_automaton(table: _Table, variables, spec_hash=None) -> SymbolicAutomaton:
    atoms = table.minterms[0].atoms if table.minterms else ()
    locations = [Location(i, name, kind) for i, (name, kind) in
                 enumerate(zip(table.names, table.labels))]
    transitions = []
    for q, succ in enumerate(table.succ):
        targets = list(dict.fromkeys(succ))
        for dst in sorted(targets):
            on = [m.values for m, s in zip(table.minterms, succ) if s == dst]
            off = [m.values for m, s in zip(table.minterms, succ) if s != dst]
            transitions.append(Transition(len(transitions), q, dst, cover_cubes(atoms, on, off)))
    return SymbolicAutomaton(variables, locations, [table.init], transitions, spec_hash=spec_hash)


def compile_spec(spec: IaStlSpec, cap: int = DEFAULT_MINTERM_CAP) -> SymbolicAutomaton:
    """Deterministic complete automaton whose runs track the verdict of ``spec``.

    A run ends in an accepting location exactly when the trace read so far
    satisfies the formula, and in the error-sink exactly when no extension can.
    """
    prog = Progression(spec.formula, spec.input_names, spec.output_names)
    box = box_of(spec.variables)
    minterms = enumerate_minterms(prog.atoms, box, cap=cap)
    assignments = [m.assignment() for m in minterms]

    start = prog.initial()
    index = {start: 0}
    states = [start]
    succ: list[list[int]] = []
    i = 0
    while i < len(states):
        row = []
        for a in assignments:
            nxt = prog.progress(states[i], a)
            if nxt not in index:
                index[nxt] = len(states)
                states.append(nxt)
            row.append(index[nxt])
        succ.append(row)
        i += 1

    # states that cannot reach an accepting one are dead
    alive = {q for q, s in enumerate(states) if s.accepting}
    preds: dict[int, set[int]] = {q: set() for q in range(len(states))}
    for q, row in enumerate(succ):
        for s in row:
            preds[s].add(q)
    queue = deque(alive)
    while queue:
        q = queue.popleft()
        for p in preds[q]:
            if p not in alive:
                alive.add(p)
                queue.append(p)
    labels = []
    names = []
    for q, s in enumerate(states):
        if q not in alive:
            labels.append(LocationKind.SINK)
            names.append("sink")
        else:
            labels.append(LocationKind.ACCEPTING if s.accepting else LocationKind.ACTIVE)
            names.append(str(s))
    table = _minimise(_Table(minterms, labels, succ, names))
    return _to_automaton(table, spec.variables, spec.digest())


def minimize(A: SymbolicAutomaton, cap: int = DEFAULT_MINTERM_CAP) -> SymbolicAutomaton:
    """Merge bisimilar locations and parallel transitions of a deterministic complete automaton."""
    atoms = universe_of(t.guard for t in A.transitions)
    minterms = enumerate_minterms(atoms, A.box, cap=cap)
    ids = [l.id for l in A.locations]
    pos = {q: i for i, q in enumerate(ids)}
    succ = []
    for q in ids:
        row = []
        for m in minterms:
            a = m.assignment()
            hit = [t.dst for t in A.outgoing(q) if predicate_under(t.guard, a)]
            if len(hit) != 1:
                raise FormulaError(f"location {q} is not deterministic and complete on {m}")
            row.append(pos[hit[0]])
        succ.append(row)
    table = _Table(minterms, [A.location(q).verdict for q in ids], succ,
                   [A.location(q).name for q in ids], pos[A.init])
    return _to_automaton(_minimise(table), A.variables, A.spec_hash)
