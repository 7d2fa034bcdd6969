"""Tree compression behind the VC-density bound on trees.

Given a tree ``T`` and a non-empty node set ``A``, the anchor set ``B``
consists of the root, ``A`` and every node outside ``A`` whose two children
both have ``A``-descendants.  Each node is anchored to its least ancestor in
``B``; contracting the fibres gives a tree ``T'`` on ``B``.  Running the
automaton over the fibre of ``u`` with prescribed states for the holes (the
``T'``-children of ``u``) yields a state transformation.  Tabulating it for
every choice of object bits at ``u`` gives the label ``f_u``; the labelled
contracted tree is ``T'_q`` for a parameter valuation ``q``.

The emulation automaton reads such labels lazily.  Its run on ``T'_q``
marked with ``p`` must coincide on ``B`` with the run of the original
automaton on ``T`` marked with ``p`` and ``q``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .automata import TreeAutomaton
from .compiler import DIAMOND
from .errors import BudgetExceeded, ModelError, ScopeError
from .structures import Tree


# ---------------------------------------------------------------------------
# anchor set and contraction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnchorSet:
    tree: Tree
    A: frozenset
    B: frozenset


def compute_anchor_set(tree: Tree, A: Iterable) -> AnchorSet:
    A = frozenset(A)
    if not A:
        raise ScopeError("the node set A must be non-empty")
    outside = [a for a in A if a not in tree.index]
    if outside:
        raise ScopeError(f"nodes {outside[:3]} are not in the tree")
    has_a = {}
    for v in tree.postorder:
        has_a[v] = v in A or any(has_a[c] for c in tree.children(v))
    B = {tree.root} | set(A)
    for v in tree.domain:
        l, r = tree.left.get(v), tree.right.get(v)
        if v not in A and l is not None and r is not None and has_a[l] and has_a[r]:
            B.add(v)
    return AnchorSet(tree, A, frozenset(B))


@dataclass(frozen=True)
class ContractedTree:
    """The tree ``T'`` on ``B`` plus the anchor map of ``T``."""

    anchors: AnchorSet
    nodes: tuple
    left: Mapping
    right: Mapping
    anchor: Mapping
    root: object
    postorder: tuple

    def children(self, u) -> tuple:
        return tuple(c for c in (self.left.get(u), self.right.get(u)) if c is not None)

    def fiber(self, u) -> list:
        t = self.anchors.tree
        return [v for v in t.domain if self.anchor[v] == u]


def anchor_map(anchors: AnchorSet) -> dict:
    t, B = anchors.tree, anchors.B
    out = {}
    for v in t.preorder:
        out[v] = v if v in B else out[t.parent[v]]
    return out


def contract(anchors: AnchorSet) -> ContractedTree:
    t, B = anchors.tree, anchors.B
    amap = anchor_map(anchors)
    left, right = {}, {}
    for v in t.domain:
        if v not in B or v == t.root:
            continue
        child, w = v, t.parent[v]
        while w not in B:
            child, w = w, t.parent[w]
        side = left if t.left.get(w) == child else right
        if w in side:
            raise ModelError(f"node {w!r} would get two children on one side")
        side[w] = v
    nodes = tuple(v for v in t.domain if v in B)
    post = tuple(v for v in t.postorder if v in B)
    return ContractedTree(anchors, nodes, left, right, amap, t.root, post)


# ---------------------------------------------------------------------------
# state transformations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StateTransformation:
    """Constant, unary or binary map on states ``1..n`` (``table`` is 0-based)."""

    arity: int
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int32)
        if t.ndim != self.arity:
            raise ModelError(f"table has {t.ndim} axes for arity {self.arity}")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "_key", (self.arity, t.shape, t.tobytes()))

    def __eq__(self, other):
        return isinstance(other, StateTransformation) and self._key == other._key

    def __hash__(self):
        return hash(self._key)

    def __call__(self, *states: int) -> int:
        if len(states) != self.arity:
            raise ModelError(f"transformation of arity {self.arity} applied to {len(states)} states")
        return int(self.table[tuple(s - 1 for s in states)])

    def corrupted(self, states: Sequence[int], nstates: int) -> "StateTransformation":
        """Copy with the entry at ``states`` moved to a different state."""
        t = self.table.copy()
        idx = tuple(s - 1 for s in states)
        t[idx] = t[idx] % nstates + 1
        return StateTransformation(self.arity, t)


def _fiber_plan(ct: ContractedTree, u):
    """Postorder fibre nodes with their child slots (fibre node / hole index / missing)."""
    t = ct.anchors.tree
    holes = list(ct.children(u))
    hole_pos = {h: i for i, h in enumerate(holes)}
    fiber = set(ct.fiber(u))
    plan = []
    for v in t.postorder:
        if v not in fiber:
            continue
        slots = []
        for c in (t.left.get(v), t.right.get(v)):
            if c is None:
                slots.append(("none", None))
            elif c in fiber:
                slots.append(("node", c))
            elif c in hole_pos:
                slots.append(("hole", hole_pos[c]))
            else:  # pragma: no cover - excluded by construction of B
                raise ModelError(f"child {c!r} of fibre node {v!r} is neither fibre nor hole")
        plan.append((v, slots))
    return plan, len(holes)


def _run_context(A: TreeAutomaton, ct: ContractedTree, u, marks: Mapping[str, set]) -> StateTransformation:
    t = ct.anchors.tree
    plan, k = _fiber_plan(ct, u)
    n = A.nstates
    combos = np.array(list(itertools.product(range(1, n + 1), repeat=k)), dtype=np.int32)
    Bn = n ** k
    combos = combos.reshape(Bn, k)
    state: dict = {}
    for v, slots in plan:
        sym = A._bidx[t.label[v]] << A.width
        for ti, name in enumerate(A.tracks):
            if v in marks.get(name, ()):
                sym |= 1 << ti
        ch = []
        for kind, ref in slots:
            if kind == "none":
                ch.append(np.zeros(Bn, dtype=np.int32))
            elif kind == "node":
                ch.append(state[ref])
            else:
                ch.append(combos[:, ref])
        state[v] = A.delta[ch[0], ch[1], sym]
    out = state[u]
    return StateTransformation(k, out.reshape((n,) * k) if k else out.reshape(()))


def _marks_from(valuation, variables) -> dict[str, set]:
    marks = {}
    if valuation is DIAMOND or valuation is None:
        return {v: set() for v in variables}
    for v in variables:
        val = valuation.get(v, DIAMOND)
        marks[v] = set() if val is DIAMOND else {val}
    return marks


def context_transform(A: TreeAutomaton, tree: Tree, p, q, u, *, x: Sequence[str], y: Sequence[str],
                      anchors: AnchorSet | None = None, contracted: ContractedTree | None = None
                      ) -> StateTransformation:
    """State transformation of the context of ``u`` in the tree marked by ``p`` and ``q``."""
    ct = contracted or contract(anchors)
    if u not in ct.anchors.B:
        raise ScopeError(f"node {u!r} is not in the anchor set")
    marks = _marks_from(p, x)
    marks.update(_marks_from(q, y))
    return _run_context(A, ct, u, marks)


# ---------------------------------------------------------------------------
# Delta-labelled contracted trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaLabel:
    """``f_u``: one transformation per object bit vector (bit i for ``x[i]``)."""

    entries: tuple

    def __call__(self, bits: int) -> StateTransformation:
        return self.entries[bits]

    @property
    def arity(self) -> int:
        return self.entries[0].arity


@dataclass
class DeltaLabeledTree:
    contracted: ContractedTree
    labels: dict
    q: object
    x: tuple
    y: tuple

    def key(self) -> tuple:
        return tuple(self.labels[u] for u in self.contracted.nodes)

    def differing_nodes(self, other: "DeltaLabeledTree") -> list:
        return [u for u in self.contracted.nodes if self.labels[u] != other.labels[u]]


class DeltaLabeler:
    """Computes ``T'_q`` for many ``q`` on one ``(T, A)``, caching per fibre."""

    def __init__(self, A: TreeAutomaton, anchors: AnchorSet, x: Sequence[str], y: Sequence[str],
                 spot_check: bool = True):
        self.A = A
        self.x, self.y = tuple(x), tuple(y)
        if set(A.tracks) != set(self.x) | set(self.y):
            raise ScopeError(f"automaton tracks {A.tracks} do not match x={self.x}, y={self.y}")
        self.ct = contract(anchors)
        self.anchors = anchors
        self.spot_check = spot_check
        self._cache: dict = {}
        self.labels: dict = {}
        self._fiber = {u: set(self.ct.fiber(u)) for u in self.ct.nodes}
        self._others = {u: sorted((a for a in anchors.A if a != u), key=anchors.tree.index.__getitem__)
                        for u in self.ct.nodes}

    def _intern(self, label: DeltaLabel) -> DeltaLabel:
        return self.labels.setdefault(label, label)

    def label(self, u, q) -> DeltaLabel:
        fib = self._fiber[u]
        qmarks = _marks_from(q, self.y)
        local = tuple(sorted(v for v, m in qmarks.items() if m & fib))
        key = (u, tuple((v, next(iter(qmarks[v]))) for v in local))
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        entries = []
        for bits in range(1 << len(self.x)):
            marks = {v: ({u} if (bits >> i) & 1 else set()) for i, v in enumerate(self.x)}
            marks.update(qmarks)
            g = _run_context(self.A, self.ct, u, marks)
            if self.spot_check:
                rep = self._representative(u, bits)
                if rep is not None:
                    g2 = context_transform(self.A, self.anchors.tree, rep, q, u, x=self.x, y=self.y,
                                           contracted=self.ct)
                    if g2 != g:
                        raise ModelError(f"f_u at {u!r} depends on the representative")
            entries.append(g)
        lab = self._intern(DeltaLabel(tuple(entries)))
        self._cache[key] = lab
        return lab

    def _representative(self, u, bits: int):
        """A valuation in A^x with p(x) = u exactly for the set bits, if one exists."""
        need_u = any((bits >> i) & 1 for i in range(len(self.x)))
        need_other = any(not (bits >> i) & 1 for i in range(len(self.x)))
        if need_u and u not in self.anchors.A:
            return None
        others = self._others[u]
        if need_other and not others:
            return None
        other = others[-1] if others else None
        return {v: (u if (bits >> i) & 1 else other) for i, v in enumerate(self.x)}

    def labelled(self, q) -> DeltaLabeledTree:
        labels = {u: self.label(u, q) for u in self.ct.nodes}
        return DeltaLabeledTree(self.ct, labels, q, self.x, self.y)


def delta_labeling(A: TreeAutomaton, tree: Tree, Aset: Iterable, q, *, x: Sequence[str],
                   y: Sequence[str]) -> DeltaLabeledTree:
    return DeltaLabeler(A, compute_anchor_set(tree, Aset), x, y).labelled(q)


# ---------------------------------------------------------------------------
# emulation
# ---------------------------------------------------------------------------


class EmulationAutomaton:
    """Reads ``Delta x {0,1}^x`` labels lazily: evaluate ``f_u`` at the node's
    object bits, check the arity against the child count, apply."""

    def __init__(self, A: TreeAutomaton):
        self.A = A

    @property
    def accepting(self) -> np.ndarray:
        return self.A.accepting

    def step(self, label: DeltaLabel, bits: int, children: Sequence[int]) -> int:
        g = label(bits)
        if g.arity != len(children):
            raise ModelError(f"label of arity {g.arity} at a node with {len(children)} children")
        return g(*children)

    def run(self, dlt: DeltaLabeledTree, p) -> dict:
        ct = dlt.contracted
        marks = _marks_from(p, dlt.x)
        out = {}
        for u in ct.postorder:
            bits = sum(1 << i for i, v in enumerate(dlt.x) if u in marks[v])
            out[u] = self.step(dlt.labels[u], bits, [out[c] for c in ct.children(u)])
        return out

    def accepts(self, dlt: DeltaLabeledTree, p) -> bool:
        return bool(self.accepting[self.run(dlt, p)[dlt.contracted.root]])


def emulation_automaton(A: TreeAutomaton) -> EmulationAutomaton:
    return EmulationAutomaton(A)


def _check_domain(val, variables, allowed, what):
    if val is DIAMOND:
        return
    for v in variables:
        if val.get(v, DIAMOND) not in allowed:
            raise ScopeError(f"{what}({v}) = {val.get(v)!r} outside its permitted range")


def verify_emulation(A: TreeAutomaton, tree: Tree, Aset: Iterable, p, q, *, x: Sequence[str],
                     y: Sequence[str], labeler: DeltaLabeler | None = None,
                     dlt: DeltaLabeledTree | None = None) -> bool:
    """Run of the emulation on ``(T'_q)_p`` equals the original run restricted to ``B``."""
    labeler = labeler or DeltaLabeler(A, compute_anchor_set(tree, Aset), x, y)
    anchors = labeler.anchors
    _check_domain(p, x, anchors.A, "p")
    _check_domain(q, y, anchors.B, "q")
    dlt = dlt or labeler.labelled(q)
    got = EmulationAutomaton(A).run(dlt, p)
    marks = _marks_from(p, x)
    marks.update(_marks_from(q, y))
    full = A.run(tree, marks)
    return all(got[u] == full[u] for u in anchors.B)


def corrupt_labeling(dlt: DeltaLabeledTree, A: TreeAutomaton, p) -> DeltaLabeledTree:
    """Negative control: alter ``f_u`` at the root at exactly the entry its run uses."""
    em = EmulationAutomaton(A)
    run = em.run(dlt, p)
    ct = dlt.contracted
    u = ct.root
    marks = _marks_from(p, dlt.x)
    bits = sum(1 << i for i, v in enumerate(dlt.x) if u in marks[v])
    lab = dlt.labels[u]
    entries = list(lab.entries)
    entries[bits] = entries[bits].corrupted([run[c] for c in ct.children(u)], A.nstates)
    labels = dict(dlt.labels)
    labels[u] = DeltaLabel(tuple(entries))
    return DeltaLabeledTree(ct, labels, dlt.q, dlt.x, dlt.y)


# ---------------------------------------------------------------------------
# the bound
# ---------------------------------------------------------------------------


def theorem_constant(nstates: int, nx: int, ny: int) -> int:
    """``2^|y| (|y|+1) (|Q|^(2^|x| (|Q|^2+|Q|+1)))^|y|`` as an exact integer."""
    if nstates < 1 or nx < 0 or ny < 0:
        raise ValueError("need |Q| >= 1 and non-negative variable counts")
    delta_size = nstates ** ((1 << nx) * (nstates * nstates + nstates + 1))
    return (1 << ny) * (ny + 1) * delta_size ** ny


def log2_int(v: int) -> float:
    if v <= 0:
        return float("-inf")
    b = v.bit_length()
    if b <= 60:
        return math.log2(v)
    return (b - 60) + math.log2(v >> (b - 60))


def sci(v: int) -> str:
    """Scientific notation for an arbitrarily large integer."""
    if v < 10 ** 15:
        return str(v)
    lg = log2_int(v) * math.log10(2)
    e = int(math.floor(lg))
    return f"{10 ** (lg - e):.3f}e+{e}"


@dataclass
class BoundReport:
    size_A: int
    observed: int
    compressed: int | None
    bound: int
    label_diff_ok: bool
    passed: bool
    nstates: int

    @property
    def log2_bound(self) -> float:
        return log2_int(self.bound)


def observed_sets(table: np.ndarray, tree: Tree, Aset: Iterable, nx: int, ny: int) -> int:
    """``|S^phi(T)[A]|`` from a truth table with axes ``x + y`` in domain order."""
    idx = sorted(tree.index[a] for a in Aset)
    N = len(tree.domain)
    sub = table[np.ix_(*([idx] * nx + [list(range(N))] * ny))]
    flat = sub.reshape(len(idx) ** nx, -1)
    return len({flat[:, j].tobytes() for j in range(flat.shape[1])})


def verify_bound(A: TreeAutomaton, tree: Tree, Aset: Iterable, *, x: Sequence[str], y: Sequence[str],
                 table: np.ndarray | None = None, compress: bool = True,
                 max_params: int = 100_000) -> BoundReport:
    """Check ``observed <= #distinct T'_q <= c |A|^|y|`` on one instance.

    ``observed`` comes from ``table`` (the formula's truth table, axes x+y)
    when given, otherwise from runs of ``A`` over all ``p in A^x``, ``q in V^y``.
    """
    Aset = sorted(set(Aset), key=tree.index.__getitem__)
    x, y = tuple(x), tuple(y)
    N = len(tree.domain)
    if N ** len(y) > max_params:
        raise BudgetExceeded(f"{N ** len(y)} parameter tuples exceed {max_params}")
    if table is None:
        table = _automaton_table(A, tree, x, y)
    observed = observed_sets(table, tree, Aset, len(x), len(y))
    c = theorem_constant(A.nstates, len(x), len(y))
    bound = c * len(Aset) ** len(y)
    compressed = None
    diff_ok = True
    if compress:
        labeler = DeltaLabeler(A, compute_anchor_set(tree, Aset), x, y, spot_check=False)
        base = labeler.labelled(DIAMOND)
        keys = set()
        for qt in itertools.product(tree.domain, repeat=len(y)):
            d = labeler.labelled(dict(zip(y, qt)))
            keys.add(d.key())
            if len(d.differing_nodes(base)) > len(y):
                diff_ok = False
        compressed = len(keys)
    passed = observed <= bound and diff_ok and (compressed is None or observed <= compressed <= bound)
    return BoundReport(len(Aset), observed, compressed, bound, diff_ok, passed, A.nstates)


def _automaton_table(A: TreeAutomaton, tree: Tree, x, y) -> np.ndarray:
    from .compiler import valuation_symbols

    order = list(x) + list(y)
    _, syms = valuation_symbols(A, tree, order)
    acc = A.accepts_batch(tree, syms)
    return acc.reshape((len(tree.domain),) * len(order))
