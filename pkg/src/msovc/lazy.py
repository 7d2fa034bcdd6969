"""On-demand tree automata.

When a determinised automaton would not fit in a transition table, the same
constructions (view, product, complement, projection) can be carried out
lazily: states are built only when a run reaches them and transitions are
memoised.  Symbols are encoded exactly as for ``TreeAutomaton``.
"""

from __future__ import annotations

from typing import Hashable, Mapping, Sequence

import numpy as np

from .automata import TreeAutomaton, exactly_one, symbol_map
from .errors import AlphabetError, BudgetExceeded
from .structures import Tree

LAZY_STATE_CAP = 2_000_000


class LazyAutomaton:
    """Base class: subclasses implement ``_step`` and ``accepts_state``.

    The missing child is the state ``None``.
    """

    def __init__(self, base: Sequence[str], tracks: Sequence[str]):
        self.base = tuple(base)
        self.tracks = tuple(tracks)
        self._bidx = {b: i for i, b in enumerate(self.base)}
        self._memo: dict = {}

    @property
    def width(self) -> int:
        return len(self.tracks)

    @property
    def nsymbols(self) -> int:
        return len(self.base) << len(self.tracks)

    def __repr__(self):
        return f"<{type(self).__name__} tracks={','.join(self.tracks) or '-'} memo={len(self._memo)}>"

    tree_symbols = TreeAutomaton.tree_symbols

    def step(self, l: Hashable, r: Hashable, s: int) -> Hashable:
        key = (l, r, s)
        q = self._memo.get(key)
        if q is None:
            q = self._step(l, r, s)
            if len(self._memo) >= LAZY_STATE_CAP:
                raise BudgetExceeded(f"lazy automaton memo exceeded {LAZY_STATE_CAP} transitions")
            self._memo[key] = q
        return q

    def _step(self, l, r, s):
        raise NotImplementedError

    def accepts_state(self, q) -> bool:
        raise NotImplementedError

    def run_symbols(self, tree: Tree, syms: np.ndarray) -> list[list]:
        syms = np.asarray(syms)
        if syms.ndim == 1:
            syms = syms[None, :]
        L, R = tree.left_index, tree.right_index
        out = []
        for row in syms.tolist():
            st: list = [None] * len(row)
            for v in tree.post_index.tolist():
                l = st[L[v]] if L[v] >= 0 else None
                r = st[R[v]] if R[v] >= 0 else None
                st[v] = self.step(l, r, row[v])
            out.append(st)
        return out

    def accepts_batch(self, tree: Tree, syms: np.ndarray) -> np.ndarray:
        root = tree.index[tree.root]
        return np.array([self.accepts_state(st[root]) for st in self.run_symbols(tree, syms)], dtype=bool)

    def accepts(self, tree: Tree, marks: Mapping | None = None) -> bool:
        return bool(self.accepts_batch(tree, self.tree_symbols(tree, marks))[0])


class Dense(LazyAutomaton):
    def __init__(self, A: TreeAutomaton):
        super().__init__(A.base, A.tracks)
        self.A = A
        self._delta = A.delta

    def step(self, l, r, s):
        return int(self._delta[l or 0, r or 0, s])

    def accepts_state(self, q) -> bool:
        return bool(self.A.accepting[q])


class View(LazyAutomaton):
    """``inner`` read over other track names: ``rename`` maps inner to outer
    names, and outer tracks without a preimage are ignored."""

    def __init__(self, inner: LazyAutomaton, tracks: Sequence[str], rename: Mapping[str, str] | None = None):
        rename = dict(rename or {})
        tracks = tuple(tracks)
        super().__init__(inner.base, tracks)
        self.inner = inner
        outer_names = [rename.get(t, t) for t in inner.tracks]
        if len(set(outer_names)) != len(outer_names):
            raise AlphabetError(f"renaming merges tracks: {outer_names}")
        # symbols over ``tracks`` -> symbols over the renamed inner tracks -> inner symbols
        m = symbol_map(tuple(sorted(outer_names)), tracks, len(self.base))
        order = sorted(outer_names)
        W = inner.width
        s = np.arange(inner.nsymbols, dtype=np.int64)
        back = (s >> W) << W
        for i, name in enumerate(outer_names):
            back |= ((s >> order.index(name)) & 1) << i
        # back: symbol over renamed-sorted tracks -> inner symbol
        self._map = back[m].tolist()

    def step(self, l, r, s):
        return self.inner.step(l, r, self._map[s])

    def accepts_state(self, q) -> bool:
        return self.inner.accepts_state(q)


class Product(LazyAutomaton):
    OPS = {"and": lambda a, b: a and b, "or": lambda a, b: a or b,
           "implies": lambda a, b: (not a) or b, "iff": lambda a, b: a == b}

    def __init__(self, A: LazyAutomaton, B: LazyAutomaton, op: str = "and"):
        if A.base != B.base:
            raise AlphabetError("alphabets differ")
        tracks = tuple(sorted(set(A.tracks) | set(B.tracks)))
        super().__init__(A.base, tracks)
        self.A = A if A.tracks == tracks else View(A, tracks)
        self.B = B if B.tracks == tracks else View(B, tracks)
        self.op = self.OPS[op]

    def _step(self, l, r, s):
        la, lb = l if l is not None else (None, None)
        ra, rb = r if r is not None else (None, None)
        return (self.A.step(la, ra, s), self.B.step(lb, rb, s))

    def accepts_state(self, q) -> bool:
        return bool(self.op(self.A.accepts_state(q[0]), self.B.accepts_state(q[1])))


class Complement(LazyAutomaton):
    def __init__(self, A: LazyAutomaton):
        super().__init__(A.base, A.tracks)
        self.A = A

    def step(self, l, r, s):
        return self.A.step(l, r, s)

    def accepts_state(self, q) -> bool:
        return not self.A.accepts_state(q)


class Projection(LazyAutomaton):
    """Existential projection of one track; states are frozensets."""

    def __init__(self, A: LazyAutomaton, track: str):
        if track not in A.tracks:
            raise AlphabetError(f"unknown marker {track!r}")
        j = A.tracks.index(track)
        super().__init__(A.base, tuple(t for t in A.tracks if t != track))
        self.A = A
        s = np.arange(self.nsymbols, dtype=np.int64)
        src0 = ((s >> j) << (j + 1)) | (s & ((1 << j) - 1))
        self._src = list(zip(src0.tolist(), (src0 | (1 << j)).tolist()))

    def _step(self, l, r, s):
        s0, s1 = self._src[s]
        A = self.A
        out = set()
        for a in (l if l is not None else (None,)):
            for b in (r if r is not None else (None,)):
                out.add(A.step(a, b, s0))
                out.add(A.step(a, b, s1))
        return frozenset(out)

    def accepts_state(self, q) -> bool:
        return any(self.A.accepts_state(x) for x in q)


def as_lazy(A) -> LazyAutomaton:
    return A if isinstance(A, LazyAutomaton) else Dense(A)


def quantify(A, track: str, kind: str = "set", mode: str = "exists") -> LazyAutomaton:
    A = as_lazy(A)
    if mode == "forall":
        return Complement(quantify(Complement(A), track, kind, "exists"))
    if kind == "element":
        A = Product(A, Dense(exactly_one(A.base, track)), "and")
    return Projection(A, track)
