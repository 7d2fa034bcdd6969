"""Deterministic bottom-up automata on binary trees.

States are ``1..n``; index ``0`` stands for a missing child.  The alphabet is
a base alphabet times one bit per marker track: symbol ``s`` encodes base
symbol ``s >> W`` and bit ``t`` (for ``tracks[t]``) at ``(s >> t) & 1``.
``delta`` is an int32 table of shape ``(n + 1, n + 1, |base| * 2**W)``.
"""

from __future__ import annotations

from collections import deque
from contextlib import contextmanager
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import AlphabetError, BudgetExceeded
from .structures import Tree

TABLE_CAP = 10_000_000
STATE_CAP = 100_000
BOTTOM = 0


class TreeAutomaton:
    __slots__ = ("base", "tracks", "delta", "accepting", "_bidx")

    def __init__(self, base: Sequence[str], tracks: Sequence[str], delta: np.ndarray,
                 accepting: np.ndarray):
        self.base = tuple(base)
        self.tracks = tuple(tracks)
        if list(self.tracks) != sorted(set(self.tracks)):
            raise AlphabetError(f"tracks must be sorted and distinct: {self.tracks}")
        self.delta = np.ascontiguousarray(delta, dtype=np.int32)
        self.accepting = np.asarray(accepting, dtype=bool)
        n1 = self.delta.shape[0]
        if self.delta.shape != (n1, n1, self.nsymbols):
            raise AlphabetError(f"transition table has shape {self.delta.shape}")
        if self.accepting.shape != (n1,) or self.accepting[0]:
            raise AlphabetError("accepting vector must cover the states and exclude the missing child")
        self._bidx = {b: i for i, b in enumerate(self.base)}

    # -- shape ----------------------------------------------------------------

    @property
    def nstates(self) -> int:
        return self.delta.shape[0] - 1

    @property
    def width(self) -> int:
        return len(self.tracks)

    @property
    def nsymbols(self) -> int:
        return len(self.base) << len(self.tracks)

    def __repr__(self):
        return (f"<TreeAutomaton states={self.nstates} base={len(self.base)} "
                f"tracks={','.join(self.tracks) or '-'} final={int(self.accepting.sum())}>")

    def symbol(self, base_symbol: str, marks: Iterable[str] = ()) -> int:
        """Index of ``base_symbol`` with the given tracks set to 1."""
        try:
            s = self._bidx[base_symbol] << self.width
        except KeyError:
            raise AlphabetError(f"unknown symbol {base_symbol!r}") from None
        for m in marks:
            if m not in self.tracks:
                raise AlphabetError(f"unknown marker {m!r}")
            s |= 1 << self.tracks.index(m)
        return s

    def symbol_name(self, s: int) -> str:
        b = self.base[s >> self.width]
        if not self.tracks:
            return b
        bits = "".join(str((s >> t) & 1) for t in range(self.width))
        return f"{b}:{bits}"

    def final_states(self) -> list[int]:
        return [int(q) for q in np.flatnonzero(self.accepting)]

    # -- runs -----------------------------------------------------------------

    def tree_symbols(self, tree: Tree, marks: Mapping | None = None) -> np.ndarray:
        """Symbol index per node (domain order); ``marks`` maps track -> set of nodes."""
        marks = marks or {}
        unknown = set(marks) - set(self.tracks)
        if unknown:
            raise AlphabetError(f"unknown markers {sorted(unknown)}")
        try:
            syms = np.array([self._bidx[tree.label[v]] << self.width for v in tree.domain], dtype=np.int64)
        except KeyError as exc:
            raise AlphabetError(f"tree symbol {exc.args[0]!r} not in the automaton alphabet") from None
        for t, name in enumerate(self.tracks):
            for v in marks.get(name, ()):
                if v not in tree.index:
                    raise AlphabetError(f"marked node {v!r} is not in the tree")
                syms[tree.index[v]] |= 1 << t
        return syms

    def run_symbols(self, tree: Tree, syms: np.ndarray) -> np.ndarray:
        """States per node for one symbol vector ``(N,)`` or a batch ``(B, N)``."""
        syms = np.asarray(syms)
        single = syms.ndim == 1
        if single:
            syms = syms[None, :]
        B, N = syms.shape
        out = np.zeros((B, N + 1), dtype=np.int32)  # column N stays 0 for missing children
        left = np.where(tree.left_index >= 0, tree.left_index, N)
        right = np.where(tree.right_index >= 0, tree.right_index, N)
        d = self.delta
        for v in tree.post_index:
            out[:, v] = d[out[:, left[v]], out[:, right[v]], syms[:, v]]
        out = out[:, :N]
        return out[0] if single else out

    def run(self, tree: Tree, marks: Mapping | None = None) -> dict:
        states = self.run_symbols(tree, self.tree_symbols(tree, marks))
        return {v: int(states[i]) for i, v in enumerate(tree.domain)}

    def accepts(self, tree: Tree, marks: Mapping | None = None) -> bool:
        states = self.run_symbols(tree, self.tree_symbols(tree, marks))
        return bool(self.accepting[states[tree.index[tree.root]]])

    def accepts_batch(self, tree: Tree, syms: np.ndarray) -> np.ndarray:
        states = self.run_symbols(tree, syms)
        return self.accepting[states[..., tree.index[tree.root]]]

    # -- dump -----------------------------------------------------------------

    def dump(self) -> str:
        def q(x):
            return "_" if x == 0 else str(x)

        lines = [f"states {self.nstates}",
                 f"base {' '.join(self.base)}",
                 f"tracks {' '.join(self.tracks) or '-'}",
                 f"final {' '.join(map(str, self.final_states())) or '-'}"]
        n1 = self.nstates + 1
        for l in range(n1):
            for r in range(n1):
                for s in range(self.nsymbols):
                    lines.append(f"({q(l)}, {q(r)}, {self.symbol_name(s)}) -> {self.delta[l, r, s]}")
        return "\n".join(lines) + "\n"


@contextmanager
def table_budget(cap: int):
    """Temporarily lower (or raise) the transition-table cap."""
    global TABLE_CAP
    saved, TABLE_CAP = TABLE_CAP, cap
    try:
        yield
    finally:
        TABLE_CAP = saved


def _check_table(nstates: int, nsymbols: int):
    if nstates > STATE_CAP:
        raise BudgetExceeded(f"automaton would need {nstates} states (cap {STATE_CAP})")
    size = (nstates + 1) ** 2 * nsymbols
    if size > TABLE_CAP:
        raise BudgetExceeded(f"transition table would need {size} entries (cap {TABLE_CAP})")


def _bits_of(s: int, width: int) -> tuple:
    return tuple((s >> t) & 1 for t in range(width))


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def from_function(base: Sequence[str], tracks: Sequence[str],
                  step: Callable[[Hashable, Hashable, str, dict], Hashable],
                  accept: Callable[[Hashable], bool]) -> TreeAutomaton:
    """Explore the states reachable under ``step(left, right, symbol, bits)``.

    Children are ``None`` when missing; ``bits`` maps track name -> 0/1.
    """
    tracks = tuple(sorted(tracks))
    W = len(tracks)
    nsym = len(base) << W
    decoded = [(base[s >> W], dict(zip(tracks, _bits_of(s, W)))) for s in range(nsym)]
    states: list = [None]
    index: dict = {}
    table: dict = {}
    queue = deque()

    def intern(x):
        if x not in index:
            index[x] = len(states)
            states.append(x)
            queue.append(index[x])
            _check_table(len(states) - 1, nsym)
        return index[x]

    for s, (b, bits) in enumerate(decoded):
        table[(0, 0, s)] = intern(step(None, None, b, bits))
    while queue:
        q = queue.popleft()
        known = list(range(len(states)))
        for o in known:
            for l, r in ((q, o), (o, q)):
                if (l, r, 0) in table:
                    continue
                for s, (b, bits) in enumerate(decoded):
                    table[(l, r, s)] = intern(step(states[l], states[r], b, bits))
    n = len(states) - 1
    delta = np.zeros((n + 1, n + 1, nsym), dtype=np.int32)
    for (l, r, s), t in table.items():
        delta[l, r, s] = t
    acc = np.array([False] + [bool(accept(x)) for x in states[1:]])
    return TreeAutomaton(base, tracks, delta, acc)


def constant(base: Sequence[str], tracks: Sequence[str] = (), value: bool = True) -> TreeAutomaton:
    tracks = tuple(sorted(tracks))
    nsym = len(base) << len(tracks)
    return TreeAutomaton(base, tracks, np.ones((2, 2, nsym), dtype=np.int32), np.array([False, value]))


def symbol_map(src_tracks: Sequence[str], dst_tracks: Sequence[str], nbase: int) -> np.ndarray:
    """For each symbol over ``dst_tracks`` the symbol over ``src_tracks`` it projects to."""
    src_tracks, dst_tracks = tuple(src_tracks), tuple(dst_tracks)
    missing = set(src_tracks) - set(dst_tracks)
    if missing:
        raise AlphabetError(f"tracks {sorted(missing)} would be dropped")
    Wd = len(dst_tracks)
    s = np.arange(nbase << Wd, dtype=np.int64)
    out = (s >> Wd) << len(src_tracks)
    for i, t in enumerate(src_tracks):
        j = dst_tracks.index(t)
        out |= ((s >> j) & 1) << i
    return out


def cylindrify(A: TreeAutomaton, tracks: Iterable[str]) -> TreeAutomaton:
    """Same language, read over a larger set of tracks (extra bits ignored)."""
    tracks = tuple(sorted(set(tracks) | set(A.tracks)))
    if tracks == A.tracks:
        return A
    m = symbol_map(A.tracks, tracks, len(A.base))
    _check_table(A.nstates, len(m))
    return TreeAutomaton(A.base, tracks, A.delta[:, :, m], A.accepting)


def rename_tracks(A: TreeAutomaton, mapping: Mapping[str, str]) -> TreeAutomaton:
    new = [mapping.get(t, t) for t in A.tracks]
    if len(set(new)) != len(new):
        raise AlphabetError(f"renaming merges tracks: {new}")
    order = sorted(new)
    # symbol over new sorted tracks -> symbol over old tracks
    W = A.width
    s = np.arange(A.nsymbols, dtype=np.int64)
    m = (s >> W) << W
    for i, name in enumerate(new):
        j = order.index(name)
        m |= ((s >> j) & 1) << i
    return TreeAutomaton(A.base, order, A.delta[:, :, m], A.accepting)


def _same_base(A: TreeAutomaton, B: TreeAutomaton):
    if A.base != B.base:
        raise AlphabetError(f"alphabets differ: {A.base} vs {B.base}")


def complement(A: TreeAutomaton) -> TreeAutomaton:
    acc = ~A.accepting
    acc[0] = False
    return TreeAutomaton(A.base, A.tracks, A.delta, acc)


def product(A: TreeAutomaton, B: TreeAutomaton, op: str = "and") -> TreeAutomaton:
    """Reachable product; ``op`` combines acceptance (and / or / implies / iff)."""
    _same_base(A, B)
    tracks = tuple(sorted(set(A.tracks) | set(B.tracks)))
    A, B = cylindrify(A, tracks), cylindrify(B, tracks)
    nsym = A.nsymbols
    nb = B.nstates + 1
    pa, pb = [0], [0]
    codes = {0: 0}

    def add(codes_arr):
        fresh = []
        for c in np.unique(codes_arr).tolist():
            if c not in codes:
                codes[c] = len(pa)
                pa.append(c // nb)
                pb.append(c % nb)
                fresh.append(codes[c])
        _check_table(len(pa) - 1, nsym)
        return fresh

    rows: dict[tuple[int, int], np.ndarray] = {}

    def trans(L, R):
        L, R = np.asarray(L), np.asarray(R)
        ia, ib = np.asarray(pa), np.asarray(pb)
        ca = A.delta[ia[L][:, None], ia[R][:, None], np.arange(nsym)[None, :]]
        cb = B.delta[ib[L][:, None], ib[R][:, None], np.arange(nsym)[None, :]]
        return ca.astype(np.int64) * nb + cb

    frontier = add(trans([0], [0]))
    rows[(0, 0)] = trans([0], [0])[0]
    done = [0]
    while frontier:
        known = done + frontier
        pairs = [(l, r) for l in frontier for r in known] + [(l, r) for l in done for r in frontier]
        L = [p[0] for p in pairs]
        R = [p[1] for p in pairs]
        res = trans(L, R)
        for p, row in zip(pairs, res):
            rows[p] = row
        done = known
        frontier = add(res)
    n = len(pa) - 1
    lookup_keys = np.array(sorted(codes))
    lookup_vals = np.array([codes[k] for k in lookup_keys], dtype=np.int32)
    delta = np.zeros((n + 1, n + 1, nsym), dtype=np.int32)
    for (l, r), row in rows.items():
        delta[l, r] = lookup_vals[np.searchsorted(lookup_keys, row)]
    fa, fb = A.accepting[pa], B.accepting[pb]
    acc = {"and": fa & fb, "or": fa | fb, "implies": ~fa | fb, "iff": fa == fb}[op]
    acc = np.array(acc)
    acc[0] = False
    return TreeAutomaton(A.base, tracks, delta, acc)


def boolean_compose(op: str, A: TreeAutomaton, B: TreeAutomaton | None = None) -> TreeAutomaton:
    if op == "not":
        if B is not None:
            raise ValueError("'not' takes one automaton")
        return complement(A)
    if B is None:
        raise ValueError(f"'{op}' takes two automata")
    return product(A, B, op)


def project(A: TreeAutomaton, track: str) -> TreeAutomaton:
    """Existential projection of one track followed by subset construction."""
    if track not in A.tracks:
        raise AlphabetError(f"unknown marker {track!r}")
    j = A.tracks.index(track)
    tracks = tuple(t for t in A.tracks if t != track)
    W = len(tracks)
    nsym = len(A.base) << W
    s = np.arange(nsym, dtype=np.int64)
    # symbol over the remaining tracks -> the two source symbols (bit 0 / bit 1)
    low = s & ((1 << j) - 1)
    high = (s >> j) << (j + 1)
    src0 = high | low
    src1 = src0 | (1 << j)
    srcs = np.stack([src0, src1], axis=1)  # (nsym, 2)
    n1 = A.nstates + 1
    macros: list[np.ndarray] = [np.array([0])]
    index: dict[bytes, int] = {}
    bottom_key = np.packbits(np.eye(n1, dtype=bool)[0]).tobytes()
    index[bottom_key] = 0

    def successors(L, R):
        sub = A.delta[np.ix_(macros[L], macros[R])]  # (|L|, |R|, nsym_src)
        vals = sub[:, :, srcs]  # (|L|, |R|, nsym, 2)
        vals = np.moveaxis(vals, 2, 0).reshape(nsym, -1)
        hot = np.zeros((nsym, n1), dtype=bool)
        hot[np.arange(nsym)[:, None], vals] = True
        return hot

    table: dict[tuple[int, int], list[int]] = {}
    frontier = []

    def intern_rows(hot):
        packed = np.packbits(hot, axis=1)
        uniq, first, inv = np.unique(packed, axis=0, return_index=True, return_inverse=True)
        ids = np.empty(len(uniq), dtype=np.int32)
        for u in np.argsort(first):
            k = uniq[u].tobytes()
            q = index.get(k)
            if q is None:
                q = len(macros)
                index[k] = q
                macros.append(np.flatnonzero(hot[first[u]]))
                frontier.append(q)
                _check_table(len(macros) - 1, nsym)
            ids[u] = q
        return ids[inv.reshape(-1)]

    table[(0, 0)] = intern_rows(successors(0, 0))
    done = [0]
    while frontier:
        new = list(frontier)
        frontier.clear()
        known = done + new
        for l in new:
            for r in known:
                table[(l, r)] = intern_rows(successors(l, r))
                if l != r:
                    table[(r, l)] = intern_rows(successors(r, l))
        done = known
    n = len(macros) - 1
    delta = np.zeros((n + 1, n + 1, nsym), dtype=np.int32)
    for (l, r), row in table.items():
        delta[l, r] = row
    acc = np.array([False] + [bool(A.accepting[m].any()) for m in macros[1:]])
    return minimize(TreeAutomaton(A.base, tracks, delta, acc))


def exactly_one(base: Sequence[str], track: str) -> TreeAutomaton:
    """Accepts trees in which exactly one node carries the ``track`` mark."""
    return from_function(base, [track],
                         lambda l, r, b, bits: min(2, (l or 0) + (r or 0) + bits[track]),
                         lambda q: q == 1)


def modular_atom_automaton(track: str, a: int, p: int, base: Sequence[str]) -> TreeAutomaton:
    """``|marked nodes| = a (mod p)``: states are residues, F = {a}."""
    if p < 2 or not 0 <= a < p:
        raise ValueError(f"bad modulus: a={a}, p={p}")
    return from_function(base, [track],
                         lambda l, r, b, bits: ((l or 0) + (r or 0) + bits[track]) % p,
                         lambda q: q == a)


def quantify_marker(A: TreeAutomaton, track: str, kind: str = "set", mode: str = "exists") -> TreeAutomaton:
    """Eliminate a marker track by an existential or universal quantifier.

    ``kind='element'`` restricts the marker to exactly one node.
    """
    if track not in A.tracks:
        raise AlphabetError(f"unknown marker {track!r}")
    if kind not in ("set", "element") or mode not in ("exists", "forall"):
        raise ValueError(f"bad quantifier kind/mode: {kind}/{mode}")
    if mode == "forall":
        return complement(quantify_marker(complement(A), track, kind, "exists"))
    if kind == "element":
        A = minimize(product(A, exactly_one(A.base, track), "and"))
    return project(A, track)


# ---------------------------------------------------------------------------
# minimisation
# ---------------------------------------------------------------------------


def minimize(A: TreeAutomaton, seed: int = 0) -> TreeAutomaton:
    """Merge equivalent states (coarsest congruence refining acceptance).

    Rows are compared through random hashes; the final partition is then
    checked exactly and the refinement restarted with fresh weights if a
    hash collision merged inequivalent states.
    """
    n1 = A.nstates + 1
    rng = np.random.default_rng(seed)
    for _attempt in range(8):
        cls = _refine(A, rng)
        if _is_congruence(A, cls):
            break
    else:  # pragma: no cover - astronomically unlikely
        return A
    k = int(cls.max())
    if k == A.nstates:
        return A
    reps = np.zeros(k + 1, dtype=np.int64)
    seen = set()
    for q in range(n1):
        c = int(cls[q])
        if c not in seen:
            seen.add(c)
            reps[c] = q
    delta = cls[A.delta[np.ix_(reps, reps)]].astype(np.int32)
    return TreeAutomaton(A.base, A.tracks, delta, A.accepting[reps])


def _canonical_classes(keys: np.ndarray) -> np.ndarray:
    """Class ids numbered by first occurrence; keys[0] (missing child) gets 0."""
    _, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inv].astype(np.int64)


def _refine(A: TreeAutomaton, rng) -> np.ndarray:
    n1 = A.nstates + 1
    d = A.delta.astype(np.int64)
    base_key = np.zeros((n1, 2), dtype=np.int64)
    base_key[0, 0] = -1
    base_key[:, 1] = A.accepting
    cls = _canonical_classes(base_key)
    while True:
        w1 = rng.integers(1, 1 << 62, size=(n1, A.nsymbols), dtype=np.int64)
        w2 = rng.integers(1, 1 << 62, size=(n1, A.nsymbols), dtype=np.int64)
        c = cls[d]
        h1 = (c * w1[None, :, :]).sum(axis=(1, 2))
        h2 = (c * w2[:, None, :]).sum(axis=(0, 2))
        keys = np.stack([base_key[:, 0], cls, h1, h2], axis=1)
        new = _canonical_classes(keys)
        if new.max() == cls.max():
            return new
        cls = new


def _is_congruence(A: TreeAutomaton, cls: np.ndarray) -> bool:
    k = int(cls.max()) + 1
    first = np.full(k, -1)
    for q in range(len(cls) - 1, -1, -1):
        first[cls[q]] = q
    rep = first[cls]
    if not np.array_equal(A.accepting, A.accepting[rep]):
        return False
    c = cls[A.delta]
    return bool(np.array_equal(c, c[rep][:, rep]))


# ---------------------------------------------------------------------------
# convenience
# ---------------------------------------------------------------------------


def parity_automaton(base: Sequence[str], symbol: str) -> TreeAutomaton:
    """Counts ``symbol`` nodes mod 2 and accepts on even."""
    return from_function(base, [],
                         lambda l, r, b, bits: ((l or 0) + (r or 0) + (b == symbol)) % 2,
                         lambda q: q == 0)


def equivalent_on(A: TreeAutomaton, B: TreeAutomaton, trees: Iterable[Tree]) -> bool:
    for t in trees:
        if A.accepts(t) != B.accepts(t):
            return False
    return True
