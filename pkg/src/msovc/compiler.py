"""Formulas over labelled binary trees to tree automata.

A formula with free variables ``x̄`` becomes an automaton over the tree
alphabet times one marker bit per variable.  On an augmented tree, where
each first-order track is set at exactly one node (the value of that
variable) and each set track marks the members of the set, the automaton
accepts iff the formula holds.

Atoms only behave correctly on well-marked trees; the exactly-one condition
is imposed when a first-order variable is quantified and, for the free
first-order variables, once more at the top.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import automata as au
from . import lazy
from .automata import TreeAutomaton
from .errors import BudgetExceeded, ScopeError, SignatureError
from .lazy import LazyAutomaton, View
from .logic.semantics import Evaluator
from .logic.syntax import (And, Const, Eq, Exists, ExistsS, Forall, ForallS, Formula, Implies, In,
                           Mod, Not, Or, Reach, Rel, canonical_form, expand_reach, is_fo)
from .structures import LABEL_PREFIX, LEFT, RIGHT, Tree


class _Diamond:
    """Placeholder value: the variable's track is all zero."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "DIAMOND"

    def __reduce__(self):
        return (_Diamond, ())


DIAMOND = _Diamond()


# ---------------------------------------------------------------------------
# augmented trees
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AugmentedTree:
    """A tree whose labels carry one bit per variable.

    ``valuation`` maps each first-order variable to a node or ``DIAMOND`` and
    each set variable to a set of nodes.
    """

    tree: Tree
    variables: tuple
    valuation: Mapping = field(default_factory=dict)

    def marks(self) -> dict[str, frozenset]:
        out = {}
        for v in self.variables:
            val = self.valuation.get(v, DIAMOND)
            if val is DIAMOND:
                out[v] = frozenset()
            elif is_fo(v):
                out[v] = frozenset([val])
            else:
                out[v] = frozenset(val)
        return out

    def bits(self, node) -> dict[str, int]:
        """The label extension ``f_v`` at one node."""
        return {v: int(node in m) for v, m in self.marks().items()}

    def symbols(self, A: TreeAutomaton) -> np.ndarray:
        return A.tree_symbols(self.tree, {v: m for v, m in self.marks().items() if v in A.tracks})


def augment(tree: Tree, variables: Sequence[str], valuation: Mapping | None = None) -> AugmentedTree:
    valuation = dict(valuation or {})
    for v in variables:
        val = valuation.get(v, DIAMOND)
        if val is DIAMOND:
            continue
        members = [val] if is_fo(v) else list(val)
        for u in members:
            if u not in tree.index:
                raise ScopeError(f"value {u!r} of {v} is not a node of the tree")
    extra = set(valuation) - set(variables)
    if extra:
        raise ScopeError(f"valuation mentions undeclared variables {sorted(extra)}")
    return AugmentedTree(tree, tuple(variables), valuation)


def valuation_symbols(A: TreeAutomaton, tree: Tree, fo_vars: Sequence[str],
                      tuples: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Symbol matrix for many first-order valuations at once.

    ``tuples`` is an integer array ``(B, len(fo_vars))`` of node positions
    (default: all of them, in lexicographic order).  Returns ``(tuples, syms)``.
    """
    N = len(tree.domain)
    m = len(fo_vars)
    if tuples is None:
        grids = np.meshgrid(*[np.arange(N)] * m, indexing="ij") if m else []
        tuples = np.stack([g.reshape(-1) for g in grids], axis=1) if m else np.zeros((1, 0), np.int64)
    base = A.tree_symbols(tree)
    syms = np.repeat(base[None, :], len(tuples), axis=0)
    rows = np.arange(len(tuples))
    for i, v in enumerate(fo_vars):
        t = A.tracks.index(v)
        syms[rows, tuples[:, i]] |= 1 << t
    return tuples, syms


# ---------------------------------------------------------------------------
# atoms
# ---------------------------------------------------------------------------


def _child_atom(base, x, y, side_left: bool) -> TreeAutomaton:
    """Some node marked x has a (left/right) child marked y."""

    def step(l, r, b, bits):
        child = l if side_left else r
        found = bool((l and l[0]) or (r and r[0]) or (bits[x] and child is not None and child[1]))
        return (found, bool(bits[y]))

    return au.from_function(base, {x, y}, step, lambda q: q[0])


def _exists_node(base, tracks, test) -> TreeAutomaton:
    """Some node satisfies ``test(symbol, bits)``."""

    def step(l, r, b, bits):
        return bool(l) or bool(r) or bool(test(b, bits))

    return au.from_function(base, tracks, step, lambda q: q)


def atom_automaton(f: Formula, base: Sequence[str]) -> TreeAutomaton:
    if isinstance(f, Const):
        return au.constant(base, (), f.value)
    if isinstance(f, Rel):
        if f.name in (LEFT, RIGHT):
            if len(f.args) != 2:
                raise SignatureError(f"{f.name} is binary")
            x, y = f.args
            if x == y:
                return au.constant(base, (x,), False)
            return _child_atom(base, x, y, f.name == LEFT)
        if f.name.startswith(LABEL_PREFIX) and len(f.args) == 1:
            sym = f.name[len(LABEL_PREFIX):]
            if sym not in base:
                raise SignatureError(f"label {sym!r} is not in the alphabet {list(base)}")
            x = f.args[0]
            return _exists_node(base, {x}, lambda b, bits: b == sym and bits[x])
        raise SignatureError(f"relation {f.name!r}/{len(f.args)} is not part of the tree signature")
    if isinstance(f, Eq):
        if f.left == f.right:
            return au.constant(base, (f.left,), True)
        return _exists_node(base, {f.left, f.right}, lambda b, bits: bits[f.left] and bits[f.right])
    if isinstance(f, In):
        return _exists_node(base, {f.elem, f.set}, lambda b, bits: bits[f.elem] and bits[f.set])
    if isinstance(f, Mod):
        return au.modular_atom_automaton(f.set, f.a, f.p, base)
    raise TypeError(f"not an atom: {f!r}")


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------


class Compiler:
    """Compiles formulas over one tree alphabet; caches by alpha-normal form."""

    def __init__(self, alphabet: Sequence[str], domain: TreeAutomaton | None = None,
                 table_cap: int | None = None):
        """``domain``, a trackless automaton, describes the only trees that will
        ever be run; every intermediate result is cut down to it.  Steps whose
        table would exceed ``table_cap`` entries switch to on-demand automata."""
        self.table_cap = table_cap
        self.base = tuple(alphabet)
        if domain is not None and (domain.base != self.base or domain.tracks):
            raise SignatureError("domain automaton must be trackless over the same alphabet")
        self.domain = domain
        self.cache: dict[Formula, TreeAutomaton] = {}
        self._one: dict[str, TreeAutomaton] = {}

    def one(self, track: str) -> TreeAutomaton:
        if track not in self._one:
            self._one[track] = au.exactly_one(self.base, track)
        return self._one[track]

    def compile(self, f: Formula, free: Iterable[str] | None = None):
        """Automaton with tracks ``free`` (default: the free variables of ``f``).

        The result is a ``TreeAutomaton`` unless some step outgrew the table
        budget, in which case the on-demand equivalent is returned.
        """
        free = sorted(set(free) if free is not None else f.free)
        unbound = f.free - set(free)
        if unbound:
            raise ScopeError(f"free variables {sorted(unbound)} missing from the track list")
        A = self._compile(f)
        if isinstance(A, LazyAutomaton):
            return View(A, tuple(free))
        A = au.cylindrify(A, free)
        for v in free:
            if is_fo(v):
                A = self._and(A, self.one(v))
        return A

    def _and(self, A, B):
        if isinstance(A, LazyAutomaton) or isinstance(B, LazyAutomaton):
            return lazy.Product(lazy.as_lazy(A), lazy.as_lazy(B), "and")
        return self._dense(lambda: au.minimize(au.product(A, B, "and")),
                           lambda: lazy.Product(lazy.Dense(A), lazy.Dense(B), "and"))

    def _dense(self, build, fallback):
        cap = au.TABLE_CAP if self.table_cap is None else min(self.table_cap, au.TABLE_CAP)
        try:
            with au.table_budget(cap):
                return build()
        except BudgetExceeded:
            return fallback()

    def _compile(self, f: Formula):
        canon, back = canonical_form(f)
        hit = self.cache.get(canon)
        if hit is None:
            hit = self._build(canon)
            self.cache[canon] = hit
        if isinstance(hit, LazyAutomaton):
            names = tuple(sorted(back.get(t, t) for t in hit.tracks))
            return View(hit, names, back)
        return au.rename_tracks(hit, back)

    def _build(self, f: Formula):
        A = self._build_raw(f)
        if isinstance(f, (Not, And, Or, Implies)) and not isinstance(A, LazyAutomaton):
            # only well-marked inputs matter; dropping the rest keeps products small
            for v in A.tracks:
                if is_fo(v):
                    A = self._and(A, self.one(v))
            if self.domain is not None:
                A = self._and(A, self.domain)
        return A

    def _build_raw(self, f: Formula):
        if isinstance(f, (Const, Rel, Eq, In, Mod)):
            return au.minimize(atom_automaton(f, self.base))
        if isinstance(f, Not):
            body = self._compile(f.body)
            if isinstance(body, LazyAutomaton):
                return lazy.Complement(body)
            return au.complement(body)
        if isinstance(f, (And, Or, Implies)):
            op = {And: "and", Or: "or", Implies: "implies"}[type(f)]
            a, b = self._compile(f.left), self._compile(f.right)
            if isinstance(a, LazyAutomaton) or isinstance(b, LazyAutomaton):
                return lazy.Product(lazy.as_lazy(a), lazy.as_lazy(b), op)
            return self._dense(lambda: au.minimize(au.product(a, b, op)),
                               lambda: lazy.Product(lazy.Dense(a), lazy.Dense(b), op))
        if isinstance(f, (Exists, Forall, ExistsS, ForallS)):
            body = self._compile(f.body)
            kind = "element" if isinstance(f, (Exists, Forall)) else "set"
            mode = "exists" if isinstance(f, (Exists, ExistsS)) else "forall"
            if isinstance(body, LazyAutomaton):
                if f.var not in body.tracks:
                    body = View(body, tuple(sorted(body.tracks + (f.var,))))
                return lazy.quantify(body, f.var, kind, mode)
            if f.var not in body.tracks:
                body = au.cylindrify(body, [f.var])
            return self._dense(lambda: au.minimize(au.quantify_marker(body, f.var, kind, mode)),
                               lambda: lazy.quantify(body, f.var, kind, mode))
        if isinstance(f, Reach):
            return self._compile(expand_reach(f))
        raise TypeError(f"cannot compile {f!r}")


def compile_formula(f: Formula, alphabet: Sequence[str], free: Iterable[str] | None = None,
                    compiler: Compiler | None = None) -> TreeAutomaton:
    comp = compiler or Compiler(alphabet)
    if comp.base != tuple(alphabet):
        raise SignatureError("compiler was built for a different alphabet")
    return comp.compile(f, free)


def soundness_mismatches(A: TreeAutomaton, f: Formula, trees: Iterable[Tree], variables: Sequence[str],
                         limit: int = 10) -> list[tuple]:
    """Compare the automaton with brute force on every tree and valuation.

    First-order variables range over nodes, set variables over all node sets.
    Returns up to ``limit`` counterexamples ``(tree, valuation, automaton, oracle)``.
    """
    bad = []
    fo_vars = [v for v in variables if is_fo(v)]
    so_vars = [v for v in variables if not is_fo(v)]
    for t in trees:
        N = len(t.domain)
        ev = Evaluator(t)
        tuples, base_syms = valuation_symbols(A, t, fo_vars)
        for masks in itertools.product(range(1 << N), repeat=len(so_vars)):
            sets = {X: {t.domain[i] for i in range(N) if (m >> i) & 1} for X, m in zip(so_vars, masks)}
            syms = base_syms.copy()
            for X, m in zip(so_vars, masks):
                bit = 1 << A.tracks.index(X)
                for i in range(N):
                    if (m >> i) & 1:
                        syms[:, i] |= bit
            got = A.accepts_batch(t, syms)
            want = np.asarray(ev.table(f, fo_vars, sets)).reshape(-1)
            for i in np.flatnonzero(got != want)[: limit - len(bad)]:
                val = {v: t.domain[tuples[i, j]] for j, v in enumerate(fo_vars)}
                val.update(sets)
                bad.append((t, val, bool(got[i]), bool(want[i])))
            if len(bad) >= limit:
                return bad
    return bad
