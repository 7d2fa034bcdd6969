"""Brute-force CMSO semantics over finite structures.

A subformula with free first-order variables ``v1 < v2 < ...`` (sorted by
name) evaluates to a boolean numpy array with one axis per variable, given
concrete values for its free set variables.  First-order quantifiers reduce
an axis; set quantifiers loop over all subsets of the domain.  Results are
memoised on (subformula, masks of its free set variables).
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..errors import BudgetExceeded, ScopeError, SignatureError
from ..structures import VERTEX_SORT, Structure
from .syntax import (And, Const, Eq, Exists, ExistsS, Forall, ForallS, Formula, Implies, In, Mod,
                     Not, Or, PartitionedFormula, Reach, Rel, expand_reach, flatten_and, is_fo,
                     relations_used)

DEFAULT_BUDGET = 1 << 30
_CACHE_LIMIT = 400_000


class Evaluator:
    """Evaluates formulas on one structure; keeps a memo across calls.

    ``reach`` selects how reach macros are evaluated: ``expand`` uses their
    set-quantified definition (the plain oracle), ``direct`` a boolean
    transitive closure.
    """

    def __init__(self, structure: Structure, budget: int = DEFAULT_BUDGET, reach: str = "expand"):
        if reach not in ("expand", "direct"):
            raise ValueError(f"unknown reach mode {reach!r}")
        self.s = structure
        self.n = len(structure.domain)
        self.budget = budget
        self.reach = reach
        self.spent = 0
        self._memo: dict = {}

    # -- helpers ----------------------------------------------------------

    def check_signature(self, f: Formula):
        sig = self.s.signature
        for name, arity in relations_used(f):
            if name not in sig:
                raise SignatureError(f"relation {name!r} is not in the structure's signature")
            if sig.arity(name) != arity:
                raise SignatureError(f"relation {name!r} has arity {sig.arity(name)}, used with {arity}")

    def _subset_vector(self, mask: int) -> np.ndarray:
        return np.array([(mask >> i) & 1 for i in range(self.n)], dtype=bool)

    def _charge(self, count: int):
        self.spent += count
        if count > self.budget or self.spent > self.budget:
            raise BudgetExceeded(
                f"brute-force enumeration needs more than {self.budget} set valuations")

    # -- public -----------------------------------------------------------

    def table(self, f: Formula, order: Sequence[str], sets: Mapping[str, Iterable] | None = None) -> np.ndarray:
        """Truth table of ``f`` with axes in ``order`` (must cover the free FO variables)."""
        self.check_signature(f)
        sets = dict(sets or {})
        missing = f.so_free - sets.keys()
        if missing:
            raise ScopeError(f"no value for set variables {sorted(missing)}")
        missing = f.fo_free - set(order)
        if missing:
            raise ScopeError(f"no axis for variables {sorted(missing)}")
        env = {}
        for name, members in sets.items():
            mask = 0
            for e in members:
                if e not in self.s.index:
                    raise ScopeError(f"element {e!r} of {name} is outside the domain")
                mask |= 1 << self.s.index[e]
            env[name] = mask
        vs, arr = self.eval(f, env)
        return _to_order(vs, arr, tuple(order), self.n)

    def holds(self, f: Formula, valuation: Mapping) -> bool:
        fo = {k: v for k, v in valuation.items() if is_fo(k)}
        so = {k: v for k, v in valuation.items() if not is_fo(k)}
        missing = f.fo_free - fo.keys()
        if missing:
            raise ScopeError(f"no value for variables {sorted(missing)}")
        order = sorted(f.fo_free)
        for k in order:
            if fo[k] not in self.s.index:
                raise ScopeError(f"value {fo[k]!r} of {k} is outside the domain")
        arr = self.table(f, order, so)
        return bool(arr[tuple(self.s.index[fo[k]] for k in order)])

    # -- recursion ---------------------------------------------------------

    def eval(self, f: Formula, env: Mapping[str, int]) -> tuple[tuple, np.ndarray]:
        key = (f, tuple(env[v] for v in sorted(f.so_free)))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        out = self._eval(f, env)
        if len(self._memo) > _CACHE_LIMIT:
            self._memo.clear()
        self._memo[key] = out
        return out

    def _eval(self, f, env):
        n = self.n
        if isinstance(f, Const):
            return (), np.array(f.value)
        if isinstance(f, Rel):
            arr = self.s.relation_array(f.name)
            return _rename_axes(f.args, arr)
        if isinstance(f, Eq):
            if f.left == f.right:
                return (f.left,), np.ones(n, dtype=bool)
            return tuple(sorted((f.left, f.right))), np.eye(n, dtype=bool)
        if isinstance(f, In):
            return (f.elem,), self._subset_vector(env[f.set])
        if isinstance(f, Mod):
            return (), np.array(bin(env[f.set]).count("1") % f.p == f.a)
        if isinstance(f, Not):
            vs, arr = self.eval(f.body, env)
            return vs, ~arr
        if isinstance(f, And):
            lv, la = self.eval(f.left, env)
            if not la.any():
                return _false_over(f, n)
            rv, ra = self.eval(f.right, env)
            return _combine(lv, la, rv, ra, np.logical_and, n)
        if isinstance(f, Or):
            lv, la = self.eval(f.left, env)
            if la.all() and set(lv) == f.fo_free:
                return lv, la
            rv, ra = self.eval(f.right, env)
            return _combine(lv, la, rv, ra, np.logical_or, n)
        if isinstance(f, Implies):
            lv, la = self.eval(f.left, env)
            if not la.any():
                return _true_over(f, n)
            rv, ra = self.eval(f.right, env)
            return _combine(lv, ~la, rv, ra, np.logical_or, n)
        if isinstance(f, (Exists, Forall)):
            vs, arr = self.eval(f.body, env)
            red = np.any if isinstance(f, Exists) else np.all
            if f.var in vs:
                i = vs.index(f.var)
                return vs[:i] + vs[i + 1:], red(arr, axis=i)
            if n == 0:
                return vs, np.full(arr.shape, isinstance(f, Forall))
            return vs, arr
        if isinstance(f, (ExistsS, ForallS)):
            return self._eval_set_quantifier(f, env)
        if isinstance(f, Reach):
            if self.reach == "direct":
                return self._reach_direct(f, env)
            return self.eval(expand_reach(f), env)
        raise TypeError(f"unknown formula node {f!r}")

    def _eval_set_quantifier(self, f, env):
        n = self.n
        body = f.body
        if f.var not in body.so_free:
            return self.eval(body, env)
        exists = isinstance(f, ExistsS)
        guard_mask, body = self._relativised(f, env)
        out_vars = tuple(sorted(f.fo_free))
        acc = np.full((n,) * len(out_vars), not exists, dtype=bool)
        for mask in self._submasks(guard_mask):
            vs, arr = self.eval(body, {**env, f.var: mask})
            arr = _to_order(vs, arr, out_vars, n)
            if exists:
                acc |= arr
                if acc.all():
                    break
            else:
                acc &= arr
                if not acc.any():
                    break
        return out_vars, acc

    def _submasks(self, full: int):
        bits = [1 << i for i in range(self.n) if (full >> i) & 1]
        self._charge(1 << len(bits))
        for r in range(len(bits) + 1):
            for combo in itertools.combinations(bits, r):
                yield sum(combo)

    def _relativised(self, f, env):
        """Spot ``exists X (X <= g and ...)`` / ``forall X (X <= g -> ...)``.

        Returns the mask of ``g`` (all ones when no guard is found) and the
        body to evaluate per subset.  Only subsets of ``g`` can satisfy the
        guard, so skipping the others is sound.
        """
        full = (1 << self.n) - 1
        X = f.var
        if isinstance(f, ExistsS):
            parts = flatten_and(f.body)
        elif isinstance(f.body, Implies):
            parts = flatten_and(f.body.left)
        else:
            return full, f.body
        for p in parts:
            if (isinstance(p, Forall) and isinstance(p.body, Implies)
                    and p.body.left == In(p.var, X) and X not in p.body.right.so_free
                    and p.body.right.fo_free <= {p.var}):
                vs, arr = self.eval(p.body.right, env)
                if not vs:
                    arr = np.full(self.n, bool(arr))
                mask = 0
                for i in np.flatnonzero(arr):
                    mask |= 1 << int(i)
                return mask, f.body
        return full, f.body

    def _reach_direct(self, f: Reach, env):
        n = self.n
        vs, arr = self.eval(f.step, env)
        a, b = "\x00a", "\x00b"
        ren = {f.a: a, f.b: b}
        vs2 = tuple(ren.get(v, v) for v in vs)
        others = tuple(sorted(v for v in vs2 if v not in (a, b)))
        arr = _to_order(vs2, arr, (a, b) + others, n)
        # batch over the other variables: move (a, b) last
        m = np.moveaxis(arr, (0, 1), (-2, -1)).astype(np.int32)
        closure = np.maximum(m, np.eye(n, dtype=np.int32))
        while True:
            nxt = ((closure @ closure) > 0).astype(np.int32)
            if np.array_equal(nxt, closure):
                break
            closure = nxt
        closure = np.moveaxis(closure.astype(bool), (-2, -1), (0, 1))
        # now axes are (a, b) + others; substitute src/dst and merge duplicates
        return _rename_axes((f.src, f.dst) + others, closure)


# ---------------------------------------------------------------------------
# axis bookkeeping
# ---------------------------------------------------------------------------


def _rename_axes(names: Sequence[str], arr: np.ndarray) -> tuple[tuple, np.ndarray]:
    """Label axes by ``names``; repeated names take the diagonal; sort axes by name."""
    names = tuple(names)
    distinct = tuple(sorted(set(names)))
    if names == distinct:
        return names, arr
    letters = {v: chr(ord("a") + i) for i, v in enumerate(distinct)}
    sub = "".join(letters[v] for v in names) + "->" + "".join(letters[v] for v in distinct)
    out = np.einsum(sub, arr.astype(np.uint8)).astype(bool)
    return distinct, out


def _to_order(vs: tuple, arr: np.ndarray, order: tuple, n: int) -> np.ndarray:
    """Broadcast ``arr`` (axes ``vs``) to the full axes ``order``."""
    if vs == order:
        return arr
    perm = [vs.index(v) for v in order if v in vs]
    if perm != list(range(arr.ndim)):
        arr = np.transpose(arr, perm)
    shape = [n if v in vs else 1 for v in order]
    arr = arr.reshape(shape)
    return np.broadcast_to(arr, (n,) * len(order))


def _combine(lv, la, rv, ra, op, n):
    if lv == rv:
        return lv, op(la, ra)
    out = tuple(sorted(set(lv) | set(rv)))
    return out, op(_expand(lv, la, out), _expand(rv, ra, out))


def _expand(vs, arr, out):
    shape = [arr.shape[vs.index(v)] if v in vs else 1 for v in out]
    return arr.reshape(shape)


def _false_over(f, n):
    vs = tuple(sorted(f.fo_free))
    return vs, np.zeros((n,) * len(vs), dtype=bool)


def _true_over(f, n):
    vs = tuple(sorted(f.fo_free))
    return vs, np.ones((n,) * len(vs), dtype=bool)


# ---------------------------------------------------------------------------
# module-level API
# ---------------------------------------------------------------------------


def check(structure: Structure, formula: Formula, valuation: Mapping | None = None,
          budget: int = DEFAULT_BUDGET, reach: str = "expand") -> bool:
    """Does ``structure`` satisfy ``formula`` under ``valuation``?"""
    return Evaluator(structure, budget, reach).holds(formula, dict(valuation or {}))


Checker = Callable[[Structure, Formula, Mapping], bool]


def vertex_elements(structure: Structure) -> list | None:
    """Vertex elements of an incidence encoding, else ``None``."""
    if structure.kind == "graph-inc" and VERTEX_SORT in structure.signature:
        vs = {t[0] for t in structure.relations[VERTEX_SORT]}
        return [e for e in structure.domain if e in vs]
    return None


def define_set_system(structure: Structure, pf: PartitionedFormula, checker: Checker | None = None,
                      elements: Sequence | None = None, budget: int = DEFAULT_BUDGET,
                      reach: str = "expand"):
    """The family ``{ {u : S |= phi(u, v)} : v }`` as a k-tuple set system.

    Tuples range over ``elements`` (default: the domain, or only the vertex
    elements of an incidence encoding).  With a ``checker`` every tuple is
    decided by a separate call; otherwise one table is computed.
    """
    from ..setsys import TupleSetSystem

    if elements is None:
        elements = vertex_elements(structure)
    if elements is None:
        elements = list(structure.domain)
    elements = list(elements)
    x, y = pf.x, pf.y
    count = len(elements) ** (len(x) + len(y))
    if count > budget:
        raise BudgetExceeded(f"{count} tuple valuations exceed the budget {budget}")
    members: dict[tuple, set] = {}
    if checker is not None:
        for vbar in itertools.product(elements, repeat=len(y)):
            cur = members.setdefault(vbar, set())
            for ubar in itertools.product(elements, repeat=len(x)):
                val = dict(zip(x, ubar))
                val.update(zip(y, vbar))
                if checker(structure, pf.formula, val):
                    cur.add(ubar)
    else:
        ev = Evaluator(structure, budget, reach)
        order = x + y
        tab = ev.table(pf.formula, order)
        idx = [structure.index[e] for e in elements]
        sub = tab[np.ix_(*([idx] * len(order)))] if order else tab
        for vpos in itertools.product(range(len(elements)), repeat=len(y)):
            sl = sub[(Ellipsis,) + vpos] if y else sub
            hits = np.argwhere(sl)
            members[tuple(elements[i] for i in vpos)] = {tuple(elements[i] for i in row) for row in hits}
    return TupleSetSystem(elements, members.values(), len(x))


def member_sets(structure: Structure, pf: PartitionedFormula, **kw) -> dict[tuple, frozenset]:
    """Per-parameter-tuple members (not deduplicated)."""
    ev = Evaluator(structure, kw.get("budget", DEFAULT_BUDGET), kw.get("reach", "expand"))
    elements = kw.get("elements") or vertex_elements(structure) or list(structure.domain)
    tab = ev.table(pf.formula, pf.x + pf.y)
    idx = [structure.index[e] for e in elements]
    sub = tab[np.ix_(*([idx] * len(pf.variables)))]
    out = {}
    for vpos in itertools.product(range(len(elements)), repeat=len(pf.y)):
        sl = sub[(Ellipsis,) + vpos] if pf.y else sub
        out[tuple(elements[i] for i in vpos)] = frozenset(
            tuple(elements[i] for i in row) for row in np.argwhere(sl))
    return out
