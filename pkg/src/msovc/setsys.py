"""Set systems of k-tuples: restriction, shattering, VC dimension, growth.

A k-tuple system is restricted to ``X`` by intersecting every member with
``X^k``; ``X`` is shattered when every subset of ``X^k`` appears as a trace.
For ``k = 1`` these are the usual notions.

Members are stored as sets of tuples.  Internally each member is also kept as
a Python integer bitmask over the positions of ``U^k`` so traces are cheap.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded, MsovcError

DEFAULT_SUBSET_CAP = 2_000_000


class TupleSetSystem:
    """Universe, tuple arity ``k`` and a deduplicated family of sets of k-tuples."""

    def __init__(self, universe: Sequence, family: Iterable[Iterable[tuple]], k: int = 1):
        if k < 1:
            raise MsovcError("tuple arity must be at least 1")
        self.universe = tuple(universe)
        self.k = k
        self.index = {e: i for i, e in enumerate(self.universe)}
        if len(self.index) != len(self.universe):
            raise MsovcError("universe contains duplicates")
        fam = set()
        for member in family:
            m = frozenset(tuple(t) for t in member)
            for t in m:
                if len(t) != k or any(e not in self.index for e in t):
                    raise MsovcError(f"tuple {t!r} is not a {k}-tuple over the universe")
            fam.add(m)
        self.family = frozenset(fam)
        self._masks = None

    @classmethod
    def from_sets(cls, universe: Sequence, sets: Iterable[Iterable]) -> "TupleSetSystem":
        """Ordinary set system: members are sets of elements."""
        return cls(universe, ([(e,) for e in s] for s in sets), 1)

    def __eq__(self, other):
        if not isinstance(other, TupleSetSystem):
            return NotImplemented
        return (set(self.universe) == set(other.universe) and self.k == other.k
                and self.family == other.family)

    def __hash__(self):
        return hash((frozenset(self.universe), self.k, self.family))

    def __len__(self):
        return len(self.family)

    def __repr__(self):
        return f"<TupleSetSystem |U|={len(self.universe)} k={self.k} |S|={len(self.family)}>"

    def _tuple_pos(self, t) -> int:
        n = len(self.universe)
        pos = 0
        for e in t:
            pos = pos * n + self.index[e]
        return pos

    @property
    def masks(self) -> list[int]:
        if self._masks is None:
            out = []
            for m in self.family:
                v = 0
                for t in m:
                    v |= 1 << self._tuple_pos(t)
                out.append(v)
            self._masks = out
        return self._masks

    def _power_mask(self, X: Sequence) -> int:
        v = 0
        for t in itertools.product(X, repeat=self.k):
            v |= 1 << self._tuple_pos(t)
        return v

    def members(self) -> list[list[tuple]]:
        """Members in canonical order (by size, then tuple positions)."""
        key = self._tuple_pos
        rows = [sorted(m, key=key) for m in self.family]
        rows.sort(key=lambda r: (len(r), [key(t) for t in r]))
        return rows

    def plain_members(self) -> list[list]:
        if self.k != 1:
            raise MsovcError("plain_members only applies to k = 1")
        return [[t[0] for t in m] for m in self.members()]

    def _check_subset(self, X) -> list:
        X = list(dict.fromkeys(X))
        bad = [e for e in X if e not in self.index]
        if bad:
            raise MsovcError(f"elements outside the universe: {bad[:5]}")
        return sorted(X, key=self.index.__getitem__)

    def trace_count(self, X: Sequence) -> int:
        """``|S ∩ X|``, the number of distinct traces on ``X^k``."""
        X = self._check_subset(X)
        pm = self._power_mask(X)
        return len({m & pm for m in self.masks})

    def restrict(self, X: Sequence) -> "TupleSetSystem":
        X = self._check_subset(X)
        keep = set(X)
        fam = {frozenset(t for t in m if all(e in keep for e in t)) for m in self.family}
        return TupleSetSystem(X, fam, self.k)

    def is_shattered(self, X: Sequence, cap: int = 1 << 20) -> bool:
        X = self._check_subset(X)
        cells = len(X) ** self.k
        if cells > cap:
            raise BudgetExceeded(f"|X|^k = {cells} exceeds the cap {cap}")
        if cells >= 63 or (1 << cells) > len(self.family):
            return cells == 0 and bool(self.family)
        return self.trace_count(X) == 1 << cells

    def shattered_sets(self, size: int) -> list[tuple]:
        """All shattered subsets of the given size (index order)."""
        return [c for c in itertools.combinations(self.universe, size) if self.is_shattered(c)]

    def vc_dimension(self, witness: bool = False):
        """Largest shattered cardinality; -1 for the empty family.

        Level-wise search: a candidate of size m+1 is tested only when all of
        its m-subsets are shattered.
        """
        if not self.family:
            return (-1, None) if witness else -1
        level = [()]
        best = ()
        size = 0
        while level:
            size += 1
            if (1 << (size ** self.k)) > len(self.family):
                break
            prev = set(level)
            cands = set()
            for a, b in itertools.combinations(level, 2):
                if a[:-1] == b[:-1]:
                    c = tuple(sorted(set(a) | set(b), key=self.index.__getitem__))
                    if all(c[:i] + c[i + 1:] in prev for i in range(len(c))):
                        cands.add(c)
            if size == 1:
                cands = {(e,) for e in self.universe}
            level = sorted((c for c in cands if self.is_shattered(c)),
                           key=lambda c: [self.index[e] for e in c])
            if level:
                best = level[0]
        return (len(best), best) if witness else len(best)

    def growth(self, n: int, mode: str = "exact", samples: int = 1000, seed: int = 0,
               cap: int = DEFAULT_SUBSET_CAP) -> "GrowthValue":
        return growth_function(self, n, mode, samples, seed, cap)


@dataclass(frozen=True)
class GrowthValue:
    n: int
    value: int
    mode: str
    witness: tuple

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def __int__(self):
        return self.value


def growth_function(F: TupleSetSystem, n: int, mode: str = "exact", samples: int = 1000,
                    seed: int = 0, cap: int = DEFAULT_SUBSET_CAP) -> GrowthValue:
    """Max of ``|S ∩ X|`` over n-subsets.  ``sampled`` mode is a lower bound."""
    N = len(F.universe)
    if n < 0 or n > N:
        raise MsovcError(f"n = {n} outside 0..{N}")
    ceiling = min(len(F.family), 1 << min(n ** F.k, 62)) if F.family else 0
    if mode == "exact":
        total = math.comb(N, n)
        if total > cap:
            raise BudgetExceeded(f"C({N},{n}) = {total} subsets exceeds the cap {cap}")
        subsets: Iterable = itertools.combinations(F.universe, n)
    elif mode == "sampled":
        rng = random.Random(seed)
        subsets = (tuple(sorted(rng.sample(F.universe, n), key=F.index.__getitem__))
                   for _ in range(samples))
    else:
        raise MsovcError(f"unknown growth mode {mode!r}")
    best, witness = -1, ()
    masks = F.masks
    for X in subsets:
        pm = F._power_mask(X)
        c = len({m & pm for m in masks})
        if c > best:
            best, witness = c, tuple(X)
            if best >= ceiling:
                break
    return GrowthValue(n, max(best, 0), mode, witness)


def sauer_shelah_bound(n: int, d: int) -> int:
    """Sum of C(n, i) for i = 0..d."""
    if d < 0:
        return 0
    return sum(math.comb(n, i) for i in range(0, min(d, n) + 1))


def density_to_dim_bound(c: float, d: float) -> float:
    """``4 d log2(c d)``: VC dimension bound from a growth bound ``c n^d``."""
    if c <= 0 or d <= 0:
        raise MsovcError("c and d must be positive")
    return 4 * d * math.log2(c * d)


@dataclass(frozen=True)
class DensityFit:
    exponent: float
    intercept: float
    residual: float
    exp_residual: float
    points: tuple

    @property
    def poor_fit(self) -> bool:
        """An exponential model explains the points better than a power law."""
        return self.exp_residual < self.residual


def fit_density(points: Iterable[tuple[float, float]]) -> DensityFit:
    """Least-squares slope of log(pi) against log(n)."""
    pts = [(float(n), float(p)) for n, p in points if p > 0]
    if any(n < 1 for n, _ in pts):
        raise MsovcError("fit_density needs n >= 1")
    if len(pts) < 3:
        raise MsovcError("fit_density needs at least 3 points with positive values")
    ns = np.array([n for n, _ in pts])
    ps = np.log(np.array([p for _, p in pts]))
    if np.all(ns == ns[0]):
        raise MsovcError("all sample sizes are equal")

    def lsq(xs):
        A = np.vstack([xs, np.ones_like(xs)]).T
        coef, *_ = np.linalg.lstsq(A, ps, rcond=None)
        res = float(np.sqrt(np.mean((A @ coef - ps) ** 2)))
        return coef, res

    (slope, icpt), res = lsq(np.log(ns))
    _, eres = lsq(ns)
    return DensityFit(float(slope), float(icpt), res, eres, tuple(pts))


def growth_csv(rows: Iterable[GrowthValue]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "pi", "mode"])
    for r in rows:
        w.writerow([r.n, r.value, r.mode])
    return out.getvalue()
