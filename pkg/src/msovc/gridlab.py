"""Shattering on grids: a binary counter written into the grid.

Row ``j`` (the cells ``(i, j)``) encodes ``j - 1`` in binary, bit ``i - 1``
sitting at ``(i, j)``.  The first row carries the objects, the first column
the parameters, and ``theta(x | y)`` reads the counter at the cell where
``x``'s column meets ``y``'s row.  The first ``floor(log2 n)`` objects are then
shattered.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from typing import Mapping

from .errors import BudgetExceeded, ModelError
from .logic.semantics import Evaluator, member_sets
from .logic.syntax import (TRUE, And, Eq, Exists, ExistsS, Forall, Formula, Implies, In, Not,
                           PartitionedFormula, Reach, Rel, conj, iff)
from .structures import (GRID_SIGNATURE, Graph, Signature, Structure, find_isomorphism,
                         incidence_graph, make_grid, make_grid_graph)
from .transduce import (GRID_COLORS, Transduction, apply, backward_translate,
                        canonical_coloring, compose, grid_recovery, minor_transduction,
                        minor_valuation)

BRUTE_MAX_N = 4


def _before(d: str, c: str, rel: str) -> Formula:
    """``d`` precedes ``c`` strictly along ``rel``-paths."""
    return And(Reach(d, c, "a", "b", Rel(rel, ("a", "b"))), Not(Eq(d, c)))


def counter_formula(X: str = "X") -> Formula:
    """``X`` is the binary-counter labelling (unique on each grid)."""
    first_row_zero = Forall("c", Implies(Not(Exists("d", Rel("V", ("d", "c")))), Not(In("c", X))))
    carry = Forall("d", Implies(_before("d", "c", "H"), In("d", X)))
    # next bit = bit xor carry
    step = Forall("c", Forall("e", Implies(Rel("V", ("c", "e")),
                                           iff(In("e", X), Not(iff(In("c", X), carry))))))
    return And(first_row_zero, step)


def shattering_formula() -> PartitionedFormula:
    first_row = Not(Exists("d", Rel("V", ("d", "x"))))
    first_col = Not(Exists("d", Rel("H", ("d", "y"))))
    meet = Exists("z", conj(Reach("x", "z", "a", "b", Rel("V", ("a", "b"))),
                            Reach("y", "z", "a", "b", Rel("H", ("a", "b"))), In("z", "X")))
    return PartitionedFormula(ExistsS("X", conj(counter_formula("X"), first_row, first_col, meet)),
                              ("x",), ("y",))


def counter_set(n: int) -> frozenset:
    return frozenset((i, j) for i in range(1, n + 1) for j in range(1, n + 1) if ((j - 1) >> (i - 1)) & 1)


def log2_floor(n: int) -> int:
    return n.bit_length() - 1


def candidate(n: int) -> tuple:
    return tuple((i, 1) for i in range(1, log2_floor(n) + 1))


@dataclass(frozen=True)
class ShatterReport:
    """``witnesses`` maps each subset of ``shattered`` to the first parameter
    realising it (or ``None``)."""

    n: int
    mode: str
    shattered: tuple
    witnesses: Mapping = field(compare=True)
    verdict: bool
    maximal: bool

    @property
    def size(self) -> int:
        return len(self.shattered)

    def same_outcome(self, other: "ShatterReport") -> bool:
        return (self.shattered, dict(self.witnesses), self.verdict, self.maximal) == \
            (other.shattered, dict(other.witnesses), other.verdict, other.maximal)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["subset", "witness"])
        for sub, wit in self.witnesses.items():
            w.writerow([";".join(_render(e) for e in sub), "" if wit is None else _render(wit)])
        return buf.getvalue()

    def summary(self) -> dict:
        return {"n": self.n, "mode": self.mode, "size": self.size, "verdict": self.verdict,
                "maximal": self.maximal, "shattered": [_render(e) for e in self.shattered]}


def _render(e) -> str:
    if isinstance(e, tuple) and len(e) == 1:
        e = e[0]
    if isinstance(e, tuple):
        return ",".join(str(p) for p in e)
    return str(e)


def _report(n: int, mode: str, cand: tuple, members: Mapping, extra=None) -> ShatterReport:
    """Witness table for ``cand`` from per-parameter member sets."""
    cset = set(cand)
    traces = {}
    for par, objs in members.items():
        tr = frozenset(o[0] for o in objs if o[0] in cset)
        traces.setdefault(tr, par[0])
    witnesses = {}
    for r in range(len(cand) + 1):
        for sub in itertools.combinations(cand, r):
            witnesses[sub] = traces.get(frozenset(sub))
    verdict = all(w is not None for w in witnesses.values())
    maximal = True
    if extra is not None:
        bigger = set(cand) | {extra}
        seen = {frozenset(o[0] for o in objs if o[0] in bigger) for objs in members.values()}
        maximal = len(seen) < 2 ** len(bigger)
    return ShatterReport(n, mode, tuple(cand), witnesses, verdict, maximal)


def direct_members(n: int) -> dict:
    """Per-parameter member sets of ``theta`` on ``make_grid(n)``, using the explicit counter."""
    X = counter_set(n)
    cells = make_grid(n).domain
    out = {}
    for y in cells:
        if y[0] != 1:
            out[(y,)] = frozenset()
            continue
        out[(y,)] = frozenset(((i, 1),) for i in range(1, n + 1) if (i, y[1]) in X)
    return out


def verify_counter(n: int) -> bool:
    """``counter_set(n)`` satisfies the counter formula (one model check)."""
    return Evaluator(make_grid(n), reach="direct").holds(counter_formula("X"), {"X": counter_set(n)})


def verify_shattering(n: int, mode: str = "direct") -> ShatterReport:
    if mode not in ("brute", "direct"):
        raise ValueError(f"unknown mode {mode!r}")
    extra = (log2_floor(n) + 1, 1) if log2_floor(n) + 1 <= n else None
    if mode == "brute":
        if n > BRUTE_MAX_N:
            raise BudgetExceeded(f"brute mode enumerates 2^{n * n} sets; limited to n <= {BRUTE_MAX_N}")
        members = member_sets(make_grid(n), shattering_formula(), reach="direct")
    else:
        members = direct_members(n)
    return _report(n, mode, candidate(n), members, extra)


def counter_models(n: int) -> list[frozenset]:
    """Every ``X`` with ``psi(X)`` on ``make_grid(n)`` (exhaustive, small n only)."""
    if n > BRUTE_MAX_N:
        raise BudgetExceeded(f"enumerating 2^{n * n} sets; limited to n <= {BRUTE_MAX_N}")
    g = make_grid(n)
    ev = Evaluator(g, reach="direct")
    psi = counter_formula("X")
    out = []
    for mask in range(1 << len(g.domain)):
        X = frozenset(c for k, c in enumerate(g.domain) if (mask >> k) & 1)
        if ev.holds(psi, {"X": X}):
            out.append(X)
    return out


# ---------------------------------------------------------------------------
# pulling shattering back through transductions
# ---------------------------------------------------------------------------


def pullback_demo(I: Transduction, instance: Structure, mode: str = "direct",
                  n: int | None = None) -> ShatterReport:
    """Shattering by the pulled-back formula on ``instance``.

    The image of ``instance`` must be a grid.  ``brute`` model-checks the
    pulled-back formula on the instance itself; ``direct`` goes through the
    image (an element satisfies the pulled-back formula iff it is in the image
    and the image satisfies the original).
    """
    image = apply(I, instance)
    if n is None:
        n = int(round(len(image.domain) ** 0.5))
    grid = make_grid(n)
    if image.signature.as_dict() != GRID_SIGNATURE.as_dict():
        raise ModelError("image is not over the grid signature")
    iso = find_isomorphism(grid, image)
    if iso is None:
        raise ModelError(f"image is not an {n} x {n} grid")
    theta = shattering_formula()
    cand = tuple(iso[c] for c in candidate(n))
    nxt = (log2_floor(n) + 1, 1)
    extra = iso[nxt] if nxt in iso else None
    if mode == "brute":
        pulled = PartitionedFormula(backward_translate(I, theta.formula), theta.x, theta.y)
        members = member_sets(instance, pulled, reach="direct")
    elif mode == "direct":
        on_grid = direct_members(n)
        members = {}
        for e in instance.domain:
            members[(e,)] = frozenset()
        for (y,), objs in on_grid.items():
            members[(iso[y],)] = frozenset((iso[o],) for (o,) in objs)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    # witnesses in the instance's domain order
    ordered = {(e,): members[(e,)] for e in instance.domain if (e,) in members}
    return _report(n, mode, cand, ordered, extra)


def identity_grid_transduction() -> Transduction:
    theta = {"H": (("u", "v"), Rel("H", ("u", "v"))), "V": (("u", "v"), Rel("V", ("u", "v")))}
    return Transduction(GRID_SIGNATURE, GRID_SIGNATURE, ("x", TRUE), theta)


def colored_grid_graph(n: int) -> Structure:
    """``make_grid_graph(n)`` with the canonical colouring baked in as labels."""
    return make_grid_graph(n).structure().with_unary(canonical_coloring(n))


def subdivided_grid_host(n: int) -> tuple[Graph, dict]:
    """The n x n grid graph with every horizontal edge subdivided, and the
    minor model sending each cell to itself plus the midpoint to its right."""
    g = make_grid_graph(n)
    verts = list(g.vertices)
    edges = []
    model = {c: {c} for c in g.vertices}
    for (u, v) in g.edge_list():
        if u[1] == v[1]:
            m = (u[0], u[1], "h")
            verts.append(m)
            edges += [(u, m), (m, v)]
            model[u].add(m)
        else:
            edges.append((u, v))
    return Graph.from_edges(verts, edges), model


def minor_grid_demo(n: int = 3, mode: str = "direct") -> ShatterReport:
    """Shattering in a host that has the n x n grid graph as a minor.

    The host's incidence encoding carries the minor guess and the grid
    colouring (on branch-set representatives) as labels; the transduction
    contracts to the grid graph and then orients it into the grid.
    """
    host, model = subdivided_grid_host(n)
    inc = incidence_graph(host)
    val, rep_to_cell = minor_valuation(inc, make_grid_graph(n), model)
    coloring = canonical_coloring(n)
    cell_to_rep = {c: r for r, c in rep_to_cell.items()}
    labels = dict(val)
    for name, cells in coloring.items():
        labels[name] = {cell_to_rep[c] for c in cells}
    instance = inc.structure().with_unary(labels)
    minor = minor_transduction().det
    # carry the colours through the contraction
    theta = dict(minor.theta)
    for c in GRID_COLORS:
        theta[c] = (("x",), Rel(c, ("x",)))
    insig = minor.input_signature.union(Signature.of({c: 1 for c in GRID_COLORS}, GRID_COLORS))
    outsig = Signature.of([("E", 2)] + [(c, 1) for c in GRID_COLORS], GRID_COLORS)
    first = Transduction(insig, outsig, minor.gamma, theta, "generic")
    both = compose(first, grid_recovery().det)
    return pullback_demo(both, instance, mode, n)
