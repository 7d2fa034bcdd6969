"""Fixed corpora used by the tests, the acceptance run and the CLI demos."""

from __future__ import annotations

import itertools
import random
from typing import Iterator

from .logic.parser import parse_formula
from .logic.syntax import Formula, PartitionedFormula
from .structures import Graph
from .width import Intro, Join, KExpression, Relabel, Union

# Tree formulas over the alphabet {a, b}: (text, free variables).  Together
# they use every atom kind, both quantifier sorts and mod-2 / mod-3 counting.
TREE_FORMULAS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("(label_a x)", ("x",)),
    ("(left x y)", ("x", "y")),
    ("(right x y)", ("x", "y")),
    ("(= x y)", ("x", "y")),
    ("(in x X)", ("x", "X")),
    ("(mod X 1 3)", ("X",)),
    ("(exists x (and (label_a x) (not (exists y (or (left y x) (right y x))))))", ()),
    ("(forall x (implies (label_a x) (exists y (or (left x y) (right x y)))))", ()),
    ("(existsS X (and (in x X) (forall y (implies (in y X) (label_b y)))))", ("x",)),
    ("(forallS X (implies (and (in x X) (forall u (forall v (implies (and (in u X) "
     "(or (left u v) (right u v))) (in v X))))) (in y X)))", ("x", "y")),
    ("(existsS X (and (forall y (and (implies (in y X) (label_a y)) (implies (label_a y) (in y X)))) "
     "(mod X 0 2)))", ()),
    ("(existsS X (and (mod X 2 3) (forall y (implies (in y X) (label_a y)))))", ()),
    ("(reach x y a b (or (left a b) (right a b)))", ("x", "y")),
    ("(exists z (and (left z x) (right z y)))", ("x", "y")),
)


def tree_formulas() -> list[tuple[Formula, tuple[str, ...]]]:
    return [(parse_formula(t), fv) for t, fv in TREE_FORMULAS]


# Partitioned tree formulas for the bound experiments: (text, x, y).
BOUND_FORMULAS: tuple[tuple[str, tuple, tuple], ...] = (
    ("(left y x)", ("x",), ("y",)),
    ("(reach y x a b (or (left a b) (right a b)))", ("x",), ("y",)),
    ("(and (label_a x) (reach y x a b (or (left a b) (right a b))))", ("x",), ("y",)),
    ("(exists z (and (reach z x a b (or (left a b) (right a b))) "
     "(reach z y a b (or (left a b) (right a b))) (label_b z)))", ("x",), ("y",)),
    ("(or (= x1 y) (= x2 y))", ("x1", "x2"), ("y",)),
    ("(and (reach y1 x a b (or (left a b) (right a b))) "
     "(not (reach y2 x a b (or (left a b) (right a b)))))", ("x",), ("y1", "y2")),
    ("(exists z (and (left z x1) (right z x2)))", ("x1", "x2"), ()),
)


def bound_formulas() -> list[PartitionedFormula]:
    return [PartitionedFormula(parse_formula(t), x, y) for t, x, y in BOUND_FORMULAS]


# Graph formulas over the adjacency vocabulary: (text, x, y).
GRAPH_FORMULAS: tuple[tuple[str, tuple, tuple], ...] = (
    ("(E x y)", ("x",), ("y",)),
    ("(= x y)", ("x",), ("y",)),
    ("(or (= x y) (E x y))", ("x",), ("y",)),
    ("(exists z (and (E x z) (E z y)))", ("x",), ("y",)),
    # x lies in some dominating set that avoids y
    ("(existsS D (and (in x D) (not (in y D)) (forall u (or (in u D) (exists v (and (in v D) (E u v)))))))",
     ("x",), ("y",)),
)


def graph_formulas() -> list[PartitionedFormula]:
    return [PartitionedFormula(parse_formula(t), x, y) for t, x, y in GRAPH_FORMULAS]


# Formulas over the incidence vocabulary (inc, vtx): (text, x, y).
INCIDENCE_FORMULAS: tuple[tuple[str, tuple, tuple], ...] = (
    ("(exists e (and (inc e x) (inc e y) (not (= x y))))", ("x",), ("y",)),
    ("(= x y)", ("x",), ("y",)),
    ("(exists e (and (inc e x) (not (exists f (and (inc f x) (not (= e f)))))))", ("x",), ()),
    # x and y are matched by some matching (an edge set, no shared endpoints)
    ("(existsS M (and (forall m (implies (in m M) (not (vtx m)))) "
     "(forall e (forall f (forall u (implies (and (in e M) (in f M) (inc e u) (inc f u)) (= e f))))) "
     "(exists e (and (in e M) (inc e x) (inc e y) (not (= x y))))))", ("x",), ("y",)),
    ("(existsS S (and (in x S) (in y S) (forall u (forall v (implies (and (in u S) (vtx v) "
     "(exists e (and (inc e u) (inc e v)))) (in v S))))))", ("x",), ("y",)),
)


def incidence_formulas() -> list[PartitionedFormula]:
    return [PartitionedFormula(parse_formula(t), x, y) for t, x, y in INCIDENCE_FORMULAS]


# ---------------------------------------------------------------------------
# k-expressions and graphs
# ---------------------------------------------------------------------------

K3_TEXT = "(join 1 2 (union (relabel 2 1 (join 1 2 (union (intro a 1) (intro b 2)))) (intro c 2)))"
K2_TEXT = "(join 1 2 (union (intro a 1) (intro b 2)))"


def random_kexpression(leaves: int, k: int, rng: random.Random, prefix: str = "v") -> KExpression:
    """Random k-expression with ``leaves`` vertices named ``prefix0, prefix1, ...``."""
    names = [f"{prefix}{i}" for i in range(leaves)]

    def ops(t):
        for _ in range(rng.randint(0, 2)):
            if k < 2:
                break
            i, j = rng.sample(range(1, k + 1), 2)
            t = Join(i, j, t) if rng.random() < 0.6 else Relabel(i, j, t)
        return t

    def build(vs):
        if len(vs) == 1:
            return ops(Intro(vs[0], rng.randint(1, k)))
        cut = rng.randint(1, len(vs) - 1)
        return ops(Union(build(vs[:cut]), build(vs[cut:])))

    return KExpression(build(names), k)


def all_graphs(max_vertices: int) -> Iterator[Graph]:
    """Every labelled graph on vertices ``0..n-1`` for ``n <= max_vertices``."""
    for n in range(1, max_vertices + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            yield Graph.from_edges(range(n), [p for i, p in enumerate(pairs) if (mask >> i) & 1])


def random_forest(n: int, rng: random.Random, p_edge: float = 0.8) -> Graph:
    edges = [(rng.randrange(v), v) for v in range(1, n) if rng.random() < p_edge]
    return Graph.from_edges(range(n), edges)
