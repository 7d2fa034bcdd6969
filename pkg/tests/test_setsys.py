import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msovc.errors import BudgetExceeded, MsovcError
from msovc.logic.parser import parse_formula
from msovc.logic.semantics import define_set_system
from msovc.logic.syntax import PartitionedFormula
from msovc.setsys import (TupleSetSystem, density_to_dim_bound, fit_density, growth_csv, growth_function,
                          sauer_shelah_bound)
from msovc.structures import Graph


def singletons(n):
    return TupleSetSystem.from_sets(range(1, n + 1), [{i} for i in range(1, n + 1)])


def powerset(n):
    U = list(range(1, n + 1))
    return TupleSetSystem.from_sets(U, [c for r in range(n + 1) for c in itertools.combinations(U, r)])


def alpha_system(n):
    pf = PartitionedFormula(parse_formula("(or (= x y1) (= x y2))"), ("x",), ("y1", "y2"))
    return define_set_system(Graph.from_edges(range(n), []).structure(), pf)


def closed_neighbourhoods(g):
    return TupleSetSystem.from_sets(g.vertices, [{v} | set(g.neighbors(v)) for v in g.vertices])


def brute_vc(F):
    best = -1 if not F.family else 0
    for r in range(1, len(F.universe) + 1):
        if any(F.is_shattered(X) for X in itertools.combinations(F.universe, r)):
            best = r
    return best


def test_restrict_examples():
    F = singletons(3)
    assert F.restrict(F.universe) == F
    empty = F.restrict(())
    assert len(empty) == 1 and empty.plain_members() == [[]]
    assert sorted(map(sorted, F.restrict((1, 2)).plain_members())) == [[], [1], [2]]


def test_is_shattered_examples():
    assert singletons(3).is_shattered(())
    assert not singletons(3).is_shattered((1, 2))
    F = alpha_system(4)
    assert all(F.is_shattered(X) for X in itertools.combinations(F.universe, 2))


def test_vc_dimension_examples():
    assert powerset(3).vc_dimension() == 3
    for n in range(2, 6):
        assert singletons(n).vc_dimension() == 1
    p4 = Graph.from_edges(range(1, 5), [(1, 2), (2, 3), (3, 4)])
    F = closed_neighbourhoods(p4)
    assert F.vc_dimension() == brute_vc(F) == 1
    assert TupleSetSystem.from_sets([1, 2], []).vc_dimension() == -1
    d, wit = powerset(2).vc_dimension(witness=True)
    assert d == 2 and set(wit) == {1, 2}


def test_growth_examples():
    assert growth_function(singletons(5), 0).value == 1
    assert growth_function(singletons(5), 3).value == 4
    c5 = Graph.from_edges(range(5), [(i, (i + 1) % 5) for i in range(5)])
    F = closed_neighbourhoods(c5)
    want = max(len({frozenset(m) & set(X) for m in F.plain_members()})
               for X in itertools.combinations(range(5), 3))
    assert growth_function(F, 3).value == want
    sampled = growth_function(F, 3, mode="sampled", samples=50, seed=1)
    assert not sampled.exact and sampled.value <= want


def test_growth_cap():
    with pytest.raises(BudgetExceeded):
        growth_function(singletons(30), 15, cap=1000)
    with pytest.raises(MsovcError):
        growth_function(singletons(3), 4)


def test_sauer_shelah_values():
    assert all(sauer_shelah_bound(n, 0) == 1 for n in range(8))
    assert sauer_shelah_bound(4, 2) == 11
    assert sauer_shelah_bound(3, 5) == 8
    assert sauer_shelah_bound(3, -1) == 0


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=6), st.sets(st.integers(min_value=0, max_value=63), max_size=20))
def test_sauer_shelah_property(n, masks):
    U = list(range(n))
    F = TupleSetSystem.from_sets(U, [{i for i in U if (m >> i) & 1} for m in masks])
    d = F.vc_dimension()
    assert d == brute_vc(F)
    for k in range(n + 1):
        pi = growth_function(F, k).value
        assert pi <= sauer_shelah_bound(k, d) and pi <= 2 ** k
        if pi == 2 ** k and F.family:
            assert k <= d


def test_fit_density_examples():
    lin = fit_density([(n, n + 1) for n in range(2, 10)])
    assert 0.8 <= lin.exponent <= 1.2
    ex = fit_density([(n, 2 ** n) for n in range(2, 7)])
    assert ex.exponent > 2 and ex.poor_fit
    pts = [(n, growth_function(alpha_system(n), n).value) for n in range(4, 10)]
    assert [p for _, p in pts] == [n + math.comb(n, 2) for n in range(4, 10)]
    fit = fit_density(pts)
    assert 1.6 <= fit.exponent <= 2.4 and not fit.poor_fit


def test_fit_density_errors():
    with pytest.raises(MsovcError):
        fit_density([(2, 3), (3, 4)])
    with pytest.raises(MsovcError):
        fit_density([(2, 3), (2, 4), (2, 5)])


def test_density_to_dim_bound():
    assert density_to_dim_bound(1, 2) == pytest.approx(8.0)
    with pytest.raises(MsovcError):
        density_to_dim_bound(0, 1)


def test_tuple_systems():
    U = [1, 2, 3]
    F = TupleSetSystem(U, [{(1, 2), (2, 3)}, {(1, 1)}], k=2)
    assert len(F) == 2 and F.k == 2
    with pytest.raises(MsovcError):
        TupleSetSystem(U, [{(1,)}], k=2)
    with pytest.raises(MsovcError):
        TupleSetSystem(U, [{(4, 1)}], k=2)
    assert F.trace_count((1, 2)) == 2
    assert F.trace_count((3,)) == 1


def test_growth_csv():
    text = growth_csv([growth_function(singletons(3), n) for n in range(3)])
    assert text.splitlines() == ["n,pi,mode", "0,1,exact", "1,2,exact", "2,3,exact"]
