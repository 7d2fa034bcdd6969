import random

import pytest

from msovc.corpus import K2_TEXT, K3_TEXT, random_forest, random_kexpression
from msovc.errors import KExpressionError
from msovc.logic.parser import parse_formula
from msovc.logic.semantics import define_set_system
from msovc.logic.syntax import PartitionedFormula
from msovc.setsys import TupleSetSystem
from msovc.structures import Graph, incidence_graph
from msovc.width import (Intro, KExpression, bind_vertices, check_certificate, check_on_cliquewidth,
                         check_on_treewidth, forest_certificate, forest_kexpression, interpret_tree,
                         kexpr_alphabet, parse_kexpression, to_parse_tree)


def pf(text, x=("x",), y=("y",)):
    return PartitionedFormula(parse_formula(text), x, y)


def brute(e, phi):
    return define_set_system(e.eval().structure(), phi, elements=e.vertices(), reach="direct")


def test_eval_examples():
    g = KExpression(Intro("v", 1), 1).eval()
    assert g.vertices == ("v",) and not g.edges
    assert parse_kexpression(K2_TEXT).eval().edges == {frozenset("ab")}
    k3 = parse_kexpression(K3_TEXT)
    assert k3.k == 2 and k3.eval().edges == {frozenset("ab"), frozenset("bc"), frozenset("ac")}


def test_relabel_and_join_semantics():
    e = parse_kexpression("(join 1 2 (union (relabel 1 2 (intro a 1)) (union (intro b 1) (intro c 3))))")
    assert e.eval().edges == {frozenset("ab")}


def test_parse_tree_sizes():
    assert len(to_parse_tree(KExpression(Intro("v", 1), 1)).domain) == 1
    assert len(to_parse_tree(parse_kexpression(K2_TEXT)).domain) == 4
    # three leaves and five operations
    assert len(to_parse_tree(parse_kexpression(K3_TEXT)).domain) == 8


def test_parse_tree_alphabet():
    t = to_parse_tree(parse_kexpression(K3_TEXT))
    assert set(t.alphabet) == set(kexpr_alphabet(2))
    assert set(t.label.values()) <= set(t.alphabet)


@pytest.mark.parametrize("text", ["(intro a 0)", "(join 1 1 (intro a 1))", "(union (intro a 1) (intro a 2))",
                                  "(intro a x)", "(frob (intro a 1))", "(union (intro a 1)", "(join 1 2)"])
def test_malformed_expressions(text):
    with pytest.raises(KExpressionError):
        parse_kexpression(text)
    with pytest.raises(KExpressionError):
        parse_kexpression("(join 1 3 (intro a 1))", k=2)


def test_text_round_trip(rng):
    for _ in range(20):
        e = random_kexpression(rng.randint(1, 8), rng.randint(1, 3), rng)
        again = parse_kexpression(e.to_text(), e.k)
        assert again.eval().edges == e.eval().edges


def test_interpretation_examples():
    for text in (K2_TEXT, K3_TEXT, "(union (intro a 1) (union (intro b 2) (intro c 1)))"):
        e = parse_kexpression(text)
        assert interpret_tree(to_parse_tree(e), e.k).edges == e.eval().edges


def test_interpretation_random(rng):
    for _ in range(15):
        e = random_kexpression(rng.randint(1, 8), rng.randint(1, 2), rng)
        assert interpret_tree(to_parse_tree(e), e.k).edges == e.eval().edges


def test_cliquewidth_set_systems():
    k3 = parse_kexpression(K3_TEXT)
    F = check_on_cliquewidth(pf("(E x y)"), k3)
    assert F == TupleSetSystem.from_sets("abc", [{"b", "c"}, {"a", "c"}, {"a", "b"}])
    e = parse_kexpression("(join 1 2 (union (union (intro a 1) (intro b 2)) (union (intro c 1) (intro d 1))))")
    assert check_on_cliquewidth(pf("(= x y)"), e) == TupleSetSystem.from_sets("abcd", [{v} for v in "abcd"])


def test_dominating_on_five_vertices():
    rng = random.Random(5)
    phi = pf("(existsS D (and (in x D) (not (in y D)) "
             "(forall u (or (in u D) (exists v (and (in v D) (E u v)))))))")
    for _ in range(2):
        e = random_kexpression(5, 2, rng)
        assert check_on_cliquewidth(phi, e) == brute(e, phi)


def test_bind_vertices():
    g = Graph.from_edges([0, 1, 2], [(0, 1), (1, 2)])
    cert = parse_kexpression(forest_certificate(g).to_text())
    with pytest.raises(KExpressionError):
        check_certificate(g, cert)
    check_certificate(g, bind_vertices(cert, incidence_graph(g).vertices))


def test_forest_certificates(rng):
    for _ in range(15):
        g = random_forest(rng.randint(1, 7), rng)
        e = forest_kexpression(g)
        assert e.k == 3 and e.eval().edges == g.edges
        check_certificate(g, forest_certificate(g))
    with pytest.raises(KExpressionError):
        forest_kexpression(Graph.from_edges([1, 2, 3], [(1, 2), (2, 3), (1, 3)]))
    with pytest.raises(KExpressionError):
        check_certificate(Graph.from_edges([1, 2], [(1, 2)]), forest_certificate(Graph.from_edges([1, 2], [])))


def test_treewidth_examples():
    p3 = Graph.from_edges([1, 2, 3], [(1, 2), (2, 3)])
    adj = pf("(exists e (and (inc e x) (inc e y) (not (= x y))))")
    F = check_on_treewidth(adj, p3, forest_certificate(p3))
    assert F == TupleSetSystem.from_sets([1, 2, 3], [{2}, {1, 3}])
    k2 = Graph.from_edges([1, 2], [(1, 2)])
    matched = pf("(existsS M (and (forall m (implies (in m M) (not (vtx m)))) "
                 "(forall e (forall f (forall u (implies (and (in e M) (in f M) (inc e u) (inc f u)) (= e f))))) "
                 "(exists e (and (in e M) (inc e x) (inc e y) (not (= x y))))))")
    want = define_set_system(incidence_graph(k2).structure(), matched, reach="direct")
    assert check_on_treewidth(matched, k2, forest_certificate(k2)) == want
    empty = Graph.from_edges([1, 2, 3], [])
    F = check_on_treewidth(adj, empty, forest_certificate(empty))
    assert F.plain_members() == [[]]
