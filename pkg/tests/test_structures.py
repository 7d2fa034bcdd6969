import pytest

from msovc.errors import StructureError
from msovc.structures import (GRID_SIGNATURE, Graph, Signature, Structure, Tree, build_structure, dumps_structure,
                              enumerate_trees, find_isomorphism, graph_from_structure, incidence_graph,
                              loads_structure, make_grid, make_grid_graph, tree_from_nested, tree_shapes)


def test_single_node_tree():
    t = Tree([0], {0: "a"})
    assert t.root == 0 and t.domain == (0,)
    assert not t.relations["left"] and not t.relations["right"]


def test_k2_adjacency():
    s = Structure(Signature.of({"E": 2}), [1, 2], {"E": [(1, 2), (2, 1)]}, "graph-adj")
    g = graph_from_structure(s)
    assert g.edges == {frozenset((1, 2))}


def test_grid_rejects_misplaced_h_tuple():
    with pytest.raises(StructureError):
        build_structure(GRID_SIGNATURE, make_grid(2).domain, {"H": [((1, 1), (1, 2))]}, "grid")
    assert build_structure(GRID_SIGNATURE, make_grid(2).domain, make_grid(2).relations, "grid") == make_grid(2)


def test_structure_validation():
    sig = Signature.of({"E": 2})
    with pytest.raises(StructureError):
        Structure(sig, [1, 1], {})
    with pytest.raises(StructureError):
        Structure(sig, [1], {"E": [(1, 2)]})
    with pytest.raises(StructureError):
        Structure(sig, [1], {"E": [(1,)]})
    with pytest.raises(StructureError):
        Structure(sig, [1], {"F": []})


def test_graph_structure_validation():
    with pytest.raises(StructureError):
        build_structure({"E": 2}, [1, 2], {"E": [(1, 2)]}, "graph-adj")  # not symmetric
    with pytest.raises(StructureError):
        build_structure({"inc": 2}, [1, 2], {}, "graph-inc")


def test_tree_validation():
    with pytest.raises(StructureError):
        Tree([0, 1], {0: "a", 1: "a"}, {0: 1}, {0: 1})  # two parents for 1
    with pytest.raises(StructureError):
        Tree([0, 1], {0: "a", 1: "a"})  # two roots
    with pytest.raises(StructureError):
        Tree([0], {0: "c"}, alphabet=["a", "b"])


def test_make_grid_small():
    g1 = make_grid(1)
    assert not g1.relations["H"] and not g1.relations["V"]
    g2 = make_grid(2)
    assert g2.relations["H"] == {((1, 1), (2, 1)), ((1, 2), (2, 2))}
    assert g2.relations["V"] == {((1, 1), (1, 2)), ((2, 1), (2, 2))}
    g3 = make_grid(3)
    assert len(g3.relations["H"]) == len(g3.relations["V"]) == 6


@pytest.mark.parametrize("n", range(1, 7))
def test_grid_relation_counts(n):
    g = make_grid(n)
    assert len(g.relations["H"]) == len(g.relations["V"]) == n * (n - 1)


def test_grid_graph():
    assert len(make_grid_graph(1).vertices) == 1 and not make_grid_graph(1).edges
    c4 = make_grid_graph(2)
    assert len(c4.edges) == 4 and all(len(c4.neighbors(v)) == 2 for v in c4.vertices)
    assert len(make_grid_graph(4).edges) == 24


def test_incidence_graphs():
    k2 = incidence_graph(Graph.from_edges([1, 2], [(1, 2)]))
    assert len(k2.structure().domain) == 3
    k3 = incidence_graph(Graph.from_edges([1, 2, 3], [(1, 2), (2, 3), (1, 3)]))
    s = k3.structure()
    assert len(s.domain) == 6
    edge_elems = [e for e in s.domain if (e,) not in s.relations["vtx"]]
    for e in edge_elems:
        assert sum(1 for t in s.relations["inc"] if t[0] == e) == 2
    p3 = incidence_graph(Graph.from_edges([1, 2, 3], [(1, 2), (2, 3)])).structure()
    assert len(p3.domain) == 5 and len(p3.relations["inc"]) == 4


def test_tree_enumeration_counts():
    # Catalan numbers times 2^n labellings
    cat = [1, 1, 2, 5, 14, 42]
    assert [len(tree_shapes(n)) for n in range(1, 6)] == cat[1:]
    assert sum(1 for _ in enumerate_trees(5, ["a", "b"])) == sum(cat[n] * 2 ** n for n in range(1, 6))


def test_round_trip_and_isomorphism():
    t = tree_from_nested(("a", ("b", None, "a"), "b"), ["a", "b"])
    assert loads_structure(dumps_structure(t)) == t
    g = make_grid(3)
    assert loads_structure(dumps_structure(g)) == g
    iso = find_isomorphism(make_grid(3), make_grid(3))
    assert iso is not None and all(iso[c] == c for c in g.domain)
    assert find_isomorphism(make_grid_graph(2).structure(),
                            Graph.from_edges(range(4), [(0, 1), (1, 2), (2, 3)]).structure()) is None
