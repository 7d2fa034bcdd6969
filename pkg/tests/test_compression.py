import itertools

import pytest

from msovc import automata as au
from msovc.compiler import DIAMOND, Compiler
from msovc.compression import (DeltaLabeler, EmulationAutomaton, anchor_map, compute_anchor_set, context_transform,
                               contract, corrupt_labeling, delta_labeling, sci, theorem_constant, verify_bound,
                               verify_emulation)
from msovc.errors import ScopeError
from msovc.logic.parser import parse_formula
from msovc.logic.semantics import Evaluator
from msovc.structures import Tree, random_tree, tree_from_nested

AB = ["a", "b"]
DEPTH2 = ("a", ("a", "a", "a"), ("a", "a", "a"))  # preorder: 0 / 1 4 / 2 3 5 6
CHAIN = ("a", ("a", ("a", "b", None), None), None)


@pytest.fixture(scope="module")
def comp():
    return Compiler(AB)


def test_anchor_set_examples():
    t = tree_from_nested(DEPTH2, AB)
    assert compute_anchor_set(t, {0}).B == {0}
    assert compute_anchor_set(t, {2, 6}).B == {0, 2, 6}
    c = tree_from_nested(CHAIN, AB)
    assert compute_anchor_set(c, {3}).B == {0, 3}
    with pytest.raises(ScopeError):
        compute_anchor_set(t, set())
    with pytest.raises(ScopeError):
        compute_anchor_set(t, {99})


def test_contract_examples():
    t = tree_from_nested(DEPTH2, AB)
    assert contract(compute_anchor_set(t, {0})).nodes == (0,)
    ct = contract(compute_anchor_set(t, {2, 6}))
    assert ct.left == {0: 2} and ct.right == {0: 6}
    c = tree_from_nested(CHAIN, AB)
    ct = contract(compute_anchor_set(c, {3}))
    assert ct.nodes == (0, 3) and ct.left == {0: 3} and not ct.right


def test_anchor_bounds_random(rng):
    for _ in range(300):
        t = random_tree(rng.randint(1, 12), AB, rng)
        A = rng.sample(list(t.domain), rng.randint(1, len(t.domain)))
        anchors = compute_anchor_set(t, A)
        assert len(anchors.B) <= 2 * len(anchors.A)
        amap = anchor_map(anchors)
        assert all(amap[amap[v]] == amap[v] for v in t.domain)
        assert all(amap[v] in anchors.B for v in t.domain)


def test_leaf_context_is_constant():
    A = au.parity_automaton(AB, "a")
    t = tree_from_nested(DEPTH2, AB)
    ct = contract(compute_anchor_set(t, {2, 6}))
    g = context_transform(A, t, DIAMOND, DIAMOND, 2, x=(), y=(), contracted=ct)
    assert g.arity == 0 and g() == A.delta[0, 0, A.symbol("a")]
    one = au.constant(AB)
    h = context_transform(one, t, DIAMOND, DIAMOND, 0, x=(), y=(), contracted=ct)
    assert h.arity == 2 and h(1, 1) == 1


def test_binary_context_against_full_runs():
    A = au.parity_automaton(AB, "a")
    base = tree_from_nested(DEPTH2, AB)
    ct = contract(compute_anchor_set(base, {2, 6}))
    g = context_transform(A, base, DIAMOND, DIAMOND, 0, x=(), y=(), contracted=ct)
    seen = set()
    for l2, l6 in itertools.product(AB, repeat=2):
        labels = dict(base.label)
        labels[2], labels[6] = l2, l6
        t = Tree(base.domain, labels, base.left, base.right, AB)
        run = A.run(t)
        assert g(run[2], run[6]) == run[0]
        seen.add((run[2], run[6]))
    assert len(seen) == 4


def test_delta_label_shapes(comp):
    t = tree_from_nested(DEPTH2, AB)
    A0 = comp.compile(parse_formula("(label_a y)"))
    lab = delta_labeling(A0, t, {2, 6}, DIAMOND, x=(), y=("y",))
    assert all(len(l.entries) == 1 for l in lab.labels.values())
    A1 = comp.compile(parse_formula("(left x y)"))
    lab = delta_labeling(A1, t, {2, 6}, DIAMOND, x=("x",), y=("y",))
    assert len(lab.labels[0].entries) == 2 and lab.labels[0].arity == 2
    assert lab.q is DIAMOND


def test_emulation_trivial_and_random(comp, rng):
    f = parse_formula("(exists z (and (reach z x a b (or (left a b) (right a b))) (label_b z) (left y z)))")
    A = comp.compile(f, ["x", "y"])
    t = tree_from_nested(DEPTH2, AB)
    assert verify_emulation(A, t, {2, 6}, DIAMOND, DIAMOND, x=("x",), y=("y",))
    ok = neg = 0
    for _ in range(150):
        t = random_tree(rng.randint(1, 8), AB, rng)
        Aset = rng.sample(list(t.domain), rng.randint(1, min(4, len(t.domain))))
        L = DeltaLabeler(A, compute_anchor_set(t, Aset), ("x",), ("y",))
        p = DIAMOND if rng.random() < 0.2 else {"x": rng.choice(Aset)}
        q = DIAMOND if rng.random() < 0.2 else {"y": rng.choice(sorted(L.anchors.B, key=t.index.get))}
        ok += verify_emulation(A, t, Aset, p, q, x=("x",), y=("y",), labeler=L)
        bad = corrupt_labeling(L.labelled(q), A, p)
        neg += not verify_emulation(A, t, Aset, p, q, x=("x",), y=("y",), labeler=L, dlt=bad)
    assert ok == neg == 150


def test_emulation_domain_checks(comp):
    A = comp.compile(parse_formula("(left x y)"))
    t = tree_from_nested(DEPTH2, AB)
    with pytest.raises(ScopeError):
        verify_emulation(A, t, {2, 6}, {"x": 1}, DIAMOND, x=("x",), y=("y",))
    with pytest.raises(ScopeError):
        verify_emulation(A, t, {2, 6}, DIAMOND, {"y": 4}, x=("x",), y=("y",))


def test_emulation_single_node(comp):
    A = comp.compile(parse_formula("(label_a x)"))
    t = Tree([0], {0: "a"}, alphabet=AB)
    L = DeltaLabeler(A, compute_anchor_set(t, {0}), ("x",), ())
    for p in (DIAMOND, {"x": 0}):
        assert EmulationAutomaton(A).accepts(L.labelled(DIAMOND), p) == \
            A.accepts(t, {"x": set() if p is DIAMOND else {0}})


def test_theorem_constant_values():
    assert theorem_constant(5, 2, 0) == 1
    assert theorem_constant(1, 1, 1) == 4
    assert theorem_constant(2, 1, 1) == 2 * 2 * 2 ** (2 * 7)
    assert sci(10 ** 20) == "1.000e+20" and sci(42) == "42"


def test_verify_bound_random(comp, rng):
    f = parse_formula("(reach y x a b (or (left a b) (right a b)))")
    A = comp.compile(f, ["x", "y"])
    for _ in range(25):
        t = random_tree(rng.randint(1, 10), AB, rng)
        tab = Evaluator(t).table(f, ("x", "y"))
        for k in range(1, min(4, len(t.domain)) + 1):
            Aset = rng.sample(list(t.domain), k)
            r = verify_bound(A, t, Aset, x=("x",), y=("y",), table=tab)
            assert r.passed and r.label_diff_ok
            assert r.observed <= r.compressed <= r.bound
            assert r.observed == verify_bound(A, t, Aset, x=("x",), y=("y",), compress=False).observed
