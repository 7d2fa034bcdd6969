import pytest

from msovc.compiler import DIAMOND, Compiler, augment, compile_formula, soundness_mismatches
from msovc.corpus import tree_formulas
from msovc.errors import ScopeError, SignatureError
from msovc.lazy import LazyAutomaton
from msovc.logic.parser import parse_formula
from msovc.structures import tree_from_nested

AB = ["a", "b"]


@pytest.fixture(scope="module")
def compiler():
    return Compiler(AB)


def test_augment_bits():
    t = tree_from_nested(("a", "b", "a"), AB)
    aug = augment(t, ["x", "y"], {"x": DIAMOND, "y": DIAMOND})
    assert all(b == {"x": 0, "y": 0} for b in map(aug.bits, t.domain))
    aug = augment(t, ["x"], {"x": t.root})
    assert aug.bits(t.root) == {"x": 1} and aug.bits(1) == {"x": 0}
    aug = augment(t, ["x", "y"], {"x": 2, "y": 2})
    assert aug.bits(2) == {"x": 1, "y": 1}
    with pytest.raises(ScopeError):
        augment(t, ["x"], {"x": 7})
    with pytest.raises(ScopeError):
        augment(t, ["x"], {"z": 0})


def test_label_atom(compiler, trees4):
    f = parse_formula("(label_a x)")
    A = compiler.compile(f)
    for t in trees4:
        for v in t.domain:
            assert A.accepts(t, {"x": {v}}) == (t.label[v] == "a")


def test_sentence_root_a(compiler, trees4):
    f = parse_formula("(exists x (and (label_a x) (not (exists y (or (left y x) (right y x))))))")
    A = compiler.compile(f)
    assert A.tracks == ()
    for t in trees4:
        assert A.accepts(t) == (t.label[t.root] == "a")


def test_tautology_and_marker_discipline(compiler, trees4):
    A = compiler.compile(parse_formula("(= x x)"))
    for t in trees4:
        for v in t.domain:
            assert A.accepts(augment(t, ["x"], {"x": v}).tree, {"x": {v}})
        assert not A.accepts(t, {"x": set()})
        if len(t.domain) > 1:
            assert not A.accepts(t, {"x": set(t.domain[:2])})


@pytest.mark.parametrize("idx", range(len(tree_formulas())))
def test_corpus_soundness_small(compiler, trees4, idx):
    f, free = tree_formulas()[idx]
    A = compiler.compile(f, free)
    assert soundness_mismatches(A, f, trees4, A.tracks) == []


def test_extra_tracks_are_ignored(compiler, trees4):
    f = parse_formula("(left x y)")
    A = compiler.compile(f, ["x", "y", "z"])
    assert A.tracks == ("x", "y", "z")
    assert soundness_mismatches(A, f, trees4[:60], A.tracks) == []


def test_missing_track(compiler):
    with pytest.raises(ScopeError):
        compiler.compile(parse_formula("(left x y)"), ["x"])


def test_unknown_relation(compiler):
    with pytest.raises(SignatureError):
        compiler.compile(parse_formula("(E x y)"))


def test_cache_reuses_alpha_equivalent(compiler):
    a = compiler.compile(parse_formula("(exists z (left z x))"))
    b = compiler.compile(parse_formula("(exists w (left w x))"))
    assert a.nstates == b.nstates and (a.delta == b.delta).all()


def test_lazy_fallback_agrees(trees4):
    f = parse_formula("(existsS X (and (in x X) (forall y (implies (in y X) (label_b y)))))")
    lazy = Compiler(AB, table_cap=10).compile(f)
    assert isinstance(lazy, LazyAutomaton)
    dense = compile_formula(f, AB)
    for t in trees4:
        for v in t.domain:
            assert lazy.accepts(t, {"x": {v}}) == dense.accepts(t, {"x": {v}})
