"""Acceptance suite: eleven end-to-end properties, each with a time limit.

Run under pytest (one PASS/FAIL line per criterion is printed even when
output is captured) or directly with ``python3 tests/test_acceptance.py``.
"""

import itertools
import math
import random
import sys
import time

import pytest

from msovc.compiler import Compiler, soundness_mismatches
from msovc.compression import anchor_map, compute_anchor_set, corrupt_labeling, verify_bound, verify_emulation
from msovc.compression import DIAMOND, DeltaLabeler
from msovc.corpus import (all_graphs, bound_formulas, graph_formulas, incidence_formulas, random_forest,
                          random_kexpression, tree_formulas)
from msovc.gridlab import log2_floor, verify_shattering
from msovc.logic.parser import parse_formula
from msovc.logic.semantics import Evaluator, check, define_set_system
from msovc.logic.syntax import TRUE, PartitionedFormula
from msovc.setsys import TupleSetSystem, fit_density, growth_function, sauer_shelah_bound
from msovc.structures import Graph, Signature, enumerate_trees, incidence_graph, make_grid, make_grid_graph, random_tree
from msovc.transduce import (Transduction, apply, apply_nondet, backward_translate, canonical_coloring, compose,
                             grid_recovery, mso2_to_mso1)
from msovc.width import check_on_cliquewidth, check_on_treewidth, forest_certificate

AB = ("a", "b")
ADJ = Signature.of({"E": 2})


def c1_compiler_soundness():
    trees = list(enumerate_trees(5, AB))
    comp = Compiler(list(AB))
    corpus = tree_formulas()
    bad = 0
    for f, free in corpus:
        A = comp.compile(f, free)
        bad += len(soundness_mismatches(A, f, trees, A.tracks))
    return bad == 0 and len(corpus) >= 12, f"{len(corpus)} formulas x {len(trees)} trees, {bad} mismatches"


def c2_bound():
    rng = random.Random(2)
    comp = Compiler(list(AB))
    instances = failures = 0
    for pf in bound_formulas():
        assert len(pf.x) <= 2 and len(pf.y) <= 2
        order = list(pf.x + pf.y)
        A = comp.compile(pf.formula, order)
        for _ in range(3):
            t = random_tree(rng.randint(1, 10), AB, rng)
            table = Evaluator(t).table(pf.formula, order)
            for r in range(1, min(4, len(t.domain)) + 1):
                for Aset in itertools.combinations(t.domain, r):
                    rep = verify_bound(A, t, Aset, x=pf.x, y=pf.y, table=table)
                    instances += 1
                    failures += not rep.passed
    return failures == 0 and instances >= 500, f"{instances} instances, {failures} violations"


def c3_emulation():
    rng = random.Random(3)
    comp = Compiler(list(AB))
    formulas = [
        ("(exists z (and (reach z x a b (or (left a b) (right a b))) (label_b z) (left y z)))", ("x",), ("y",)),
        ("(reach y x a b (or (left a b) (right a b)))", ("x",), ("y",)),
        ("(or (= x1 y) (left x1 x2))", ("x1", "x2"), ("y",)),
        ("(existsS X (and (in x X) (in y X) (mod X 0 2)))", ("x",), ("y",)),
    ]
    ok = neg = n = 0
    for text, x, y in formulas:
        A = comp.compile(parse_formula(text), list(x + y))
        for _ in range(260):
            t = random_tree(rng.randint(1, 8), AB, rng)
            Aset = rng.sample(list(t.domain), rng.randint(1, min(4, len(t.domain))))
            L = DeltaLabeler(A, compute_anchor_set(t, Aset), x, y)
            B = sorted(L.anchors.B, key=t.index.get)
            p = DIAMOND if rng.random() < 0.2 else {v: rng.choice(Aset) for v in x}
            q = DIAMOND if rng.random() < 0.2 else {v: rng.choice(B) for v in y}
            n += 1
            ok += verify_emulation(A, t, Aset, p, q, x=x, y=y, labeler=L)
            bad = corrupt_labeling(L.labelled(q), A, p)
            neg += not verify_emulation(A, t, Aset, p, q, x=x, y=y, labeler=L, dlt=bad)
    return ok == neg == n >= 1000, f"{ok}/{n} emulations agree, {neg}/{n} corrupted labelings rejected"


def c4_anchor_sets():
    rng = random.Random(4)
    bad = 0
    for _ in range(10_000):
        t = random_tree(rng.randint(1, 30), AB, rng)
        Aset = rng.sample(list(t.domain), rng.randint(1, len(t.domain)))
        anchors = compute_anchor_set(t, Aset)
        m = anchor_map(anchors)
        if len(anchors.B) > 2 * len(set(Aset)):
            bad += 1
        elif any(m[m[v]] != m[v] or m[v] not in anchors.B for v in t.domain):
            bad += 1
    return bad == 0, f"10000 random (T, A), {bad} failures"


def _transductions():
    def T(dom, edge, kind="graph-adj"):
        return Transduction(ADJ, ADJ, ("x", dom if dom is TRUE else parse_formula(dom)),
                            {"E": (("u", "v"), parse_formula(edge))}, kind)

    complement = T(TRUE, "(and (not (E u v)) (not (= u v)))")
    nonisolated = T("(exists z (E x z))", "(E u v)")
    square = T(TRUE, "(and (not (= u v)) (exists z (and (E u z) (E z v))))")
    return [complement, nonisolated, square, compose(nonisolated, complement), compose(square, nonisolated)]


def c5_backward_translation():
    rng = random.Random(5)
    phis = [parse_formula(t) for t in (
        "(exists x (exists y (E x y)))",
        "(forall x (exists y (E x y)))",
        "(E x y)",
        "(reach x y a b (E a b))",
        "(existsS X (and (mod X 1 2) (forall z (in z X))))",
        "(existsS X (and (in x X) (not (in y X)) (forall u (forall v (implies (and (in u X) (E u v)) (in v X))))))",
        "(and (in x X) (forall z (implies (in z X) (exists w (and (E z w) (not (in w X)))))))",
    )]
    cases = bad = 0
    for I in _transductions():
        psis = [backward_translate(I, phi) for phi in phis]
        for _ in range(4):
            n = rng.randint(1, 5)
            edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < 0.45]
            s = Graph.from_edges(range(n), edges).structure()
            img = apply(I, s)
            ev_s, ev_i = Evaluator(s, reach="direct"), Evaluator(img, reach="direct")
            for phi, psi in zip(phis, psis):
                fo = sorted(phi.fo_free)
                so = sorted(phi.so_free)
                subsets = [frozenset(c) for r in range(n + 1) for c in itertools.combinations(s.domain, r)]
                for vals in itertools.product(s.domain, repeat=len(fo)):
                    for sets in itertools.product(subsets, repeat=len(so)):
                        val = dict(zip(fo, vals)) | dict(zip(so, sets))
                        inside = all(v in img.index for v in vals) and all(S <= set(img.domain) for S in sets)
                        want = inside and ev_i.holds(phi, val)
                        cases += 1
                        bad += ev_s.holds(psi, val) != want
    return bad == 0 and cases >= 500, f"{cases} cases, {bad} mismatches"


def c6_cliquewidth():
    rng = random.Random(6)
    fs = graph_formulas()
    pairs = bad = 0
    exprs = [random_kexpression(rng.randint(2, 15), rng.randint(1, 3), rng) for _ in range(20)]
    exprs.sort(key=lambda e: e.leaves())
    for e in exprs:
        assert e.k <= 3 and e.leaves() <= 15
        s = e.eval().structure()
        # the brute-force side of the set-quantified formula is exponential in |V|
        chosen = fs if e.leaves() <= 10 else fs[:4]
        for pf in chosen:
            got = check_on_cliquewidth(pf, e)
            want = define_set_system(s, pf, elements=e.vertices(), reach="direct")
            pairs += 1
            bad += got != want
    return bad == 0 and pairs >= 60, f"20 k-expressions, {pairs} (expression, formula) pairs, {bad} mismatches"


MSO2_SENTENCES = (
    "(exists e (exists u (inc e u)))",
    "(existsS M (and (forall m (implies (in m M) (not (vtx m)))) "
    "(forall u (implies (vtx u) (exists e (and (in e M) (inc e u)))))))",
    "(existsS X (and (forall z (and (implies (in z X) (not (vtx z))) (implies (not (vtx z)) (in z X)))) (mod X 0 2)))",
    "(exists u (and (vtx u) (exists e (and (inc e u) (not (exists f (and (inc f u) (not (= e f)))))))))",
    "(forallS S (implies (and (exists u (and (vtx u) (in u S))) (forall u (forall v (implies (and (in u S) "
    "(vtx v) (exists e (and (inc e u) (inc e v)))) (in v S))))) (forall w (implies (vtx w) (in w S)))))",
    "(forallS X (implies (and (forall z (implies (in z X) (not (vtx z)))) (mod X 1 3)) "
    "(exists u (and (vtx u) (forall e (implies (inc e u) (not (in e X))))))))",
)


def c7_treewidth():
    graphs = list(all_graphs(4))
    phis = [parse_formula(t) for t in MSO2_SENTENCES]
    translated = [mso2_to_mso1(p) for p in phis]
    bad = 0
    for g in graphs:
        inc = incidence_graph(g)
        a, b = inc.structure(), inc.bipartite().structure()
        for phi, psi in zip(phis, translated):
            bad += check(a, phi, reach="direct") != check(b, psi, reach="direct")
    rng = random.Random(7)
    tw_bad = tw_n = 0
    fs = incidence_formulas()
    for i in range(6):
        g = random_forest(rng.randint(2, 6), rng)
        pf = fs[i % len(fs)]
        got = check_on_treewidth(pf, g, forest_certificate(g))
        want = define_set_system(incidence_graph(g).structure(), pf, reach="direct")
        tw_n += 1
        tw_bad += got != want
    ok = bad == 0 and tw_bad == 0 and len(phis) >= 5
    return ok, (f"{len(phis)} sentences x {len(graphs)} graphs, {bad} mismatches; "
                f"{tw_n} certified forests, {tw_bad} mismatches")


def c8_grid_shattering():
    sizes = {}
    for n, mode in ((2, "brute"), (4, "brute"), (4, "direct"), (8, "direct"), (16, "direct")):
        rep = verify_shattering(n, mode)
        sizes[(n, mode)] = rep
    ok = all(r.verdict and r.size == log2_floor(n) for (n, _), r in sizes.items())
    agree = sizes[(4, "brute")].same_outcome(sizes[(4, "direct")])
    detail = ", ".join(f"n={n} {m}: {r.size}" for (n, m), r in sizes.items())
    return ok and agree, f"{detail}; brute/direct agree at n=4: {agree}"


def c9_grid_recovery():
    J = grid_recovery()
    bad = []
    for n in range(1, 9):
        (img,) = apply_nondet(J, make_grid_graph(n).structure(), canonical_coloring(n))
        want = make_grid(n)
        if set(img.domain) != set(want.domain) or img.relations != want.relations:
            bad.append(n)
    return not bad, f"n=1..8, identity map fails for {bad or 'none'}"


def _corpus_systems():
    rng = random.Random(10)
    out = []
    for pf in graph_formulas()[:4]:
        for _ in range(4):
            g = Graph.from_edges(range(7), [p for p in itertools.combinations(range(7), 2) if rng.random() < 0.35])
            out.append(define_set_system(g.structure(), pf, reach="direct"))
    for pf in incidence_formulas()[:3]:
        g = random_forest(6, rng)
        out.append(define_set_system(incidence_graph(g).structure(), pf, reach="direct"))
    for n in range(4, 8):
        pf = PartitionedFormula(parse_formula("(or (= x y1) (= x y2))"), ("x",), ("y1", "y2"))
        out.append(define_set_system(Graph.from_edges(range(n), []).structure(), pf))
    out.append(TupleSetSystem(range(3), []))
    return out


def c10_sauer_shelah():
    systems = _corpus_systems()
    bad = 0
    for F in systems:
        d = F.vc_dimension()
        for n in range(len(F.universe) + 1):
            pi = growth_function(F, n).value
            if pi > sauer_shelah_bound(n, d) or pi > 2 ** n or (pi == 2 ** n and n > d and F.family):
                bad += 1
    return bad == 0, f"{len(systems)} set systems, {bad} violations"


def c11_density():
    pf = PartitionedFormula(parse_formula("(or (= x y1) (= x y2))"), ("x",), ("y1", "y2"))
    pts = []
    for N in range(4, 10):
        F = define_set_system(Graph.from_edges(range(N), []).structure(), pf)
        pts.append((N, growth_function(F, N).value))
    exact = all(p == N + math.comb(N, 2) for N, p in pts)
    fit = fit_density(pts)
    return exact and 1.6 <= fit.exponent <= 2.4, f"exponent {fit.exponent:.3f} on N=4..9"


# (number, name, function, time limit in seconds)
CRITERIA = [
    (1, "compiler soundness", c1_compiler_soundness, 120),
    (2, "set-count bound", c2_bound, 300),
    (3, "emulation", c3_emulation, 120),
    (4, "anchor sets", c4_anchor_sets, 60),
    (5, "backward translation", c5_backward_translation, 180),
    (6, "cliquewidth pipeline", c6_cliquewidth, 600),
    (7, "treewidth pipeline", c7_treewidth, 300),
    (8, "grid shattering", c8_grid_shattering, 180),
    (9, "grid recovery", c9_grid_recovery, 60),
    (10, "Sauer-Shelah", c10_sauer_shelah, 120),
    (11, "density fit", c11_density, 120),
]


def evaluate(num, name, fn, limit):
    start = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - start
    passed = passed and elapsed < limit
    line = f"{'PASS' if passed else 'FAIL'} criterion {num:2d} {name}: {detail} [{elapsed:.1f}s, limit {limit}s]"
    return passed, line


@pytest.mark.parametrize("num,name,fn,limit", CRITERIA, ids=[f"c{c[0]:02d}" for c in CRITERIA])
def test_criterion(num, name, fn, limit, capsys):
    passed, line = evaluate(num, name, fn, limit)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line


if __name__ == "__main__":
    wanted = {int(a) for a in sys.argv[1:]}
    results = []
    for c in CRITERIA:
        if not wanted or c[0] in wanted:
            results.append(evaluate(*c))
            print(results[-1][1], flush=True)
    sys.exit(0 if all(p for p, _ in results) else 1)
