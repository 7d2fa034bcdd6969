"""Formula-defined transductions and their backwards translation.

A transduction keeps the elements satisfying a domain formula ``gamma(x)``
and defines each output relation ``R`` by a formula ``theta_R`` over the
input.  A non-deterministic transduction first guesses a set of unary
predicates and then applies a deterministic one.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .errors import BudgetExceeded, ModelError, ScopeError, SignatureError
from .logic.parser import parse_formula, to_text
from .logic.semantics import DEFAULT_BUDGET, Evaluator
from .logic.syntax import (TRUE, And, Const, Eq, Exists, ExistsS, Forall, ForallS, Formula, Implies,
                           In, Mod, Not, Or, Reach, Rel, all_variables, conj, disj, fresh, is_fo, map_children, neq,
                           relations_used, rename_free)
from .structures import ADJ, INC, VERTEX_SORT, Graph, Signature, Structure


@dataclass(frozen=True)
class Transduction:
    """``gamma = (var, formula)``; ``theta[R] = (vars, formula)``."""

    input_signature: Signature
    output_signature: Signature
    gamma: tuple
    theta: Mapping
    output_kind: str = "generic"

    def __post_init__(self):
        gvar, gform = self.gamma
        if not is_fo(gvar) or gform.fo_free - {gvar} or gform.so_free:
            raise ScopeError(f"domain formula must have the single free variable {gvar!r}")
        theta = {}
        for name, arity in self.output_signature.arities:
            if name not in self.theta:
                raise SignatureError(f"no defining formula for output relation {name!r}")
            vars_, form = self.theta[name]
            vars_ = tuple(vars_)
            if len(vars_) != arity or len(set(vars_)) != arity:
                raise SignatureError(f"{name!r} has arity {arity} but is defined over {vars_}")
            if form.fo_free - set(vars_) or form.so_free:
                raise ScopeError(f"formula for {name!r} has stray free variables")
            theta[name] = (vars_, form)
        extra = set(self.theta) - set(theta)
        if extra:
            raise SignatureError(f"formulas for unknown output relations {sorted(extra)}")
        object.__setattr__(self, "theta", theta)
        for f in self.formulas():
            _check_over(f, self.input_signature)

    def formulas(self) -> list[Formula]:
        return [self.gamma[1]] + [f for _, f in self.theta.values()]

    def gamma_at(self, v: str) -> Formula:
        gvar, gform = self.gamma
        return rename_free(gform, {gvar: v})


def _check_over(f: Formula, sig: Signature):
    for name, arity in relations_used(f):
        if name not in sig:
            raise SignatureError(f"relation {name!r} is not in the signature {sig.names}")
        if sig.arity(name) != arity:
            raise SignatureError(f"relation {name!r} used with arity {arity}, declared {sig.arity(name)}")


@dataclass(frozen=True)
class NondetTransduction:
    """Guess unary predicates ``guess`` on the input, then apply ``det``."""

    guess: tuple
    det: Transduction

    def __post_init__(self):
        object.__setattr__(self, "guess", tuple(self.guess))
        clash = set(self.guess) & (set(self.det.output_signature.names) |
                                   set(self.base_signature.names))
        if clash:
            raise SignatureError(f"guessed predicates clash with the signatures: {sorted(clash)}")
        for g in self.guess:
            if self.det.input_signature.arity(g) != 1:
                raise SignatureError(f"guessed predicate {g!r} must be unary")

    @property
    def base_signature(self) -> Signature:
        sig = self.det.input_signature
        keep = [(n, a) for n, a in sig.arities if n not in self.guess]
        return Signature(tuple(keep), frozenset(l for l in sig.labels if l not in self.guess))


@dataclass(frozen=True)
class ExternalTransduction:
    """Interface placeholder for a transduction whose construction lives outside this package."""

    name: str
    description: str
    input_kind: str = "graph-inc"
    output_kind: str = "graph-adj"

    def apply(self, structure: Structure):
        raise NotImplementedError(f"{self.name}: {self.description}")


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------


def apply(I: Transduction, s: Structure, checker=None, budget: int = DEFAULT_BUDGET,
          reach: str = "direct") -> Structure:
    """Image of ``s``: keep ``gamma`` elements, define each relation by its formula."""
    for name, arity in I.input_signature.arities:
        if name not in s.signature:
            raise SignatureError(f"input structure lacks relation {name!r}")
    if checker is None:
        ev = Evaluator(s, budget, reach)
        gvar, gform = I.gamma
        keep = ev.table(gform, (gvar,))
        dom = [e for e, k in zip(s.domain, keep) if k]
        idx = [s.index[e] for e in dom]
        rels = {}
        for name, (vars_, form) in I.theta.items():
            tab = ev.table(form, vars_)
            sub = tab[np.ix_(*([idx] * len(vars_)))]
            rels[name] = [tuple(dom[i] for i in row) for row in np.argwhere(sub)]
    else:
        gvar, gform = I.gamma
        dom = [e for e in s.domain if checker(s, gform, {gvar: e})]
        rels = {}
        for name, (vars_, form) in I.theta.items():
            rels[name] = [t for t in itertools.product(dom, repeat=len(vars_))
                          if checker(s, form, dict(zip(vars_, t)))]
    return Structure(I.output_signature, dom, rels, I.output_kind)


def expand_with(s: Structure, valuation: Mapping[str, Iterable]) -> Structure:
    return s.with_unary({k: set(v) for k, v in valuation.items()})


def apply_nondet(I: NondetTransduction, s: Structure, valuation: Mapping | None = None,
                 budget: int = DEFAULT_BUDGET, reach: str = "direct") -> frozenset:
    """All images (``valuation=None``) or the image under one fixed guess."""
    if valuation is not None:
        missing = set(I.guess) - set(valuation)
        if missing:
            raise ScopeError(f"valuation lacks predicates {sorted(missing)}")
        return frozenset([apply(I.det, expand_with(s, {g: valuation[g] for g in I.guess}),
                                budget=budget, reach=reach)])
    n = len(s.domain)
    total = 1 << (len(I.guess) * n)
    if total > budget:
        raise BudgetExceeded(f"{total} guesses exceed the budget {budget}")
    subsets = [[e for i, e in enumerate(s.domain) if (m >> i) & 1] for m in range(1 << n)]
    out = set()
    for choice in itertools.product(subsets, repeat=len(I.guess)):
        out.add(apply(I.det, expand_with(s, dict(zip(I.guess, choice))), budget=budget, reach=reach))
    return frozenset(out)


# ---------------------------------------------------------------------------
# backwards translation
# ---------------------------------------------------------------------------


def backward_translate(I: Transduction, phi: Formula) -> Formula:
    """``psi`` over the input with ``A |= psi(u)`` iff ``u`` lies in the image's
    domain and the image satisfies ``phi(u)``."""
    _check_over(phi, I.output_signature)
    avoid = all_variables(phi)
    for f in I.formulas():
        avoid |= all_variables(f)
    body = _translate(I, phi, avoid)
    guards = [I.gamma_at(v) for v in sorted(phi.fo_free)]
    guards += [_subset_guard(I, X, avoid) for X in sorted(phi.so_free)]
    return conj(*guards, body)


def _subset_guard(I: Transduction, X: str, avoid: set) -> Formula:
    if I.gamma[1] == TRUE:
        return TRUE
    z = fresh("z", avoid)
    return Forall(z, Implies(In(z, X), I.gamma_at(z)))


def _translate(I: Transduction, f: Formula, avoid: set) -> Formula:
    if isinstance(f, Rel):
        vars_, form = I.theta[f.name]
        return rename_free(form, dict(zip(vars_, f.args)))
    if isinstance(f, (Const, Eq, In, Mod)):
        return f
    if isinstance(f, Not):
        return Not(_translate(I, f.body, avoid))
    if isinstance(f, (And, Or, Implies)):
        return type(f)(_translate(I, f.left, avoid), _translate(I, f.right, avoid))
    trivial = I.gamma[1] == TRUE
    if isinstance(f, Exists):
        body = _translate(I, f.body, avoid)
        return Exists(f.var, body if trivial else And(I.gamma_at(f.var), body))
    if isinstance(f, Forall):
        body = _translate(I, f.body, avoid)
        return Forall(f.var, body if trivial else Implies(I.gamma_at(f.var), body))
    if isinstance(f, ExistsS):
        body = _translate(I, f.body, avoid)
        return ExistsS(f.var, body if trivial else And(_subset_guard(I, f.var, avoid), body))
    if isinstance(f, ForallS):
        body = _translate(I, f.body, avoid)
        return ForallS(f.var, body if trivial else Implies(_subset_guard(I, f.var, avoid), body))
    if isinstance(f, Reach):
        step = _translate(I, f.step, avoid)
        if not trivial:
            step = conj(I.gamma_at(f.a), I.gamma_at(f.b), step)
        return Reach(f.src, f.dst, f.a, f.b, step)
    raise TypeError(f"cannot translate {f!r}")


def compose(first: Transduction, second: Transduction) -> Transduction:
    """The transduction applying ``first`` and then ``second``."""
    if first.output_signature.as_dict() != second.input_signature.as_dict():
        raise SignatureError("output of the first transduction does not match the second's input")
    gvar, gform = second.gamma
    pulled = backward_translate(first, gform)
    if gvar not in gform.fo_free:
        # the translation only guards free variables
        pulled = conj(first.gamma_at(gvar), pulled)
    gamma = (gvar, pulled)
    theta = {name: (vars_, backward_translate(first, form)) for name, (vars_, form) in second.theta.items()}
    return Transduction(first.input_signature, second.output_signature, gamma, theta, second.output_kind)


def identity_transduction(sig: Signature, kind: str = "generic") -> Transduction:
    theta = {}
    for name, arity in sig.arities:
        vars_ = tuple(f"x{i}" for i in range(arity))
        theta[name] = (vars_, Rel(name, vars_))
    return Transduction(sig, sig, ("x", TRUE), theta, kind)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------


def dumps_transduction(I: Transduction | NondetTransduction) -> str:
    guess: list = []
    if isinstance(I, NondetTransduction):
        guess, I = list(I.guess), I.det
    doc = {
        "input": I.input_signature.as_dict(),
        "input_labels": sorted(I.input_signature.labels),
        "output": I.output_signature.as_dict(),
        "output_labels": sorted(I.output_signature.labels),
        "output_kind": I.output_kind,
        "guess": guess,
        "domain": [I.gamma[0], to_text(I.gamma[1])],
        "relations": {n: [list(v), to_text(f)] for n, (v, f) in I.theta.items()},
    }
    return json.dumps(doc, indent=1) + "\n"


def loads_transduction(text: str) -> Transduction | NondetTransduction:
    doc = json.loads(text)
    try:
        guess = list(doc.get("guess", []))
        insig = Signature.of(doc["input"], doc.get("input_labels", ()))
        outsig = Signature.of(doc["output"], doc.get("output_labels", ()))
        gvar, gtext = doc.get("domain", ["x", "(true)"])
        theta = {n: (tuple(v), parse_formula(f)) for n, (v, f) in doc["relations"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise SignatureError(f"malformed transduction document: {exc}") from exc
    det = Transduction(insig, outsig, (gvar, parse_formula(gtext)), theta, doc.get("output_kind", "generic"))
    return NondetTransduction(tuple(guess), det) if guess else det


# ---------------------------------------------------------------------------
# grid graphs back to grids
# ---------------------------------------------------------------------------

GRID_COLORS = tuple(f"A{t}" for t in range(3)) + tuple(f"B{t}" for t in range(3))


def grid_recovery() -> NondetTransduction:
    """Recover the oriented grid from a grid graph using six guessed colours.

    ``A_t`` should hold the cells with ``i = t (mod 3)`` and ``B_t`` those
    with ``j = t (mod 3)``; H and V are the edges whose colours step forward.
    """
    def same(cls, u, v):
        return disj(*(And(Rel(f"{cls}{t}", (u,)), Rel(f"{cls}{t}", (v,))) for t in range(3)))

    def forward(cls, u, v):
        return disj(*(And(Rel(f"{cls}{t}", (u,)), Rel(f"{cls}{(t + 1) % 3}", (v,))) for t in range(3)))

    edge = Rel(ADJ, ("u", "v"))
    theta = {
        "H": (("u", "v"), conj(edge, same("B", "u", "v"), forward("A", "u", "v"))),
        "V": (("u", "v"), conj(edge, same("A", "u", "v"), forward("B", "u", "v"))),
    }
    insig = Signature.of([(ADJ, 2)] + [(c, 1) for c in GRID_COLORS], GRID_COLORS)
    outsig = Signature.of([("H", 2), ("V", 2)])
    det = Transduction(insig, outsig, ("x", TRUE), theta, "generic")
    return NondetTransduction(GRID_COLORS, det)


def canonical_coloring(n: int) -> dict[str, set]:
    cells = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    out = {c: set() for c in GRID_COLORS}
    for i, j in cells:
        out[f"A{i % 3}"].add((i, j))
        out[f"B{j % 3}"].add((i, j))
    return out


# ---------------------------------------------------------------------------
# minors
# ---------------------------------------------------------------------------

MINOR_GUESS = ("D", "F", "L")


def minor_transduction() -> NondetTransduction:
    """Incidence encodings to adjacency encodings of minors.

    ``D`` picks one vertex per branch set, ``F`` spanning edges inside the
    branch sets and ``L`` one witness edge per minor edge.  Two picked
    vertices are adjacent iff a path using ``F`` edges and one ``L`` edge
    links them.
    """
    step = Exists("e", conj(Or(Rel("F", ("e",)), Eq("e", "l")), Rel(INC, ("e", "a")),
                            Rel(INC, ("e", "b")), neq("a", "b")))
    adj = conj(neq("u", "w"), Exists("l", And(Rel("L", ("l",)), Reach("u", "w", "a", "b", step))))
    insig = Signature.of([(INC, 2), (VERTEX_SORT, 1)] + [(g, 1) for g in MINOR_GUESS],
                         [VERTEX_SORT, *MINOR_GUESS])
    outsig = Signature.of([(ADJ, 2)])
    det = Transduction(insig, outsig, ("x", Rel("D", ("x",))), {ADJ: (("u", "w"), adj)}, "graph-adj")
    return NondetTransduction(MINOR_GUESS, det)


def _connected(g: Graph, vs: set) -> bool:
    if not vs:
        return False
    start = next(iter(vs))
    seen, queue = {start}, deque([start])
    while queue:
        v = queue.popleft()
        for w in g.neighbors(v):
            if w in vs and w not in seen:
                seen.add(w)
                queue.append(w)
    return seen == vs


def validate_minor_model(g: Graph, h: Graph, model: Mapping) -> None:
    used: set = set()
    for hv in h.vertices:
        if hv not in model:
            raise ModelError(f"minor vertex {hv!r} has no branch set")
        bs = set(model[hv])
        if not bs or not bs <= set(g.vertices):
            raise ModelError(f"branch set of {hv!r} is empty or leaves the host graph")
        if bs & used:
            raise ModelError(f"branch set of {hv!r} overlaps another branch set")
        used |= bs
        if not _connected(g, bs):
            raise ModelError(f"branch set of {hv!r} is disconnected")
    for a, b in h.edge_list():
        if not any(frozenset((u, v)) in g.edges for u in model[a] for v in model[b]):
            raise ModelError(f"no host edge witnesses the minor edge {a!r}-{b!r}")


def minor_valuation(g: Graph, h: Graph, model: Mapping) -> tuple[dict[str, set], dict]:
    """Guess for ``minor_transduction`` realising ``h`` inside ``g``.

    Returns the valuation (over ``g``'s incidence encoding) and the map from
    picked representatives to the vertices of ``h``.
    """
    validate_minor_model(g, h, model)
    names = g.edge_elements()
    pos = {v: i for i, v in enumerate(g.vertices)}
    D, F, L = set(), set(), set()
    rep_to_h = {}
    for hv in h.vertices:
        bs = sorted(model[hv], key=pos.__getitem__)
        root = bs[0]
        D.add(root)
        rep_to_h[root] = hv
        seen, queue = {root}, deque([root])
        inside = set(bs)
        while queue:
            v = queue.popleft()
            for w in g.neighbors(v):
                if w in inside and w not in seen:
                    seen.add(w)
                    queue.append(w)
                    F.add(names[frozenset((v, w))])
    for a, b in h.edge_list():
        cands = sorted((tuple(sorted((u, v), key=pos.__getitem__)) for u in model[a] for v in model[b]
                        if frozenset((u, v)) in g.edges), key=lambda e: (pos[e[0]], pos[e[1]]))
        L.add(names[frozenset(cands[0])])
    return {"D": D, "F": F, "L": L}, rep_to_h


def relabel_graph(s: Structure, mapping: Mapping) -> Structure:
    """Rename the elements of a structure."""
    rels = {n: [tuple(mapping[e] for e in t) for t in ts] for n, ts in s.relations.items()}
    return Structure(s.signature, [mapping[e] for e in s.domain], rels, s.kind)


# ---------------------------------------------------------------------------
# incidence formulas to adjacency formulas
# ---------------------------------------------------------------------------


def mso2_to_mso1(phi: Formula) -> Formula:
    """Rewrite a formula over incidence encodings into one over the incidence graph.

    ``inc(e, u)`` becomes ``E(e, u) and not vtx(e) and vtx(u)``; ``vtx`` and
    unary labels are kept; quantifiers are unchanged because both encodings
    share their domain.
    """
    def go(f):
        if isinstance(f, Rel):
            if f.name == INC and len(f.args) == 2:
                e, u = f.args
                return conj(Rel(ADJ, (e, u)), Not(Rel(VERTEX_SORT, (e,))), Rel(VERTEX_SORT, (u,)))
            if len(f.args) == 1:
                return f
            raise SignatureError(f"relation {f.name!r}/{len(f.args)} has no counterpart "
                                 "in the incidence graph")
        if not f.children():
            return f
        return map_children(f, go)

    return go(phi)
