"""Cliquewidth expressions, their parse trees, and bounded-width pipelines.

Graphs of bounded cliquewidth are images of labelled binary trees under a
fixed formula-defined interpretation.  Pulling a graph formula back through
that interpretation gives a tree formula, which is compiled to an automaton
and run on the parse tree.  Treewidth is handled through the incidence graph
and a user-supplied cliquewidth certificate for it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from . import automata as au
from .automata import TreeAutomaton
from .compiler import Compiler, valuation_symbols
from .errors import BudgetExceeded, FormulaSyntaxError, KExpressionError, SignatureError
from .logic.parser import parse_sexpr
from .logic.semantics import DEFAULT_BUDGET
from .logic.syntax import (And, Exists, Forall, ForallS, Formula, Implies, In, Not, Or,
                           PartitionedFormula, Rel, conj, disj, relations_used)
from .setsys import TupleSetSystem
from .structures import (ADJ, LEFT, RIGHT, VERTEX_SORT, Graph, Signature, Tree, incidence_graph,
                         label_relation, render_element, tree_signature)
from .transduce import Transduction, backward_translate, mso2_to_mso1

# ---------------------------------------------------------------------------
# expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Intro:
    vertex: object
    color: int
    labels: frozenset = frozenset()


@dataclass(frozen=True)
class Union:
    left: object
    right: object


@dataclass(frozen=True)
class Join:
    i: int
    j: int
    body: object


@dataclass(frozen=True)
class Relabel:
    i: int
    j: int
    body: object


def _walk(t):
    stack = [t]
    while stack:
        u = stack.pop()
        yield u
        if isinstance(u, Union):
            stack += [u.right, u.left]
        elif isinstance(u, (Join, Relabel)):
            stack.append(u.body)


@dataclass(frozen=True)
class KExpression:
    """A term of the cliquewidth algebra with colours ``1..k``."""

    term: object
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise KExpressionError("colour bound must be at least 1")
        seen = set()
        for u in _walk(self.term):
            if isinstance(u, Intro):
                self._color(u.color)
                if u.vertex in seen:
                    raise KExpressionError(f"vertex {u.vertex!r} is introduced twice")
                seen.add(u.vertex)
            elif isinstance(u, (Join, Relabel)):
                self._color(u.i)
                self._color(u.j)
                if u.i == u.j:
                    raise KExpressionError(f"{type(u).__name__.lower()} needs two distinct colours")
            elif not isinstance(u, Union):
                raise KExpressionError(f"not a k-expression node: {u!r}")

    def _color(self, c):
        if not isinstance(c, int) or not 1 <= c <= self.k:
            raise KExpressionError(f"colour {c!r} outside 1..{self.k}")

    def vertices(self) -> list:
        return [u.vertex for u in _walk(self.term) if isinstance(u, Intro)]

    def labels(self) -> frozenset:
        out = set()
        for u in _walk(self.term):
            if isinstance(u, Intro):
                out |= u.labels
        return frozenset(out)

    def leaves(self) -> int:
        return len(self.vertices())

    def eval(self) -> Graph:
        return eval_kexpression(self)

    def to_text(self) -> str:
        def go(t):
            if isinstance(t, Intro):
                labs = "".join(f" {l}" for l in sorted(t.labels))
                return f"(intro {t.vertex} {t.color}{labs})"
            if isinstance(t, Union):
                return f"(union {go(t.left)} {go(t.right)})"
            op = "join" if isinstance(t, Join) else "relabel"
            return f"({op} {t.i} {t.j} {go(t.body)})"

        return go(self.term)


def parse_kexpression(text: str, k: int | None = None) -> KExpression:
    """Read ``(intro v i [labels...])``, ``(union e e)``, ``(join i j e)``, ``(relabel i j e)``.

    ``k`` defaults to the largest colour used.
    """
    try:
        tree = parse_sexpr(text)
    except FormulaSyntaxError as exc:
        raise KExpressionError(str(exc)) from None

    def atom(node):
        tok, pos = node
        if isinstance(tok, list):
            raise KExpressionError(f"expected a token at offset {pos}")
        return tok

    def color(node):
        tok = atom(node)
        try:
            return int(tok)
        except ValueError:
            raise KExpressionError(f"colour {tok!r} is not an integer (offset {node[1]})") from None

    def build(node):
        items, pos = node
        if not isinstance(items, list) or not items:
            raise KExpressionError(f"expected an operation at offset {pos}")
        head = atom(items[0])
        args = items[1:]
        if head == "intro" and len(args) >= 2:
            return Intro(atom(args[0]), color(args[1]), frozenset(atom(a) for a in args[2:]))
        if head == "union" and len(args) == 2:
            return Union(build(args[0]), build(args[1]))
        if head in ("join", "relabel") and len(args) == 3:
            cls = Join if head == "join" else Relabel
            return cls(color(args[0]), color(args[1]), build(args[2]))
        raise KExpressionError(f"malformed {head!r} term at offset {pos}")

    term = build(tree)
    if k is None:
        cols = [c for u in _walk(term) for c in
                ((u.color,) if isinstance(u, Intro) else (u.i, u.j) if isinstance(u, (Join, Relabel)) else ())]
        k = max(cols)
    return KExpression(term, k)


def eval_kexpression(e: KExpression) -> Graph:
    """The graph built by ``e`` (adjacency encoding, intro labels as vertex labels)."""
    edges: set = set()

    def go(t) -> dict:
        if isinstance(t, Intro):
            return {t.vertex: t.color}
        if isinstance(t, Union):
            out = go(t.left)
            out.update(go(t.right))
            return out
        col = go(t.body)
        if isinstance(t, Join):
            a = [v for v, c in col.items() if c == t.i]
            b = [v for v, c in col.items() if c == t.j]
            edges.update(frozenset((u, v)) for u in a for v in b)
            return col
        return {v: (t.j if c == t.i else c) for v, c in col.items()}

    go(e.term)
    vlabels: dict = {}
    for u in _walk(e.term):
        if isinstance(u, Intro):
            for l in u.labels:
                vlabels.setdefault(l, set()).add(u.vertex)
    return Graph.from_edges(e.vertices(), edges, vertex_labels=vlabels)


# ---------------------------------------------------------------------------
# parse trees
# ---------------------------------------------------------------------------


def intro_symbol(color: int, labels: Iterable[str] = ()) -> str:
    return "+".join([f"intro_{color}"] + sorted(labels))


def kexpr_alphabet(k: int, labels: Iterable[str] = ()) -> tuple[str, ...]:
    """Tree alphabet for colour bound ``k`` and vertex label set ``labels``."""
    labels = sorted(set(labels))
    subsets = [c for r in range(len(labels) + 1) for c in itertools.combinations(labels, r)]
    out = [intro_symbol(i, s) for i in range(1, k + 1) for s in subsets]
    out.append("union")
    out += [f"join_{i}_{j}" for i in range(1, k + 1) for j in range(i + 1, k + 1)]
    out += [f"relabel_{i}_{j}" for i in range(1, k + 1) for j in range(1, k + 1) if i != j]
    return tuple(out)


def to_parse_tree(e: KExpression, labels: Iterable[str] | None = None) -> Tree:
    """Binary tree mirroring ``e``: leaves are the introduced vertices, unary
    operations have a left child only, internal nodes are named ``@0, @1, ...``."""
    labels = e.labels() if labels is None else frozenset(labels) | e.labels()
    alphabet = kexpr_alphabet(e.k, labels)
    names = set(e.vertices())
    nodes, lab, left, right = [], {}, {}, {}
    counter = itertools.count()

    def fresh():
        while True:
            name = f"@{next(counter)}"
            if name not in names:
                return name

    def go(t):
        if isinstance(t, Intro):
            nodes.append(t.vertex)
            lab[t.vertex] = intro_symbol(t.color, t.labels)
            return t.vertex
        me = fresh()
        nodes.append(me)
        if isinstance(t, Union):
            lab[me] = "union"
            left[me] = go(t.left)
            right[me] = go(t.right)
        elif isinstance(t, Join):
            lab[me] = f"join_{min(t.i, t.j)}_{max(t.i, t.j)}"
            left[me] = go(t.body)
        else:
            lab[me] = f"relabel_{t.i}_{t.j}"
            left[me] = go(t.body)
        return me

    go(e.term)
    return Tree(nodes, lab, left, right, alphabet)


# ---------------------------------------------------------------------------
# the interpretation
# ---------------------------------------------------------------------------


def _lab(sym: str, v: str) -> Formula:
    return Rel(label_relation(sym), (v,))


def color_at(k: int, labels: Sequence[str], t: int, u: str = "u", w: str = "w") -> Formula:
    """``u`` carries colour ``t`` in the graph built below ``w``.

    Every family ``C_1..C_k`` that holds ``u``'s introduced colour at ``u`` and
    is closed under moving to the parent (relabelling on the way) puts ``w``
    in ``C_t``.  The least such family is exactly the colour track of ``u``.
    """
    alphabet = kexpr_alphabet(k, labels)
    C = [f"C{s}" for s in range(1, k + 1)]
    intro = {s: [a for a in alphabet if a.split("+")[0] == f"intro_{s}"] for s in range(1, k + 1)}
    init = conj(*(Implies(disj(*(_lab(a, u) for a in intro[s])), In(u, C[s - 1]))
                  for s in range(1, k + 1)))

    def moved(s, cond):
        return Forall("z", Forall("c", Implies(cond, In("z", C[s - 1]))))

    clauses = []
    for s in range(1, k + 1):
        below = And(Or(Rel(LEFT, ("z", "c")), Rel(RIGHT, ("z", "c"))), In("c", C[s - 1]))
        relabels = [_lab(f"relabel_{s}_{r}", "z") for r in range(1, k + 1) if r != s]
        targets = [r for r in range(1, k + 1) if r != s]
        clauses += [moved(r, And(below, m)) for r, m in zip(targets, relabels)]
        clauses.append(moved(s, And(below, Not(disj(*relabels)))))
    body = Implies(conj(init, *clauses), In(w, C[t - 1]))
    for name in reversed(C):
        body = ForallS(name, body)
    return body


def interpretation(k: int, labels: Iterable[str] = ()) -> Transduction:
    """Parse trees over ``kexpr_alphabet(k, labels)`` to the graphs they build."""
    if k < 1:
        raise KExpressionError("colour bound must be at least 1")
    labels = tuple(sorted(set(labels)))
    alphabet = kexpr_alphabet(k, labels)
    intros = [a for a in alphabet if a.startswith("intro_")]
    gamma = ("x", disj(*(_lab(a, "x") for a in intros)))
    joins = []
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            ci_u, cj_v = color_at(k, labels, i, "u", "w"), color_at(k, labels, j, "v", "w")
            cj_u, ci_v = color_at(k, labels, j, "u", "w"), color_at(k, labels, i, "v", "w")
            joins.append(And(_lab(f"join_{i}_{j}", "w"), Or(And(ci_u, cj_v), And(cj_u, ci_v))))
    theta = {ADJ: (("u", "v"), Exists("w", disj(*joins)))}
    for l in labels:
        theta[l] = (("x",), disj(*(_lab(a, "x") for a in intros if l in a.split("+")[1:])))
    outsig = Signature.of([(ADJ, 2)] + [(l, 1) for l in labels], labels)
    return Transduction(tree_signature(alphabet), outsig, gamma, theta, "graph-adj")


def parse_tree_automaton(k: int, labels: Iterable[str] = ()) -> TreeAutomaton:
    """Accepts exactly the trees shaped like parse trees: intros are leaves,
    unions have two children, joins and relabels only a left child."""
    def step(l, r, sym, bits):
        if l is False or r is False:
            return False
        if sym.startswith("intro_"):
            return l is None and r is None
        if sym == "union":
            return l is not None and r is not None
        return l is not None and r is None

    return au.from_function(kexpr_alphabet(k, labels), (), step, lambda q: q)


# beyond this many table entries a step is cheaper to run on demand
DENSE_TABLE_CAP = 2_000_000


@lru_cache(maxsize=16)
def compiler_for(k: int, labels: tuple = ()) -> Compiler:
    """Shared compiler (and automaton cache) per tree alphabet."""
    return Compiler(kexpr_alphabet(k, labels), au.minimize(parse_tree_automaton(k, labels)),
                    table_cap=DENSE_TABLE_CAP)


def _formula_labels(f: Formula) -> set:
    out = set()
    for name, arity in relations_used(f):
        if name == ADJ and arity == 2:
            continue
        if arity != 1:
            raise SignatureError(f"relation {name!r}/{arity} is not part of the adjacency vocabulary")
        out.add(name)
    return out


def interpret_tree(tree: Tree, k: int, labels: Iterable[str] = ()) -> Graph:
    """Apply the interpretation to a parse tree using compiled automata."""
    labels = tuple(sorted(set(labels)))
    I = interpretation(k, labels)
    comp = compiler_for(k, labels)
    gvar, gform = I.gamma
    A = comp.compile(gform, [gvar])
    tup, syms = valuation_symbols(A, tree, [gvar])
    keep = [tree.domain[i] for i in tup[A.accepts_batch(tree, syms), 0]]
    pos = np.array([tree.index[v] for v in keep], dtype=np.int64)
    vars_, form = I.theta[ADJ]
    A = comp.compile(form, vars_)
    grid = np.stack(np.meshgrid(pos, pos, indexing="ij"), axis=-1).reshape(-1, 2) if len(pos) else \
        np.zeros((0, 2), np.int64)
    edges = []
    if len(grid):
        _, syms = valuation_symbols(A, tree, list(vars_), grid)
        for a, b in grid[A.accepts_batch(tree, syms)]:
            edges.append((tree.domain[a], tree.domain[b]))
    vlabels = {}
    for l in labels:
        vars_, form = I.theta[l]
        A = comp.compile(form, vars_)
        _, syms = valuation_symbols(A, tree, list(vars_), pos[:, None])
        vlabels[l] = {keep[i] for i in np.flatnonzero(A.accepts_batch(tree, syms))}
    return Graph.from_edges(keep, edges, vertex_labels=vlabels)


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def check_on_cliquewidth(pf: PartitionedFormula, e: KExpression, elements: Sequence | None = None,
                         budget: int = DEFAULT_BUDGET) -> TupleSetSystem:
    """The set system of ``pf`` on the graph built by ``e``, computed on the parse tree."""
    labels = tuple(sorted(e.labels() | _formula_labels(pf.formula)))
    tree = to_parse_tree(e, labels)
    I = interpretation(e.k, labels)
    psi = backward_translate(I, pf.formula)
    order = list(pf.x + pf.y)
    A = compiler_for(e.k, labels).compile(psi, order)
    elements = list(e.vertices() if elements is None else elements)
    count = len(elements) ** len(order)
    if count > budget:
        raise BudgetExceeded(f"{count} tuple valuations exceed the budget {budget}")
    pos = np.array([tree.index[v] for v in elements], dtype=np.int64)
    combos = np.array(list(itertools.product(range(len(elements)), repeat=len(order))), dtype=np.int64)
    combos = combos.reshape(-1, len(order))
    _, syms = valuation_symbols(A, tree, order, pos[combos])
    ok = A.accepts_batch(tree, syms)
    nx = len(pf.x)
    members: dict[tuple, set] = {}
    for row, hit in zip(combos, ok):
        vbar = tuple(elements[i] for i in row[nx:])
        cur = members.setdefault(vbar, set())
        if hit:
            cur.add(tuple(elements[i] for i in row[:nx]))
    return TupleSetSystem(elements, members.values(), nx)


def bind_vertices(e: KExpression, elements: Sequence) -> KExpression:
    """Rename text-parsed vertex names to the matching ``elements`` (by rendered name)."""
    by_name = {render_element(x): x for x in elements}

    def go(t):
        if isinstance(t, Intro):
            return Intro(by_name.get(render_element(t.vertex), t.vertex), t.color, t.labels)
        if isinstance(t, Union):
            return Union(go(t.left), go(t.right))
        return type(t)(t.i, t.j, go(t.body))

    return KExpression(go(e.term), e.k)


def check_certificate(g: Graph, cert: KExpression) -> Graph:
    """Raise unless ``cert`` builds the incidence graph of ``g`` (vertices labelled ``vtx``)."""
    h = g if g.encoding == "incidence" else incidence_graph(g)
    want = h.bipartite()
    got = cert.eval()
    same = (set(got.vertices) == set(want.vertices) and got.edges == want.edges
            and set(got.vertex_labels.get(VERTEX_SORT, ())) == set(want.vertex_labels[VERTEX_SORT]))
    if not same:
        raise KExpressionError("certificate does not build the incidence graph of the input")
    return want


def check_on_treewidth(pf: PartitionedFormula, g: Graph, cert: KExpression,
                       budget: int = DEFAULT_BUDGET) -> TupleSetSystem:
    """Set system of an incidence-vocabulary formula on ``g``, tuples over vertices."""
    check_certificate(g, cert)
    psi = PartitionedFormula(mso2_to_mso1(pf.formula), pf.x, pf.y)
    return check_on_cliquewidth(psi, cert, elements=list(g.vertices), budget=budget)


def forest_kexpression(g: Graph) -> KExpression:
    """A 3-expression for a forest (vertex labels become intro labels)."""
    labels_of = {v: frozenset(l for l, ms in g.vertex_labels.items() if v in ms) for v in g.vertices}
    seen: set = set()
    parts = []
    for root in g.vertices:
        if root in seen:
            continue
        # iterative DFS order, children before parents when folded
        order, parent, stack = [], {root: None}, [root]
        seen.add(root)
        while stack:
            v = stack.pop()
            order.append(v)
            for w in g.neighbors(v):
                if w == parent[v]:
                    continue
                if w in seen:
                    raise KExpressionError("graph is not a forest")
                seen.add(w)
                parent[w] = v
                stack.append(w)
        built: dict = {}
        for v in reversed(order):
            t = Intro(v, 1, labels_of[v])
            kids = [built.pop(w) for w in g.neighbors(v) if parent.get(w) == v and w != parent[v]]
            if kids:
                sub = kids[0]
                for other in kids[1:]:
                    sub = Union(sub, other)
                t = Relabel(2, 3, Join(1, 2, Union(t, Relabel(1, 2, sub))))
            built[v] = t
        parts.append(built[root])
    if not parts:
        raise KExpressionError("a k-expression needs at least one vertex")
    term = parts[0]
    for p in parts[1:]:
        term = Union(term, p)
    return KExpression(term, 3)


def forest_certificate(g: Graph) -> KExpression:
    """Certificate for ``check_on_treewidth`` when ``g`` is a forest."""
    h = g if g.encoding == "incidence" else incidence_graph(g)
    return forest_kexpression(h.bipartite())
