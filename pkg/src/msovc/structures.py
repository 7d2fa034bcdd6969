"""Finite relational structures and the concrete families used by the package.

Elements are opaque hashable tokens (ints, strings or tuples of those).  The
order of the ``domain`` tuple is the canonical iteration order everywhere.
Grid cells are ``(i, j)`` tuples; :func:`render_element` prints them as
``"i,j"``.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import StructureError

KINDS = ("tree", "grid", "graph-adj", "graph-inc", "generic")

LEFT = "left"
RIGHT = "right"
LABEL_PREFIX = "label_"
ADJ = "E"
INC = "inc"
VERTEX_SORT = "vtx"


def label_relation(symbol: str) -> str:
    return LABEL_PREFIX + symbol


def render_element(e) -> str:
    if isinstance(e, tuple):
        return ",".join(render_element(x) for x in e)
    return str(e)


# --------------------------------------------------------------------------
# Signatures and structures
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    """Relation names with arities; ``labels`` flags unary label predicates."""

    arities: tuple[tuple[str, int], ...]
    labels: frozenset = frozenset()

    def __post_init__(self):
        names = [n for n, _ in self.arities]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate relation names in {names}")
        for name, arity in self.arities:
            if not isinstance(arity, int) or arity < 1:
                raise StructureError(f"relation {name!r} has non-positive arity {arity!r}")
        for lab in self.labels:
            if self.arity(lab) != 1:
                raise StructureError(f"label predicate {lab!r} must be unary")

    @classmethod
    def of(cls, arities: Mapping[str, int] | Iterable[tuple[str, int]], labels=()):
        items = arities.items() if isinstance(arities, Mapping) else arities
        return cls(tuple((str(n), int(a)) for n, a in items), frozenset(labels))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.arities)

    def arity(self, name: str) -> int:
        for n, a in self.arities:
            if n == name:
                return a
        raise StructureError(f"unknown relation {name!r}")

    def __contains__(self, name) -> bool:
        return any(n == name for n, _ in self.arities)

    def as_dict(self) -> dict[str, int]:
        return dict(self.arities)

    def union(self, other: "Signature") -> "Signature":
        merged = dict(self.arities)
        for n, a in other.arities:
            if n in merged and merged[n] != a:
                raise StructureError(f"relation {n!r} has arities {merged[n]} and {a}")
            merged[n] = a
        return Signature.of(merged, self.labels | other.labels)


class Structure:
    """A validated, immutable finite relational structure."""

    kind = "generic"

    def __init__(self, signature: Signature, domain: Sequence, relations: Mapping[str, Iterable],
                 kind: str = "generic", *, _validated: bool = False):
        if kind not in KINDS:
            raise StructureError(f"unknown structure kind {kind!r}")
        self.signature = signature
        self.domain = tuple(domain)
        self.kind = kind
        self.index = {e: i for i, e in enumerate(self.domain)}
        if len(self.index) != len(self.domain):
            raise StructureError("domain contains duplicate elements")
        rels = {}
        for name in relations:
            if name not in signature:
                raise StructureError(f"unknown relation name {name!r}")
        for name, arity in signature.arities:
            tuples = frozenset(tuple(t) for t in relations.get(name, ()))
            if not _validated:
                for t in tuples:
                    if len(t) != arity:
                        raise StructureError(
                            f"tuple {t!r} of {name!r} has length {len(t)}, arity is {arity}")
                    for e in t:
                        if e not in self.index:
                            raise StructureError(f"element {e!r} of {name!r} is outside the domain")
            rels[name] = tuples
        self.relations = MappingProxyType(rels)
        self._arrays: dict[str, np.ndarray] = {}
        self._hash = None

    def __len__(self):
        return len(self.domain)

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return (self.signature == other.signature and self.domain == other.domain
                and dict(self.relations) == dict(other.relations))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.signature, self.domain,
                               tuple(sorted((k, hash(v)) for k, v in self.relations.items()))))
        return self._hash

    def __repr__(self):
        sizes = ", ".join(f"{k}:{len(v)}" for k, v in self.relations.items())
        return f"<{type(self).__name__} kind={self.kind} |dom|={len(self.domain)} {sizes}>"

    def sorted_tuples(self, name: str) -> list[tuple]:
        idx = self.index
        return sorted(self.relations[name], key=lambda t: tuple(idx[e] for e in t))

    def relation_array(self, name: str) -> np.ndarray:
        """Dense boolean tensor of a relation, axes in domain order."""
        arr = self._arrays.get(name)
        if arr is None:
            arity = self.signature.arity(name)
            n = len(self.domain)
            arr = np.zeros((n,) * arity, dtype=bool)
            tuples = self.relations[name]
            if tuples:
                coords = np.array([[self.index[e] for e in t] for t in tuples], dtype=np.intp)
                arr[tuple(coords.T)] = True
            arr.setflags(write=False)
            self._arrays[name] = arr
        return arr

    def with_unary(self, predicates: Mapping[str, Iterable], labels: bool = True) -> "Structure":
        """Copy of this structure with extra unary relations added (kind becomes generic)."""
        sig = self.signature.union(Signature.of({p: 1 for p in predicates},
                                                predicates.keys() if labels else ()))
        rels = dict(self.relations)
        for p, members in predicates.items():
            rels[p] = {(e,) for e in members}
        return Structure(sig, self.domain, rels, "generic")

    def restricted_to(self, keep: Iterable) -> "Structure":
        """Induced substructure on ``keep`` (domain order preserved)."""
        keep = set(keep)
        dom = [e for e in self.domain if e in keep]
        rels = {n: [t for t in ts if all(e in keep for e in t)] for n, ts in self.relations.items()}
        return Structure(self.signature, dom, rels, "generic")


# --------------------------------------------------------------------------
# Trees
# --------------------------------------------------------------------------


def tree_signature(alphabet: Sequence[str]) -> Signature:
    labels = [label_relation(a) for a in alphabet]
    return Signature.of([(LEFT, 2), (RIGHT, 2)] + [(lab, 1) for lab in labels], labels)


class Tree(Structure):
    """Rooted binary tree with one alphabet symbol per node.

    ``left`` holds pairs ``(parent, child)`` where ``child`` is the left child
    of ``parent``; ``right`` likewise.
    """

    kind = "tree"

    def __init__(self, nodes: Sequence, labels: Mapping, left: Mapping | None = None,
                 right: Mapping | None = None, alphabet: Sequence[str] | None = None):
        left = dict(left or {})
        right = dict(right or {})
        nodes = tuple(nodes)
        if not nodes:
            raise StructureError("a tree needs at least one node")
        if alphabet is None:
            alphabet = sorted({labels[v] for v in nodes if v in labels})
        self.alphabet = tuple(alphabet)
        alpha = set(self.alphabet)
        node_set = set(nodes)
        for v in nodes:
            if v not in labels:
                raise StructureError(f"node {v!r} carries no symbol")
            if labels[v] not in alpha:
                raise StructureError(f"symbol {labels[v]!r} of node {v!r} not in alphabet")
        parent = {}
        for side in (left, right):
            for p, c in side.items():
                if p not in node_set or c not in node_set:
                    raise StructureError(f"child edge ({p!r}, {c!r}) leaves the node set")
                if c in parent:
                    raise StructureError(f"node {c!r} has more than one parent")
                parent[c] = p
        roots = [v for v in nodes if v not in parent]
        if len(roots) != 1:
            raise StructureError(f"a tree needs exactly one root, found {len(roots)}")
        self.root = roots[0]
        self.left = MappingProxyType(left)
        self.right = MappingProxyType(right)
        self.parent = MappingProxyType(parent)
        self.label = MappingProxyType({v: labels[v] for v in nodes})
        # iterative DFS: reachability from the root gives connectivity and acyclicity
        order, stack, seen = [], [self.root], set()
        while stack:
            v = stack.pop()
            if v in seen:
                raise StructureError("child relation contains a cycle")
            seen.add(v)
            order.append(v)
            for c in (right.get(v), left.get(v)):
                if c is not None:
                    stack.append(c)
        if len(seen) != len(nodes):
            raise StructureError("tree is not connected")
        self.preorder = tuple(order)
        self.postorder = tuple(_postorder(self.root, left, right))
        rels = {LEFT: left.items(), RIGHT: right.items()}
        for a in self.alphabet:
            rels[label_relation(a)] = [(v,) for v in nodes if labels[v] == a]
        super().__init__(tree_signature(self.alphabet), nodes, rels, "tree")
        idx = self.index
        self.left_index = np.array([idx[left[v]] if v in left else -1 for v in nodes], dtype=np.intp)
        self.right_index = np.array([idx[right[v]] if v in right else -1 for v in nodes], dtype=np.intp)
        self.post_index = np.array([idx[v] for v in self.postorder], dtype=np.intp)

    @classmethod
    def from_structure(cls, s: Structure) -> "Tree":
        alphabet = []
        for name in s.signature.names:
            if name in (LEFT, RIGHT):
                continue
            if not name.startswith(LABEL_PREFIX):
                raise StructureError(f"relation {name!r} is not part of a tree signature")
            alphabet.append(name[len(LABEL_PREFIX):])
        for name in (LEFT, RIGHT):
            if name not in s.signature or s.signature.arity(name) != 2:
                raise StructureError(f"tree signature needs binary relation {name!r}")
        labels = {}
        for a in alphabet:
            for (v,) in s.relations[label_relation(a)]:
                if v in labels:
                    raise StructureError(f"node {v!r} carries two symbols")
                labels[v] = a
        left, right = {}, {}
        for name, side in ((LEFT, left), (RIGHT, right)):
            for p, c in s.relations[name]:
                if p in side:
                    raise StructureError(f"node {p!r} has two {name} children")
                side[p] = c
        return cls(s.domain, labels, left, right, alphabet)

    def children(self, v) -> tuple:
        return tuple(c for c in (self.left.get(v), self.right.get(v)) if c is not None)

    def descendants(self, v) -> list:
        out, stack = [], [v]
        while stack:
            u = stack.pop()
            out.append(u)
            stack.extend(self.children(u))
        return out

    def ancestors(self, v) -> list:
        """``v`` and its ancestors, bottom-up."""
        out = [v]
        while out[-1] in self.parent:
            out.append(self.parent[out[-1]])
        return out

    def relabeled(self, labels: Mapping, alphabet: Sequence[str] | None = None) -> "Tree":
        return Tree(self.domain, labels, self.left, self.right, alphabet)


def _postorder(root, left, right):
    out, stack = [], [(root, False)]
    while stack:
        v, done = stack.pop()
        if done:
            out.append(v)
            continue
        stack.append((v, True))
        for c in (right.get(v), left.get(v)):
            if c is not None:
                stack.append((c, False))
    return out


def tree_from_nested(spec, alphabet: Sequence[str] | None = None) -> Tree:
    """Build a tree from ``(symbol, left_spec, right_spec)`` triples; nodes are
    numbered in preorder.  ``None`` marks a missing child."""
    labels, left, right = {}, {}, {}

    def walk(s):
        if isinstance(s, str):
            s = (s, None, None)
        sym, l, r = s
        v = len(labels)
        labels[v] = sym
        if l is not None:
            left[v] = walk(l)
        if r is not None:
            right[v] = walk(r)
        return v

    walk(spec)
    return Tree(range(len(labels)), labels, left, right, alphabet)


def tree_shapes(n: int) -> list:
    """All binary tree shapes with exactly ``n`` nodes as nested ``(l, r)`` pairs."""
    return _shapes(n)


_SHAPES: dict[int, list] = {0: [None]}


def _shapes(n):
    if n not in _SHAPES:
        out = []
        for k in range(n):
            for l in _shapes(k):
                for r in _shapes(n - 1 - k):
                    out.append((l, r))
        _SHAPES[n] = out
    return _SHAPES[n]


def _shape_tree(shape, labels_seq, alphabet):
    labels, left, right = {}, {}, {}
    it = iter(labels_seq)

    def walk(s):
        v = len(labels)
        labels[v] = next(it)
        l, r = s
        if l is not None:
            left[v] = walk(l)
        if r is not None:
            right[v] = walk(r)
        return v

    walk(shape)
    return Tree(range(len(labels)), labels, left, right, alphabet)


def enumerate_trees(max_nodes: int, alphabet: Sequence[str], min_nodes: int = 1) -> Iterator[Tree]:
    """Every labelled binary tree with ``min_nodes..max_nodes`` nodes."""
    for n in range(min_nodes, max_nodes + 1):
        for shape in _shapes(n):
            for labels_seq in itertools.product(alphabet, repeat=n):
                yield _shape_tree(shape, labels_seq, alphabet)


def random_tree(n: int, alphabet: Sequence[str], rng: random.Random) -> Tree:
    """Random tree on ``n`` nodes: each new node fills a uniformly chosen free child slot."""
    if n < 1:
        raise StructureError("a tree needs at least one node")
    labels = {0: rng.choice(alphabet)}
    left, right = {}, {}
    slots = [(0, LEFT), (0, RIGHT)]
    for v in range(1, n):
        p, side = slots.pop(rng.randrange(len(slots)))
        (left if side == LEFT else right)[p] = v
        labels[v] = rng.choice(alphabet)
        slots.extend([(v, LEFT), (v, RIGHT)])
    return Tree(range(n), labels, left, right, alphabet)


# --------------------------------------------------------------------------
# Grids and graphs
# --------------------------------------------------------------------------

GRID_SIGNATURE = Signature.of([("H", 2), ("V", 2)])


def _grid_relations(n):
    cells = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    h = [((i, j), (i + 1, j)) for (i, j) in cells if i < n]
    v = [((i, j), (i, j + 1)) for (i, j) in cells if j < n]
    return cells, h, v


def make_grid(n: int) -> Structure:
    """The n x n grid: ``H`` links (i,j)->(i+1,j), ``V`` links (i,j)->(i,j+1)."""
    if n < 1:
        raise StructureError("grid side must be at least 1")
    cells, h, v = _grid_relations(n)
    return Structure(GRID_SIGNATURE, cells, {"H": h, "V": v}, "grid")


def _validate_grid(s: Structure):
    n = int(round(len(s.domain) ** 0.5))
    cells, h, v = _grid_relations(n)
    if set(s.domain) != set(cells) or n * n != len(s.domain):
        raise StructureError("grid domain must be [n] x [n]")
    if s.relations["H"] != frozenset(h):
        bad = sorted(set(s.relations["H"]) ^ set(h))
        raise StructureError(f"H must hold exactly on ((i,j),(i+1,j)); offending {bad[:3]}")
    if s.relations["V"] != frozenset(v):
        bad = sorted(set(s.relations["V"]) ^ set(v))
        raise StructureError(f"V must hold exactly on ((i,j),(i,j+1)); offending {bad[:3]}")


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph with optional unary vertex/edge labels.

    ``encoding`` chooses how :meth:`structure` encodes it: ``adjacency``
    (domain V, symmetric ``E``) or ``incidence`` (domain V + E, ``inc(e, u)``
    and the reserved vertex-sort predicate ``vtx``).
    """

    vertices: tuple
    edges: frozenset
    encoding: str = "adjacency"
    vertex_labels: Mapping = field(default_factory=dict)
    edge_labels: Mapping = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))
        if len(set(self.vertices)) != len(self.vertices):
            raise StructureError("duplicate vertices")
        vs = set(self.vertices)
        edges = set()
        for e in self.edges:
            e = frozenset(e)
            if len(e) != 2:
                raise StructureError(f"edge {sorted(e, key=repr)!r} is a self-loop or malformed")
            if not e <= vs:
                raise StructureError("edge endpoint outside the vertex set")
            edges.add(e)
        object.__setattr__(self, "edges", frozenset(edges))
        if self.encoding not in ("adjacency", "incidence"):
            raise StructureError(f"unknown encoding {self.encoding!r}")
        vl = {k: frozenset(v) for k, v in dict(self.vertex_labels).items()}
        el = {k: frozenset(frozenset(e) for e in v) for k, v in dict(self.edge_labels).items()}
        for k, members in vl.items():
            if not members <= vs:
                raise StructureError(f"vertex label {k!r} names unknown vertices")
        for k, members in el.items():
            if not members <= edges:
                raise StructureError(f"edge label {k!r} names unknown edges")
        object.__setattr__(self, "vertex_labels", MappingProxyType(vl))
        object.__setattr__(self, "edge_labels", MappingProxyType(el))

    def __hash__(self):
        return hash((self.vertices, self.edges, self.encoding))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.vertices == other.vertices and self.edges == other.edges
                and self.encoding == other.encoding
                and dict(self.vertex_labels) == dict(other.vertex_labels)
                and dict(self.edge_labels) == dict(other.edge_labels))

    @classmethod
    def from_edges(cls, vertices, edges, **kw) -> "Graph":
        return cls(tuple(vertices), frozenset(frozenset(e) for e in edges), **kw)

    def edge_list(self) -> list[tuple]:
        """Edges as ``(u, v)`` with ``u`` before ``v`` in vertex order, sorted."""
        pos = {v: i for i, v in enumerate(self.vertices)}
        out = [tuple(sorted(e, key=pos.__getitem__)) for e in self.edges]
        return sorted(out, key=lambda uv: (pos[uv[0]], pos[uv[1]]))

    def neighbors(self, v) -> list:
        pos = {u: i for i, u in enumerate(self.vertices)}
        return sorted((u for e in self.edges if v in e for u in e if u != v), key=pos.__getitem__)

    def edge_element(self, u, v) -> str:
        pos = {x: i for i, x in enumerate(self.vertices)}
        a, b = sorted((u, v), key=pos.__getitem__)
        return f"{render_element(a)}~{render_element(b)}"

    def edge_elements(self) -> dict:
        """Map each edge (as frozenset) to its element id in the incidence encoding."""
        out = {frozenset(uv): self.edge_element(*uv) for uv in self.edge_list()}
        clash = set(out.values()) & set(self.vertices)
        if clash:
            raise StructureError(f"edge element names collide with vertices: {sorted(clash)}")
        return out

    def structure(self) -> Structure:
        vlabels = sorted(self.vertex_labels)
        elabels = sorted(self.edge_labels)
        if self.encoding == "adjacency":
            if elabels:
                raise StructureError("edge labels need the incidence encoding")
            sig = Signature.of([(ADJ, 2)] + [(l, 1) for l in vlabels], vlabels)
            adj = [t for u, v in self.edge_list() for t in ((u, v), (v, u))]
            rels = {ADJ: adj}
            for l in vlabels:
                rels[l] = [(v,) for v in self.vertex_labels[l]]
            return Structure(sig, self.vertices, rels, "graph-adj")
        names = self.edge_elements()
        labs = sorted(set(vlabels) | set(elabels))
        sig = Signature.of([(INC, 2), (VERTEX_SORT, 1)] + [(l, 1) for l in labs], labs)
        dom = list(self.vertices) + [names[frozenset(uv)] for uv in self.edge_list()]
        inc = [(names[frozenset(uv)], x) for uv in self.edge_list() for x in uv]
        rels = {INC: inc, VERTEX_SORT: [(v,) for v in self.vertices]}
        for l in labs:
            members = [(v,) for v in self.vertex_labels.get(l, ())]
            members += [(names[e],) for e in self.edge_labels.get(l, ())]
            rels[l] = members
        return Structure(sig, dom, rels, "graph-inc")

    def bipartite(self) -> "Graph":
        """The incidence graph as a plain adjacency-encoded graph on V + E,
        original vertices carrying the ``vtx`` label."""
        names = self.edge_elements()
        verts = list(self.vertices) + [names[frozenset(uv)] for uv in self.edge_list()]
        edges = [(names[frozenset(uv)], x) for uv in self.edge_list() for x in uv]
        vl = {VERTEX_SORT: set(self.vertices)}
        for l, members in self.vertex_labels.items():
            vl.setdefault(l, set()).update(members)
        for l, members in self.edge_labels.items():
            vl.setdefault(l, set()).update(names[e] for e in members)
        return Graph.from_edges(verts, edges, vertex_labels=vl)


def make_grid_graph(n: int) -> Graph:
    """n x n grid graph: (i,j) ~ (i',j') iff |i-i'| + |j-j'| = 1."""
    if n < 1:
        raise StructureError("grid side must be at least 1")
    cells, h, v = _grid_relations(n)
    return Graph.from_edges(cells, h + v)


def incidence_graph(g: Graph) -> Graph:
    if g.encoding != "adjacency":
        raise StructureError("incidence_graph expects an adjacency-encoded graph")
    return Graph(g.vertices, g.edges, "incidence", g.vertex_labels, g.edge_labels)


def graph_from_structure(s: Structure) -> Graph:
    """Inverse of ``Graph.structure()`` for adjacency encodings."""
    if ADJ not in s.signature:
        raise StructureError("structure has no adjacency relation E")
    edges = set()
    for u, v in s.relations[ADJ]:
        if u == v:
            raise StructureError("adjacency relation has a self-loop")
        if (v, u) not in s.relations[ADJ]:
            raise StructureError("adjacency relation is not symmetric")
        edges.add(frozenset((u, v)))
    labels = {n: {t[0] for t in s.relations[n]} for n, a in s.signature.arities if a == 1}
    return Graph(s.domain, frozenset(edges), "adjacency", labels)


# --------------------------------------------------------------------------
# Construction, validation and the text format
# --------------------------------------------------------------------------


def build_structure(signature: Signature | Mapping[str, int], domain: Sequence,
                    relations: Mapping[str, Iterable], kind: str = "generic",
                    labels: Iterable[str] = ()) -> Structure:
    """Validate and build a structure; ``kind`` triggers family-specific checks."""
    if not isinstance(signature, Signature):
        signature = Signature.of(signature, labels)
    s = Structure(signature, domain, relations, kind)
    if kind == "tree":
        return Tree.from_structure(s)
    if kind == "grid":
        if set(signature.names) != {"H", "V"}:
            raise StructureError("grid signature is {H, V}")
        _validate_grid(s)
    elif kind == "graph-adj":
        graph_from_structure(s)
    elif kind == "graph-inc":
        _validate_incidence(s)
    return s


def _validate_incidence(s: Structure):
    if INC not in s.signature or VERTEX_SORT not in s.signature:
        raise StructureError("incidence encoding needs relations inc and vtx")
    verts = {t[0] for t in s.relations[VERTEX_SORT]}
    ends: dict = {}
    for e, u in s.relations[INC]:
        if e in verts or u not in verts:
            raise StructureError(f"inc({e!r}, {u!r}) must link an edge element to a vertex")
        ends.setdefault(e, set()).add(u)
    for e in s.domain:
        if e not in verts and len(ends.get(e, ())) != 2:
            raise StructureError(f"edge element {e!r} must have exactly two endpoints")


def _encode(e):
    if isinstance(e, tuple):
        return [_encode(x) for x in e]
    if isinstance(e, bool) or not isinstance(e, (int, str)):
        raise StructureError(f"element {e!r} cannot be serialised")
    return e


def _decode(e):
    if isinstance(e, list):
        return tuple(_decode(x) for x in e)
    return e


def dumps_structure(s: Structure) -> str:
    """Deterministic JSON text: kind, signature, labels, domain, relations."""
    doc = {
        "kind": s.kind,
        "signature": s.signature.as_dict(),
        "labels": sorted(s.signature.labels),
        "domain": [_encode(e) for e in s.domain],
        "relations": {n: [[_encode(e) for e in t] for t in s.sorted_tuples(n)]
                      for n in s.signature.names},
    }
    if isinstance(s, Tree):
        doc["alphabet"] = list(s.alphabet)
    return json.dumps(doc, indent=1, ensure_ascii=False) + "\n"


def loads_structure(text: str) -> Structure:
    doc = json.loads(text)
    try:
        kind = doc.get("kind", "generic")
        sig = Signature.of(doc["signature"], doc.get("labels", ()))
        domain = [_decode(e) for e in doc["domain"]]
        rels = {n: [tuple(_decode(e) for e in t) for t in ts] for n, ts in doc["relations"].items()}
    except (KeyError, TypeError, AttributeError) as exc:
        raise StructureError(f"malformed structure document: {exc}") from exc
    s = build_structure(sig, domain, rels, kind)
    if isinstance(s, Tree) and "alphabet" in doc:
        s = Tree(s.domain, s.label, s.left, s.right, doc["alphabet"])
    return s


# --------------------------------------------------------------------------
# Brute-force isomorphism for small structures
# --------------------------------------------------------------------------


def find_isomorphism(a: Structure, b: Structure) -> dict | None:
    """Backtracking search for a relation-preserving bijection ``a -> b``."""
    if a.signature.as_dict() != b.signature.as_dict() or len(a.domain) != len(b.domain):
        return None
    if any(len(a.relations[n]) != len(b.relations[n]) for n in a.signature.names):
        return None

    def profile(s, e):
        out = []
        for name, arity in s.signature.arities:
            for pos in range(arity):
                out.append(sum(1 for t in s.relations[name] if t[pos] == e))
        return tuple(out)

    pa = {e: profile(a, e) for e in a.domain}
    pb = {e: profile(b, e) for e in b.domain}
    if sorted(pa.values()) != sorted(pb.values()):
        return None
    rel_a = {n: a.relations[n] for n in a.signature.names}
    rel_b = {n: b.relations[n] for n in b.signature.names}
    order = sorted(a.domain, key=lambda e: -sum(pa[e]))
    mapping: dict = {}
    used: set = set()

    def consistent(e):
        for name, ts in rel_a.items():
            for t in ts:
                if e in t and all(x in mapping for x in t):
                    if tuple(mapping[x] for x in t) not in rel_b[name]:
                        return False
        return True

    def extend(k):
        if k == len(order):
            return True
        e = order[k]
        for f in b.domain:
            if f in used or pb[f] != pa[e]:
                continue
            mapping[e] = f
            used.add(f)
            if consistent(e) and extend(k + 1):
                return True
            del mapping[e]
            used.discard(f)
        return False

    return dict(mapping) if extend(0) else None
