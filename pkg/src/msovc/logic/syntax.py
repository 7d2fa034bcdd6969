"""CMSO abstract syntax.

Variables are plain strings: a lowercase initial letter marks a first-order
variable, an uppercase one a monadic (set) variable.  Nodes are immutable,
hashable and carry their free-variable sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, fields
from typing import Callable, Iterable, Iterator

from ..errors import DialectError, FormulaSyntaxError, ScopeError

DIALECTS = ("MSO", "C2MSO", "CMSO")


def is_fo(name: str) -> bool:
    return name[:1].islower()


def is_so(name: str) -> bool:
    return name[:1].isupper()


def check_var(name: str, sort: str) -> str:
    if not isinstance(name, str) or not name or not (name[0].isalpha()):
        raise FormulaSyntaxError(f"bad variable name {name!r}")
    if sort == "fo" and not is_fo(name):
        raise ScopeError(f"{name!r} is used as a first-order variable but is capitalised")
    if sort == "so" and not is_so(name):
        raise ScopeError(f"{name!r} is used as a set variable but is not capitalised")
    return name


class Formula:
    """Base class; subclasses are frozen dataclasses."""

    fo_free: frozenset
    so_free: frozenset
    _h: int

    def _finish(self, fo, so):
        object.__setattr__(self, "fo_free", frozenset(fo))
        object.__setattr__(self, "so_free", frozenset(so))
        object.__setattr__(self, "_h", hash((type(self).__name__,) + self._values()))

    def _values(self) -> tuple:
        return tuple(getattr(self, f.name) for f in fields(self))

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or self._h != other._h:
            return False
        return self._values() == other._values()

    def __ne__(self, other):
        return not self == other

    @property
    def free(self) -> frozenset:
        return self.fo_free | self.so_free

    def children(self) -> tuple["Formula", ...]:
        return ()

    def __str__(self):
        from .parser import to_text
        return to_text(self)

    # operator sugar for building formulas in code
    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)

    def __rshift__(self, other):
        return Implies(self, other)


@dataclass(frozen=True, eq=False)
class Const(Formula):
    value: bool

    def __post_init__(self):
        self._finish((), ())


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True, eq=False)
class Rel(Formula):
    name: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise FormulaSyntaxError(f"relation atom {self.name!r} needs at least one argument")
        for a in self.args:
            check_var(a, "fo")
        self._finish(self.args, ())


@dataclass(frozen=True, eq=False)
class Eq(Formula):
    left: str
    right: str

    def __post_init__(self):
        check_var(self.left, "fo")
        check_var(self.right, "fo")
        self._finish((self.left, self.right), ())


@dataclass(frozen=True, eq=False)
class In(Formula):
    elem: str
    set: str

    def __post_init__(self):
        check_var(self.elem, "fo")
        check_var(self.set, "so")
        self._finish((self.elem,), (self.set,))


@dataclass(frozen=True, eq=False)
class Mod(Formula):
    """``|X| = a (mod p)``."""

    set: str
    a: int
    p: int

    def __post_init__(self):
        check_var(self.set, "so")
        if not isinstance(self.p, int) or self.p < 2:
            raise FormulaSyntaxError(f"modulus must be at least 2, got {self.p!r}")
        if not isinstance(self.a, int) or not 0 <= self.a < self.p:
            raise FormulaSyntaxError(f"residue must lie in [0, {self.p}), got {self.a!r}")
        self._finish((), (self.set,))


@dataclass(frozen=True, eq=False)
class Not(Formula):
    body: Formula

    def __post_init__(self):
        self._finish(self.body.fo_free, self.body.so_free)

    def children(self):
        return (self.body,)


@dataclass(frozen=True, eq=False)
class _Binary(Formula):
    left: Formula
    right: Formula

    def __post_init__(self):
        self._finish(self.left.fo_free | self.right.fo_free, self.left.so_free | self.right.so_free)

    def children(self):
        return (self.left, self.right)


class And(_Binary):
    pass


class Or(_Binary):
    pass


class Implies(_Binary):
    pass


@dataclass(frozen=True, eq=False)
class _Quant(Formula):
    var: str
    body: Formula

    sort = "fo"

    def __post_init__(self):
        check_var(self.var, self.sort)
        if self.sort == "fo":
            self._finish(self.body.fo_free - {self.var}, self.body.so_free)
        else:
            self._finish(self.body.fo_free, self.body.so_free - {self.var})

    def children(self):
        return (self.body,)


class Exists(_Quant):
    pass


class Forall(_Quant):
    pass


class ExistsS(_Quant):
    sort = "so"


class ForallS(_Quant):
    sort = "so"


@dataclass(frozen=True, eq=False)
class Reach(Formula):
    """Reflexive-transitive closure: ``dst`` is reachable from ``src`` along
    pairs ``(a, b)`` satisfying ``step``.  ``a`` and ``b`` are bound in ``step``.
    Shorthand for ``forall X ((src in X and closed(X)) -> dst in X)``."""

    src: str
    dst: str
    a: str
    b: str
    step: Formula

    def __post_init__(self):
        for v in (self.src, self.dst, self.a, self.b):
            check_var(v, "fo")
        if self.a == self.b:
            raise ScopeError("reach needs two distinct step variables")
        self._finish((self.step.fo_free - {self.a, self.b}) | {self.src, self.dst}, self.step.so_free)

    def children(self):
        return (self.step,)


QUANTIFIERS = (Exists, Forall, ExistsS, ForallS)


# --------------------------------------------------------------------------
# Builders
# --------------------------------------------------------------------------


def conj(*parts: Formula) -> Formula:
    parts = [p for p in parts if p != TRUE]
    if not parts:
        return TRUE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = And(p, out)
    return out


def disj(*parts: Formula) -> Formula:
    parts = [p for p in parts if p != FALSE]
    if not parts:
        return FALSE
    out = parts[-1]
    for p in reversed(parts[:-1]):
        out = Or(p, out)
    return out


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


def exists(vars_: Iterable[str], body: Formula) -> Formula:
    for v in reversed(list(vars_)):
        body = ExistsS(v, body) if is_so(v) else Exists(v, body)
    return body


def forall(vars_: Iterable[str], body: Formula) -> Formula:
    for v in reversed(list(vars_)):
        body = ForallS(v, body) if is_so(v) else Forall(v, body)
    return body


def neq(x: str, y: str) -> Formula:
    return Not(Eq(x, y))


def subset_of(X: str, guard: Callable[[str], Formula], z: str = "z") -> Formula:
    """``forall z (z in X -> guard(z))``."""
    return Forall(z, Implies(In(z, X), guard(z)))


def flatten_and(f: Formula) -> list[Formula]:
    if isinstance(f, And):
        return flatten_and(f.left) + flatten_and(f.right)
    return [f]


# --------------------------------------------------------------------------
# Traversal and rewriting
# --------------------------------------------------------------------------


def subformulas(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(g.children())


def all_variables(f: Formula) -> set[str]:
    """Every variable name occurring anywhere in ``f`` (free or bound)."""
    out = set()
    for g in subformulas(f):
        out |= g.fo_free | g.so_free
        if isinstance(g, _Quant):
            out.add(g.var)
        elif isinstance(g, Reach):
            out |= {g.a, g.b}
    return out


def relations_used(f: Formula) -> set[tuple[str, int]]:
    return {(g.name, len(g.args)) for g in subformulas(f) if isinstance(g, Rel)}


def fresh(base: str, avoid: set[str]) -> str:
    base = base.rstrip("0123456789_") or base
    for i in itertools.count():
        cand = f"{base}_{i}"
        if cand not in avoid:
            avoid.add(cand)
            return cand
    raise AssertionError("unreachable")


def map_children(f: Formula, fn: Callable[[Formula], Formula]) -> Formula:
    """Rebuild ``f`` with ``fn`` applied to each immediate subformula."""
    if isinstance(f, Not):
        return Not(fn(f.body))
    if isinstance(f, _Binary):
        return type(f)(fn(f.left), fn(f.right))
    if isinstance(f, _Quant):
        return type(f)(f.var, fn(f.body))
    if isinstance(f, Reach):
        return Reach(f.src, f.dst, f.a, f.b, fn(f.step))
    return f


def rename_free(f: Formula, mapping: dict[str, str]) -> Formula:
    """Capture-avoiding renaming of free variables (sorts must match)."""
    mapping = {k: v for k, v in mapping.items() if k != v and k in f.free}
    if not mapping:
        return f
    for k, v in mapping.items():
        if is_fo(k) != is_fo(v):
            raise ScopeError(f"cannot rename {k!r} to {v!r}: sorts differ")
    avoid = all_variables(f) | set(mapping.values()) | set(mapping)
    return _rename(f, mapping, avoid)


def _rename(f, m, avoid):
    if not (f.free & m.keys()):
        return f
    if isinstance(f, Rel):
        return Rel(f.name, tuple(m.get(a, a) for a in f.args))
    if isinstance(f, Eq):
        return Eq(m.get(f.left, f.left), m.get(f.right, f.right))
    if isinstance(f, In):
        return In(m.get(f.elem, f.elem), m.get(f.set, f.set))
    if isinstance(f, Mod):
        return Mod(m.get(f.set, f.set), f.a, f.p)
    if isinstance(f, _Quant):
        inner = {k: v for k, v in m.items() if k != f.var}
        var, body = f.var, f.body
        if var in inner.values():
            new = fresh(var, avoid)
            body = _rename(body, {var: new}, avoid)
            var = new
        return type(f)(var, _rename(body, inner, avoid))
    if isinstance(f, Reach):
        inner = {k: v for k, v in m.items() if k not in (f.a, f.b)}
        a, b, step = f.a, f.b, f.step
        for old in (f.a, f.b):
            if old in inner.values():
                new = fresh(old, avoid)
                step = _rename(step, {old: new}, avoid)
                a, b = (new if a == old else a), (new if b == old else b)
        return Reach(m.get(f.src, f.src), m.get(f.dst, f.dst), a, b, _rename(step, inner, avoid))
    return map_children(f, lambda g: _rename(g, m, avoid))


def expand_reach(r: Reach, avoid: set[str] | None = None) -> Formula:
    """The monadic definition of a reach macro."""
    avoid = set(avoid or ()) | all_variables(r)
    X = fresh("R", avoid)
    closed = Forall(r.a, Forall(r.b, Implies(And(In(r.a, X), r.step), In(r.b, X))))
    return ForallS(X, Implies(And(In(r.src, X), closed), In(r.dst, X)))


def expand_macros(f: Formula) -> Formula:
    if isinstance(f, Reach):
        return expand_macros(expand_reach(f))
    if not f.children():
        return f
    return map_children(f, expand_macros)


def canonical_form(f: Formula) -> tuple[Formula, dict[str, str]]:
    """Alpha-normal form: bound and free variables renamed by first occurrence.

    Returns the renamed formula and the map from new free names back to the
    originals.  Alpha-equivalent formulas with free variables used in the same
    pattern share a canonical form.
    """
    counter = {"fo": 0, "so": 0}
    free_map: dict[str, str] = {}

    def name(sort):
        i = counter[sort]
        counter[sort] += 1
        return f"v{i}" if sort == "fo" else f"V{i}"

    def go(g, env):
        def r(v):
            if v in env:
                return env[v]
            if v not in free_map:
                free_map[v] = name("fo" if is_fo(v) else "so")
            return free_map[v]

        if isinstance(g, Const):
            return g
        if isinstance(g, Rel):
            return Rel(g.name, tuple(r(a) for a in g.args))
        if isinstance(g, Eq):
            return Eq(r(g.left), r(g.right))
        if isinstance(g, In):
            return In(r(g.elem), r(g.set))
        if isinstance(g, Mod):
            return Mod(r(g.set), g.a, g.p)
        if isinstance(g, Not):
            return Not(go(g.body, env))
        if isinstance(g, _Binary):
            left = go(g.left, env)
            return type(g)(left, go(g.right, env))
        if isinstance(g, _Quant):
            new = name(g.sort)
            return type(g)(new, go(g.body, {**env, g.var: new}))
        if isinstance(g, Reach):
            src, dst = r(g.src), r(g.dst)
            a, b = name("fo"), name("fo")
            return Reach(src, dst, a, b, go(g.step, {**env, g.a: a, g.b: b}))
        raise TypeError(g)

    out = go(f, {})
    return out, {v: k for k, v in free_map.items()}


# --------------------------------------------------------------------------
# Dialects and partitioned formulas
# --------------------------------------------------------------------------


def dialect_of(f: Formula) -> str:
    """Smallest dialect admitting ``f``."""
    moduli = {g.p for g in subformulas(f) if isinstance(g, Mod)}
    if not moduli:
        return "MSO"
    if moduli == {2}:
        return "C2MSO"
    return "CMSO"


def validate(f: Formula, dialect: str = "CMSO", free: Iterable[str] | None = None) -> Formula:
    if dialect not in DIALECTS:
        raise DialectError(f"unknown dialect {dialect!r}")
    for g in subformulas(f):
        if isinstance(g, Mod):
            if dialect == "MSO":
                raise DialectError("modular atoms are not part of MSO")
            if dialect == "C2MSO" and g.p != 2:
                raise DialectError(f"C2MSO only admits modulus 2, got {g.p}")
    if free is not None:
        unbound = f.free - set(free)
        if unbound:
            raise ScopeError(f"unbound variables: {', '.join(sorted(unbound))}")
    return f


@dataclass(frozen=True)
class PartitionedFormula:
    """A formula with its free first-order variables split into objects and parameters."""

    formula: Formula
    x: tuple
    y: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(self.x))
        object.__setattr__(self, "y", tuple(self.y))
        if not self.x:
            raise ScopeError("a partitioned formula needs at least one object variable")
        both = self.x + self.y
        if len(set(both)) != len(both):
            raise ScopeError("object and parameter variables must be distinct and disjoint")
        for v in both:
            check_var(v, "fo")
        if self.formula.so_free:
            raise ScopeError(f"free set variables not allowed: {sorted(self.formula.so_free)}")
        missing = set(self.formula.fo_free) - set(both)
        if missing:
            raise ScopeError(f"free variables not covered by the partition: {sorted(missing)}")

    @property
    def variables(self) -> tuple:
        return self.x + self.y

    def negated(self) -> "PartitionedFormula":
        return PartitionedFormula(Not(self.formula), self.x, self.y)
