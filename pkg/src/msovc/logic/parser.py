"""Prefix text syntax for formulas.

    form := (true) | (false) | (R var ...) | (= var var) | (in var Var)
          | (mod Var a p) | (not form) | (and form form ...) | (or form form ...)
          | (implies form form) | (exists var form) | (forall var form)
          | (existsS Var form) | (forallS Var form) | (reach var var var var form)

``and``/``or`` with more than two arguments nest to the right.
"""

from __future__ import annotations

import re
from typing import Iterable

from ..errors import FormulaSyntaxError, MsovcError
from .syntax import (And, Const, Eq, Exists, ExistsS, Forall, ForallS, Formula, Implies, In, Mod,
                     Not, Or, Reach, Rel, validate)

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")
_KEYWORDS = {"true", "false", "=", "in", "mod", "not", "and", "or", "implies", "exists", "forall",
             "existsS", "forallS", "reach"}


def _tokens(text: str):
    pos = 0
    out = []
    while True:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            rest = text[pos:].strip()
            if rest:
                raise FormulaSyntaxError(f"unexpected input {rest[:10]!r}", pos)
            return out
        start = m.start(m.lastindex)
        out.append((m.group(m.lastindex), start))
        pos = m.end()


def parse_sexpr(text: str):
    """Nested lists of ``(token, offset)`` pairs."""
    toks = _tokens(text)
    if not toks:
        raise FormulaSyntaxError("empty input", 0)
    stack: list[list] = [[]]
    opens: list[int] = []
    for tok, pos in toks:
        if tok == "(":
            stack.append([])
            opens.append(pos)
        elif tok == ")":
            if len(stack) == 1:
                raise FormulaSyntaxError("unbalanced ')'", pos)
            done = stack.pop()
            stack[-1].append((done, opens.pop()))
        else:
            stack[-1].append((tok, pos))
    if len(stack) != 1:
        raise FormulaSyntaxError("missing ')'", opens[-1])
    if len(stack[0]) != 1:
        raise FormulaSyntaxError("trailing input after the first expression", stack[0][1][1])
    return stack[0][0]


def _atom_token(node, what):
    tok, pos = node
    if isinstance(tok, list):
        raise FormulaSyntaxError(f"expected {what}, found a parenthesised term", pos)
    return tok, pos


def _int(node):
    tok, pos = _atom_token(node, "an integer")
    try:
        return int(tok)
    except ValueError:
        raise FormulaSyntaxError(f"expected an integer, found {tok!r}", pos) from None


def _build(node) -> Formula:
    items, pos = node
    if items in ("true", "false"):
        return Const(items == "true")
    if not isinstance(items, list):
        raise FormulaSyntaxError(f"expected '(', found {items!r}", pos)
    if not items:
        raise FormulaSyntaxError("empty parentheses", pos)
    head, hpos = _atom_token(items[0], "an operator or relation name")
    args = items[1:]

    def arity(n):
        if len(args) != n:
            raise FormulaSyntaxError(f"'{head}' takes {n} arguments, got {len(args)}", hpos)

    def var(i):
        return _atom_token(args[i], "a variable")[0]

    try:
        if head in ("true", "false"):
            arity(0)
            return Const(head == "true")
        if head == "=":
            arity(2)
            return Eq(var(0), var(1))
        if head == "in":
            arity(2)
            return In(var(0), var(1))
        if head == "mod":
            arity(3)
            return Mod(var(0), _int(args[1]), _int(args[2]))
        if head == "not":
            arity(1)
            return Not(_build(args[0]))
        if head in ("and", "or"):
            if len(args) < 2:
                raise FormulaSyntaxError(f"'{head}' needs at least 2 arguments", hpos)
            parts = [_build(a) for a in args]
            cls = And if head == "and" else Or
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = cls(p, out)
            return out
        if head == "implies":
            arity(2)
            return Implies(_build(args[0]), _build(args[1]))
        if head in ("exists", "forall", "existsS", "forallS"):
            arity(2)
            cls = {"exists": Exists, "forall": Forall, "existsS": ExistsS, "forallS": ForallS}[head]
            return cls(var(0), _build(args[1]))
        if head == "reach":
            arity(5)
            return Reach(var(0), var(1), var(2), var(3), _build(args[4]))
        if not args:
            raise FormulaSyntaxError(f"relation atom '{head}' needs arguments", hpos)
        return Rel(head, tuple(var(i) for i in range(len(args))))
    except FormulaSyntaxError as exc:
        if exc.position is None:
            raise FormulaSyntaxError(str(exc), hpos) from None
        raise


def parse_formula(text: str, dialect: str = "CMSO", free: Iterable[str] | None = None) -> Formula:
    """Parse prefix text.  ``free`` (optional) lists the variables allowed free."""
    f = _build(parse_sexpr(text))
    return validate(f, dialect, free)


def to_text(f: Formula) -> str:
    if isinstance(f, Const):
        return "(true)" if f.value else "(false)"
    if isinstance(f, Rel):
        return f"({f.name} {' '.join(f.args)})"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, In):
        return f"(in {f.elem} {f.set})"
    if isinstance(f, Mod):
        return f"(mod {f.set} {f.a} {f.p})"
    if isinstance(f, Not):
        return f"(not {to_text(f.body)})"
    if isinstance(f, (And, Or, Implies)):
        op = {And: "and", Or: "or", Implies: "implies"}[type(f)]
        return f"({op} {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, (Exists, Forall, ExistsS, ForallS)):
        op = {Exists: "exists", Forall: "forall", ExistsS: "existsS", ForallS: "forallS"}[type(f)]
        return f"({op} {f.var} {to_text(f.body)})"
    if isinstance(f, Reach):
        return f"(reach {f.src} {f.dst} {f.a} {f.b} {to_text(f.step)})"
    raise MsovcError(f"cannot print {f!r}")


def is_keyword(token: str) -> bool:
    return token in _KEYWORDS
