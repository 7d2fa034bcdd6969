"""Command-line harness: ``msovc <command> [flags]``.

Every artifact opens with one JSON line echoing the tool version, the seed,
the budgets and the resolved configuration.  A JSON config file
(``--config``) may supply any flag by its long name with dashes turned into
underscores; flags given on the command line win.

Exit codes: 0 when every check passes, 1 when a verified property fails,
2 on a budget, parse or input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import random
import sys
from pathlib import Path

from . import __version__
from . import automata as au
from .compiler import Compiler, soundness_mismatches
from .compression import sci, verify_bound
from .errors import BudgetExceeded, MsovcError
from .gridlab import verify_shattering
from .lazy import LazyAutomaton
from .logic.parser import parse_formula
from .logic.semantics import DEFAULT_BUDGET, Evaluator, define_set_system, member_sets
from .logic.syntax import PartitionedFormula
from .setsys import DEFAULT_SUBSET_CAP, growth_function, sauer_shelah_bound
from .structures import (Tree, dumps_structure, enumerate_trees, graph_from_structure, incidence_graph,
                         loads_structure, random_tree, render_element)
from .transduce import NondetTransduction, apply, apply_nondet, loads_transduction
from .width import bind_vertices, check_on_cliquewidth, check_on_treewidth, parse_kexpression, to_parse_tree

PASS, FAIL, ERROR = 0, 1, 2

BUDGET_KEYS = ("valuation_budget", "state_cap", "subset_cap")


class ConfigError(MsovcError, ValueError):
    """A missing or malformed option."""


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


class _Command:
    def __init__(self, sub, name: str, help: str, defaults: dict):
        self.parser = sub.add_parser(name, help=help)
        self.name = name
        self.defaults = dict(defaults)
        self.required: list[str] = []

    def add(self, flag: str, default=None, required: bool = False, **kw):
        dest = flag.lstrip("-").replace("-", "_")
        self.parser.add_argument(flag, dest=dest, default=argparse.SUPPRESS, **kw)
        if required:
            self.required.append(dest)
        else:
            self.defaults[dest] = default


COMMON = {"seed": 0, "out": None, "valuation_budget": DEFAULT_BUDGET, "state_cap": au.STATE_CAP,
          "subset_cap": DEFAULT_SUBSET_CAP}


def _common(cmd: _Command):
    p = cmd.parser
    p.add_argument("--config", default=None, help="JSON file of option values")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--out", default=argparse.SUPPRESS, help="output file (default: stdout)")
    p.add_argument("--valuation-budget", dest="valuation_budget", type=int, default=argparse.SUPPRESS)
    p.add_argument("--state-cap", dest="state_cap", type=int, default=argparse.SUPPRESS)
    p.add_argument("--subset-cap", dest="subset_cap", type=int, default=argparse.SUPPRESS)


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    ap = argparse.ArgumentParser(prog="msovc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"msovc {__version__}")
    sub = ap.add_subparsers(dest="command")
    cmds: dict[str, _Command] = {}

    def new(name, help):
        c = _Command(sub, name, help, COMMON)
        _common(c)
        cmds[name] = c
        return c

    def formula_args(c, partitioned=True):
        c.add("--formula", required=True, help="formula text, or @FILE")
        if partitioned:
            c.add("--x", default="x", help="object variables, comma separated")
            c.add("--y", default="y", help="parameter variables, comma separated")

    c = new("compile", "compile a tree formula into an automaton")
    formula_args(c, partitioned=False)
    c.add("--alphabet", default="a,b")
    c.add("--free", default=None, help="track order (default: the free variables)")
    c.add("--dump", default=False, action="store_true")
    c.add("--table-cap", default=None, type=int, help="switch to on-demand automata past this many table entries")
    c.add("--verify", default=0, type=int, help="compare with brute force on all trees up to this size")

    c = new("check", "model-check a formula on a structure")
    formula_args(c, partitioned=False)
    c.add("--structure", required=True)
    c.add("--valuation", default=None, help="JSON object, or @FILE")
    c.add("--expect", default=None, choices=["true", "false"])

    for name, help in (("setsystem", "the set system defined on a structure"),
                       ("vcdim", "VC dimension of a defined set system"),
                       ("growth", "growth function of a defined set system")):
        c = new(name, help)
        formula_args(c)
        c.add("--structure", required=True)
        if name == "growth":
            c.add("--n-max", default=None, type=int)
            c.add("--mode", default="exact", choices=["exact", "sampled"])
            c.add("--samples", default=1000, type=int)

    c = new("bound-verify", "check the set-count bound on tree instances")
    formula_args(c)
    c.add("--trees", default=None, help="directory of tree structure files (default: random trees)")
    c.add("--alphabet", default="a,b")
    c.add("--count", default=20, type=int, help="number of random trees")
    c.add("--max-nodes", default=10, type=int)
    c.add("--max-A", default=4, type=int)
    c.add("--per-size", default=3, type=int, help="random sets A of each size per tree")

    c = new("transduce", "apply a transduction to a structure")
    c.add("--spec", required=True)
    c.add("--input", required=True)
    c.add("--enumerate", default=False, action="store_true")
    c.add("--valuation", default=None, help="guessed predicates as JSON, or @FILE")

    c = new("cw-eval", "evaluate a k-expression")
    c.add("--expr", required=True, help="k-expression text, or @FILE")
    c.add("--k", default=None, type=int)

    c = new("cw-setsystem", "set system on a graph given by a k-expression, via its parse tree")
    formula_args(c)
    c.add("--expr", required=True, help="k-expression text, or @FILE")
    c.add("--k", default=None, type=int)
    c.add("--verify", default=False, action="store_true", help="compare with brute force")

    c = new("tw-setsystem", "set system of an incidence formula via a width certificate")
    formula_args(c)
    c.add("--graph", required=True, help="graph structure file (adjacency encoding)")
    c.add("--cert", required=True, help="k-expression for the incidence graph, or @FILE")
    c.add("--verify", default=False, action="store_true", help="compare with brute force")

    c = new("grid-demo", "shattering by the counter formula on the n x n grid")
    c.add("--n", default=4, type=int)
    c.add("--mode", default="direct", choices=["brute", "direct"])
    c.add("--csv", default=None, help="also write the witness table here")

    return ap, cmds


def resolve(argv: list[str]) -> dict:
    """Parse ``argv``: defaults, then the config file, then flags."""
    ap, cmds = build_parser()
    ns = ap.parse_args(argv)
    if ns.command is None:
        ap.print_help(sys.stderr)
        raise ConfigError("no command given")
    cmd = cmds[ns.command]
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    conf = dict(cmd.defaults)
    if ns.config:
        try:
            loaded = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        known = set(cmd.defaults) | set(cmd.required)
        unknown = sorted(set(loaded) - known - {"command"})
        if unknown:
            raise ConfigError(f"unknown config keys for {cmd.name}: {unknown}")
        conf.update({k: v for k, v in loaded.items() if k != "command"})
    conf.update(given)
    missing = [k for k in cmd.required if conf.get(k) is None]
    if missing:
        raise ConfigError(f"{cmd.name} needs --{', --'.join(m.replace('_', '-') for m in missing)}")
    for k in BUDGET_KEYS:
        if not isinstance(conf[k], int) or conf[k] <= 0:
            raise ConfigError(f"budget {k} must be a positive integer")
    conf["command"] = cmd.name
    return conf


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def header(conf: dict) -> str:
    doc = {"tool": "msovc", "version": __version__, "command": conf["command"], "seed": conf["seed"],
           "budgets": {k: conf[k] for k in BUDGET_KEYS},
           "config": {k: v for k, v in sorted(conf.items()) if k not in BUDGET_KEYS + ("seed", "command")}}
    return json.dumps(doc, sort_keys=True) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _render_tuple(t) -> str:
    return " ".join(render_element(e) for e in t)


def _render_member(m) -> str:
    return ";".join(_render_tuple(t) for t in sorted(m, key=repr))


# ---------------------------------------------------------------------------
# input helpers
# ---------------------------------------------------------------------------


def _text(arg: str) -> str:
    if arg.startswith("@"):
        try:
            return Path(arg[1:]).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {arg[1:]}: {exc}") from exc
    return arg


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _vars(spec) -> tuple:
    if isinstance(spec, (list, tuple)):
        return tuple(spec)
    return tuple(v for v in str(spec).split(",") if v)


def _json_arg(arg: str):
    try:
        return json.loads(_text(arg))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad JSON: {exc}") from exc


def _element(raw):
    """JSON value to domain element (lists become tuples)."""
    return tuple(_element(r) for r in raw) if isinstance(raw, list) else raw


def _valuation(s, raw: dict) -> dict:
    out = {}
    for var, val in raw.items():
        if var[:1].isupper():
            out[var] = {_element(v) for v in val}
        else:
            out[var] = _element(val)
        vals = out[var] if isinstance(out[var], set) else {out[var]}
        bad = [v for v in vals if v not in s.index]
        if bad:
            raise ConfigError(f"valuation of {var} names unknown elements {bad}")
    return out


def _structure(path: str):
    try:
        return loads_structure(_read(path))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: bad JSON: {exc}") from exc


def _partitioned(conf) -> PartitionedFormula:
    f = parse_formula(_text(conf["formula"]))
    return PartitionedFormula(f, _vars(conf["x"]), _vars(conf["y"]))


# ---------------------------------------------------------------------------
# commands; each returns (exit code, body text)
# ---------------------------------------------------------------------------


def cmd_compile(conf):
    f = parse_formula(_text(conf["formula"]))
    alphabet = _vars(conf["alphabet"])
    free = _vars(conf["free"]) if conf["free"] else None
    A = Compiler(alphabet, table_cap=conf["table_cap"]).compile(f, free)
    lines = [f"alphabet {len(alphabet)}", f"tracks {' '.join(A.tracks) or '-'}"]
    if isinstance(A, LazyAutomaton):
        if conf["dump"]:
            raise BudgetExceeded("the automaton exceeded the table budget and exists only on demand")
        lines.insert(0, "states lazy")
        body = "\n".join(lines) + "\n"
    else:
        lines.insert(0, f"states {A.nstates}")
        body = "\n".join(lines) + "\n"
        if conf["dump"]:
            body += A.dump()
    code = PASS
    if conf["verify"] > 0:
        trees = enumerate_trees(conf["verify"], alphabet)
        bad = soundness_mismatches(A, f, trees, A.tracks)
        body += f"verify trees<={conf['verify']} mismatches {len(bad)}\n"
        code = FAIL if bad else PASS
    return code, body


def cmd_check(conf):
    s = _structure(conf["structure"])
    f = parse_formula(_text(conf["formula"]))
    val = _valuation(s, _json_arg(conf["valuation"])) if conf["valuation"] else {}
    got = Evaluator(s, conf["valuation_budget"], "direct").holds(f, val)
    body = json.dumps({"result": got}) + "\n"
    if conf["expect"] is not None and got != (conf["expect"] == "true"):
        return FAIL, body
    return PASS, body


def cmd_setsystem(conf):
    s = _structure(conf["structure"])
    pf = _partitioned(conf)
    members = member_sets(s, pf, budget=conf["valuation_budget"], reach="direct")
    rows = [["parameter", "size", "members"]]
    for par, objs in members.items():
        rows.append([_render_tuple(par), len(objs), _render_member(objs)])
    distinct = len(set(members.values()))
    return PASS, _csv(rows) + f"# distinct {distinct}\n"


def _system(conf):
    s = _structure(conf["structure"])
    return define_set_system(s, _partitioned(conf), budget=conf["valuation_budget"], reach="direct")


def cmd_vcdim(conf):
    F = _system(conf)
    d, wit = F.vc_dimension(witness=True)
    doc = {"universe": len(F.universe), "family": len(F), "arity": F.k, "vc_dimension": d,
           "witness": None if wit is None else [_render_tuple(t) if isinstance(t, tuple) else render_element(t)
                                                for t in wit]}
    return PASS, json.dumps(doc, sort_keys=True) + "\n"


def cmd_growth(conf):
    F = _system(conf)
    if F.k != 1:
        raise ConfigError("growth is defined here for single object variables")
    d = F.vc_dimension()
    nmax = len(F.universe) if conf["n_max"] is None else min(conf["n_max"], len(F.universe))
    rows = [["n", "pi", "mode", "sauer_shelah", "pass"]]
    ok = True
    for n in range(0, nmax + 1):
        g = growth_function(F, n, conf["mode"], conf["samples"], conf["seed"], conf["subset_cap"])
        ss = sauer_shelah_bound(n, d)
        good = g.value <= ss and g.value <= 2 ** n and (g.value < 2 ** n or n <= d)
        ok &= good
        rows.append([n, g.value, g.mode, ss, str(good).lower()])
    return (PASS if ok else FAIL), _csv(rows) + f"# vc_dimension {d}\n"


def _trees(conf) -> list[tuple[str, Tree]]:
    if conf["trees"]:
        d = Path(conf["trees"])
        if not d.is_dir():
            raise ConfigError(f"{d} is not a directory")
        out = []
        for p in sorted(d.glob("*.json")):
            t = loads_structure(p.read_text())
            if not isinstance(t, Tree):
                raise ConfigError(f"{p.name} is not a tree")
            out.append((p.stem, t))
        return out
    rng = random.Random(conf["seed"])
    alphabet = _vars(conf["alphabet"])
    return [(f"t{i:03d}", random_tree(rng.randint(1, conf["max_nodes"]), alphabet, rng))
            for i in range(conf["count"])]


def cmd_bound_verify(conf):
    pf = _partitioned(conf)
    trees = _trees(conf)
    if not trees:
        raise ConfigError("no trees to check")
    alphabet = trees[0][1].alphabet
    comp = Compiler(alphabet)
    A = comp.compile(pf.formula, pf.variables)
    if isinstance(A, LazyAutomaton):
        raise BudgetExceeded("the formula's automaton exceeded the table budget")
    rng = random.Random(conf["seed"])
    rows = [["tree-id", "|A|", "observed", "bound", "pass"]]
    ok = True
    for tid, t in trees:
        if tuple(t.alphabet) != tuple(alphabet):
            raise ConfigError(f"tree {tid} uses a different alphabet")
        for m in range(1, min(conf["max_A"], len(t.domain)) + 1):
            combos = list(itertools.combinations(t.domain, m))
            picks = combos if len(combos) <= conf["per_size"] else rng.sample(combos, conf["per_size"])
            for Aset in picks:
                r = verify_bound(A, t, Aset, x=pf.x, y=pf.y)
                ok &= r.passed
                rows.append([tid, r.size_A, r.observed, sci(r.bound), str(r.passed).lower()])
    return (PASS if ok else FAIL), _csv(rows) + f"# states {A.nstates}\n"


def cmd_transduce(conf):
    try:
        I = loads_transduction(_read(conf["spec"]))
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed transduction file: {exc}") from exc
    s = _structure(conf["input"])
    budget = conf["valuation_budget"]
    if not isinstance(I, NondetTransduction):
        return PASS, dumps_structure(apply(I, s, budget=budget))
    if conf["valuation"] and not conf["enumerate"]:
        val = _valuation(s, _json_arg(conf["valuation"]))
        (img,) = apply_nondet(I, s, val, budget=budget)
        return PASS, dumps_structure(img)
    texts = sorted(dumps_structure(img) for img in apply_nondet(I, s, budget=min(budget, conf["subset_cap"])))
    return PASS, json.dumps({"images": len(texts)}) + "\n" + "".join(texts)


def _kexpr(conf):
    return parse_kexpression(_text(conf["expr"]), conf["k"])


def cmd_cw_eval(conf):
    e = _kexpr(conf)
    g = e.eval()
    tree = to_parse_tree(e)
    meta = {"k": e.k, "leaves": e.leaves(), "edges": len(g.edges), "parse_tree_nodes": len(tree.domain)}
    return PASS, json.dumps(meta, sort_keys=True) + "\n" + dumps_structure(g.structure())


def _system_rows(F) -> str:
    rows = [["set", "size", "members"]]
    for i, m in enumerate(sorted(F.family, key=lambda m: (len(m), sorted(map(repr, m))))):
        rows.append([i, len(m), _render_member(m)])
    return _csv(rows)


def _compare(conf, F, brute) -> tuple[int, str]:
    same = F == brute
    return (PASS if same else FAIL), f"# brute force {'agrees' if same else 'DISAGREES'}\n"


def cmd_cw_setsystem(conf):
    pf = _partitioned(conf)
    e = _kexpr(conf)
    F = check_on_cliquewidth(pf, e, budget=conf["valuation_budget"])
    body = _system_rows(F)
    code = PASS
    if conf["verify"]:
        s = e.eval().structure()
        code, note = _compare(conf, F, define_set_system(s, pf, elements=list(e.vertices()), reach="direct"))
        body += note
    return code, body


def cmd_tw_setsystem(conf):
    pf = _partitioned(conf)
    g = graph_from_structure(_structure(conf["graph"]))
    cert = bind_vertices(parse_kexpression(_text(conf["cert"])), incidence_graph(g).vertices)
    F = check_on_treewidth(pf, g, cert, budget=conf["valuation_budget"])
    body = _system_rows(F)
    code = PASS
    if conf["verify"]:
        s = incidence_graph(g).structure()
        code, note = _compare(conf, F, define_set_system(s, pf, elements=list(g.vertices), reach="direct"))
        body += note
    return code, body


def cmd_grid_demo(conf):
    r = verify_shattering(conf["n"], conf["mode"])
    if conf["csv"]:
        Path(conf["csv"]).write_text(header(conf) + r.to_csv())
    code = PASS if r.verdict else FAIL
    return code, json.dumps(r.summary(), sort_keys=True) + "\n" + r.to_csv()


COMMANDS = {
    "compile": cmd_compile, "check": cmd_check, "setsystem": cmd_setsystem, "vcdim": cmd_vcdim,
    "growth": cmd_growth, "bound-verify": cmd_bound_verify, "transduce": cmd_transduce,
    "cw-eval": cmd_cw_eval, "cw-setsystem": cmd_cw_setsystem, "tw-setsystem": cmd_tw_setsystem,
    "grid-demo": cmd_grid_demo,
}


def run(conf: dict) -> tuple[int, str]:
    """Execute a resolved config; returns the exit code and the artifact text."""
    saved = au.STATE_CAP
    au.STATE_CAP = conf["state_cap"]
    try:
        code, body = COMMANDS[conf["command"]](conf)
    finally:
        au.STATE_CAP = saved
    return code, header(conf) + body


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        conf = resolve(argv)
    except SystemExit as exc:
        return ERROR if exc.code else PASS
    except MsovcError as exc:
        print(f"msovc: {exc}", file=sys.stderr)
        return ERROR
    try:
        code, text = run(conf)
    except (MsovcError, ValueError) as exc:
        print(f"msovc {conf['command']}: {exc}", file=sys.stderr)
        return ERROR
    if conf["out"]:
        Path(conf["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
