import json

import pytest

from msovc import __version__
from msovc.cli import main
from msovc.corpus import K3_TEXT
from msovc.structures import Graph, dumps_structure, make_grid, random_tree
from msovc.transduce import dumps_transduction, minor_transduction
from msovc.width import forest_certificate


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def header_of(text):
    return json.loads(text.splitlines()[0])


@pytest.fixture
def files(tmp_path, rng):
    p4 = Graph.from_edges(range(4), [(0, 1), (1, 2), (2, 3)])
    (tmp_path / "p4.json").write_text(dumps_structure(p4.structure()))
    (tmp_path / "grid.json").write_text(dumps_structure(make_grid(3)))
    (tmp_path / "p4cert.txt").write_text(forest_certificate(p4).to_text())
    (tmp_path / "k3.txt").write_text(K3_TEXT)
    (tmp_path / "minor.json").write_text(dumps_transduction(minor_transduction()))
    from msovc.structures import incidence_graph
    (tmp_path / "p3inc.json").write_text(dumps_structure(
        incidence_graph(Graph.from_edges([0, 1, 2], [(0, 1), (1, 2)])).structure()))
    trees = tmp_path / "trees"
    trees.mkdir()
    for i in range(4):
        (trees / f"t{i}.json").write_text(dumps_structure(random_tree(rng.randint(1, 8), ["a", "b"], rng)))
    return tmp_path


def test_compile_dump(capsys):
    code, out, _ = run(capsys, "compile", "--formula", "(left x y)", "--dump", "--seed", "3")
    assert code == 0
    head = header_of(out)
    assert head["version"] == __version__ and head["seed"] == 3 and head["command"] == "compile"
    assert set(head["budgets"]) == {"valuation_budget", "state_cap", "subset_cap"}
    lines = out.splitlines()
    assert lines[1] == "states 4" and lines[2] == "alphabet 2"
    assert any(l.startswith("(_, _, a:00) -> ") for l in lines)


def test_compile_verify_and_lazy(capsys):
    code, out, _ = run(capsys, "compile", "--formula", "(exists z (left z x))", "--verify", "4")
    assert code == 0 and "mismatches 0" in out
    f = "(existsS X (and (in x X) (forall y (implies (in y X) (label_b y)))))"
    code, out, _ = run(capsys, "compile", "--formula", f, "--table-cap", "10")
    assert code == 0 and "states lazy" in out
    code, _, err = run(capsys, "compile", "--formula", f, "--table-cap", "10", "--dump")
    assert code == 2 and "on demand" in err


def test_error_exit_codes(capsys, tmp_path):
    assert run(capsys, "compile", "--formula", "(left x")[0] == 2
    assert run(capsys, "compile")[0] == 2
    assert run(capsys, "compile", "--formula", "(left x y)", "--state-cap", "2")[0] == 2
    assert run(capsys, "compile", "--formula", "(left x y)", "--state-cap", "0")[0] == 2
    assert run(capsys, "check", "--formula", "true", "--structure", str(tmp_path / "missing.json"))[0] == 2
    assert run(capsys, "grid-demo", "--n", "8", "--mode", "brute")[0] == 2
    assert run(capsys, "nonsense")[0] == 2


def test_check_expectations(capsys, files):
    grid = str(files / "grid.json")
    code, out, _ = run(capsys, "check", "--structure", grid, "--formula", "(exists z (H x z))",
                       "--valuation", '{"x": [1, 1]}', "--expect", "true")
    assert code == 0 and json.loads(out.splitlines()[1]) == {"result": True}
    code, _, _ = run(capsys, "check", "--structure", grid, "--formula", "(exists z (H x z))",
                     "--valuation", '{"x": [3, 1]}', "--expect", "true")
    assert code == 1
    assert run(capsys, "check", "--structure", grid, "--formula", "(H x y)", "--valuation", '{"x": [9, 9]}')[0] == 2


def test_config_file_and_precedence(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"formula": "(label_a x)", "seed": 11}))
    code, out, _ = run(capsys, "compile", "--config", str(cfg), "--formula", "(label_b x)")
    head = header_of(out)
    assert code == 0 and head["seed"] == 11 and head["config"]["formula"] == "(label_b x)"
    cfg.write_text(json.dumps({"formula": "(label_a x)", "colour": 3}))
    assert run(capsys, "compile", "--config", str(cfg))[0] == 2


def test_setsystem_vcdim_growth(capsys, files):
    p4 = str(files / "p4.json")
    code, out, _ = run(capsys, "setsystem", "--structure", p4, "--formula", "(or (= x y) (E x y))")
    assert code == 0 and out.splitlines()[1] == "parameter,size,members" and "# distinct 4" in out
    code, out, _ = run(capsys, "vcdim", "--structure", p4, "--formula", "(or (= x y) (E x y))")
    assert code == 0 and json.loads(out.splitlines()[1])["vc_dimension"] == 1
    code, out, _ = run(capsys, "growth", "--structure", p4, "--formula", "(E x y)")
    assert code == 0 and out.splitlines()[1] == "n,pi,mode,sauer_shelah,pass"
    assert all(l.endswith("true") for l in out.splitlines()[2:-1])


def test_bound_verify(capsys, files):
    code, out, _ = run(capsys, "bound-verify", "--formula", "(reach y x a b (or (left a b) (right a b)))",
                       "--trees", str(files / "trees"), "--max-A", "3")
    rows = out.splitlines()
    assert code == 0 and rows[1] == "tree-id,|A|,observed,bound,pass"
    assert len(rows) > 3 and all(r.endswith(",true") for r in rows[2:-1])


def test_bound_verify_is_reproducible(capsys, tmp_path):
    a = run(capsys, "bound-verify", "--formula", "(left y x)", "--count", "4", "--seed", "9")[1]
    b = run(capsys, "bound-verify", "--formula", "(left y x)", "--count", "4", "--seed", "9")[1]
    c = run(capsys, "bound-verify", "--formula", "(left y x)", "--count", "4", "--seed", "10")[1]
    assert a == b and a != c


def test_transduce(capsys, files):
    spec, inp = str(files / "minor.json"), str(files / "p3inc.json")
    val = files / "v.json"
    val.write_text(json.dumps({"D": [0, 1, 2], "F": [], "L": ["0~1", "1~2"]}))
    code, out, _ = run(capsys, "transduce", "--spec", spec, "--input", inp, "--valuation", "@" + str(val))
    img = json.loads("\n".join(out.splitlines()[1:]))
    assert code == 0 and len(img["relations"]["E"]) == 4
    code, out, _ = run(capsys, "transduce", "--spec", spec, "--input", inp, "--enumerate")
    assert code == 0 and json.loads(out.splitlines()[1])["images"] > 1
    assert out == run(capsys, "transduce", "--spec", spec, "--input", inp, "--enumerate")[1]


def test_width_commands(capsys, files):
    code, out, _ = run(capsys, "cw-eval", "--expr", "@" + str(files / "k3.txt"))
    assert code == 0 and json.loads(out.splitlines()[1]) == {"edges": 3, "k": 2, "leaves": 3, "parse_tree_nodes": 8}
    code, out, _ = run(capsys, "cw-setsystem", "--expr", "@" + str(files / "k3.txt"), "--formula", "(E x y)",
                       "--verify")
    assert code == 0 and "agrees" in out and len(out.splitlines()) == 2 + 3 + 1
    code, out, _ = run(capsys, "tw-setsystem", "--graph", str(files / "p4.json"),
                       "--cert", "@" + str(files / "p4cert.txt"),
                       "--formula", "(exists e (and (inc e x) (inc e y)))", "--verify")
    assert code == 0 and "agrees" in out
    assert run(capsys, "cw-eval", "--expr", "(intro a 0)")[0] == 2


def test_grid_demo(capsys, tmp_path):
    out_csv = tmp_path / "g.csv"
    code, out, _ = run(capsys, "grid-demo", "--n", "4", "--csv", str(out_csv))
    assert code == 0
    summary = json.loads(out.splitlines()[1])
    assert summary["verdict"] is True and summary["size"] == 2
    lines = out_csv.read_text().splitlines()
    assert header_of(lines[0])["command"] == "grid-demo" and lines[1] == "subset,witness" and len(lines) == 6


def test_out_file(capsys, tmp_path):
    target = tmp_path / "o.txt"
    code, out, _ = run(capsys, "grid-demo", "--n", "2", "--out", str(target))
    assert code == 0 and out == "" and header_of(target.read_text())["config"]["n"] == 2
