import json
import subprocess
import sys

import pytest

from shearlab.cli import SCHEMA, main
from shearlab.oracle import Diagram, TheoryDescriptor, pos
from shearlab.relations import InvariantRelation, pair_code
from shearlab.shearing import Formula, Labeling, ShearingInstance, build_demo_instance
from shearlab.structures import dense_order


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def report(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


@pytest.mark.parametrize(
    "argv",
    [
        ["demo", "t32"],
        ["demo", "tnk", "--n", "4", "--k", "2"],
        ["demo", "tn1", "--n", "2", "--m", "4"],
        ["demo", "rg-linear"],
        ["chain", "--n", "3", "--k", "2", "--steps", "3"],
        ["search-circle", "--class", "orders", "--bounds", "2,2,8"],
        ["eq", "--class", "orders", "--bounds", "2,2,8"],
        ["eq", "--class", "predicates", "--bounds", "2,1,8"],
        ["oracle", "--seed", "3", "--samples", "50"],
    ],
)
def test_expected_verdicts_exit_zero(capsys, argv):
    code, rep = report(capsys, *argv)
    assert code == 0
    assert rep["schema"] == SCHEMA and rep["ok"] is True


def test_t32_demo_report_names_the_clique(capsys):
    _, rep = report(capsys, "demo", "t32")
    body = rep["report"]
    assert body["valid"] and body["witness_reasons"][0]["reason"] == "forbidden-clique"
    assert sorted(body["witness_reasons"][0]["witness"]) == ["a3", "a4", "a5", "x"]


def test_tn1_demo_reports_pairwise_inconsistency(capsys):
    _, rep = report(capsys, "demo", "tn1", "--n", "2", "--m", "4")
    assert rep["two_inconsistent"] is True and rep["consistent_pairs"] == []


def test_wrong_expectation_exits_one(capsys):
    code, rep = report(capsys, "search-circle", "--class", "orders", "--bounds", "2,0,6", "--expect", "none")
    assert code == 1 and rep["ok"] is False


def test_reports_are_deterministic(capsys):
    for argv in (["demo", "tnk", "--n", "4", "--k", "3"], ["oracle", "--seed", "5", "--samples", "30"]):
        first = run(capsys, *argv)[1]
        second = run(capsys, *argv)[1]
        assert first == second


def test_text_format(capsys):
    code, out, _ = run(capsys, "demo", "rg-linear", "--format", "text")
    assert code == 0 and "ok: true" in out


def test_output_file(capsys, tmp_path):
    path = tmp_path / "rep.json"
    code, out, _ = run(capsys, "demo", "t32", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["ok"] is True


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_verify_round_trips_a_demo_instance(capsys, tmp_path):
    inst, _ = build_demo_instance("t32")
    code, rep = report(capsys, "verify", "--in", _write(tmp_path, "t32.json", inst.to_dict()))
    assert code == 0 and rep["report"]["valid"]


def test_verify_flags_an_incoherent_labeling(capsys, tmp_path):
    J = dense_order(range(4))
    refl = lambda i: InvariantRelation.from_equalities(2, 2, 0, [(i, i)])
    one = InvariantRelation(2, 2, 0, frozenset({pair_code(J, (0, 1), (1, 2), ())}))
    lab = Labeling.collision(2, {(0, 0): refl(0), (1, 1): refl(1), (0, 1): one})
    inst = ShearingInstance(J, (), (0, 1), TheoryDescriptor.random_graph(), lab, Formula.make(positive=[(0,)], negative=[(1,)]))
    code, rep = report(capsys, "verify", "--in", _write(tmp_path, "bad.json", inst.to_dict()))
    assert code == 1 and rep["coherent"] is False
    assert {v["kind"] for v in rep["violations"]} == {"symmetry"}


def test_oracle_file_mode(capsys, tmp_path):
    d = Diagram.make(TheoryDescriptor.tnk(3, 2), ["p", "q", "r"], [("p", "q", "r")], ["x"],
                     [pos("x", "p", "q"), pos("x", "p", "r"), pos("x", "q", "r")])
    path = _write(tmp_path, "d.json", {"diagram": d.to_dict(), "expected_consistent": False})
    code, rep = report(capsys, "oracle", "--in", path)
    assert code == 0 and rep["verdict"]["reason"] == "forbidden-clique" and rep["model_agrees"]


@pytest.mark.parametrize(
    "argv",
    [
        ["verify"],
        ["verify", "--in", "/nonexistent/file.json"],
        ["demo", "nonsense"],
        ["demo", "tnk", "--n", "2", "--k", "2"],
        ["chain", "--steps", "0"],
        ["frobnicate"],
        ["search-circle", "--bounds", "1,2"],
        ["demo", "t32", "--budget", "0"],
    ],
)
def test_input_errors_exit_two(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == ""


def test_malformed_files_exit_two(capsys, tmp_path):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text("{not json")
    assert run(capsys, "verify", "--in", str(bad_json))[0] == 2
    assert run(capsys, "verify", "--in", _write(tmp_path, "empty.json", {}))[0] == 2
    assert run(capsys, "oracle", "--in", _write(tmp_path, "d.json", {"theory": {}}))[0] == 2


def test_budget_from_environment(capsys, monkeypatch):
    monkeypatch.setenv("SHEARLAB_BUDGET", "0")
    assert run(capsys, "demo", "t32")[0] == 2
    monkeypatch.setenv("SHEARLAB_BUDGET", "abc")
    assert run(capsys, "demo", "t32")[0] == 2
    monkeypatch.setenv("SHEARLAB_BUDGET", "12")
    assert run(capsys, "demo", "t32")[0] == 0
    # an explicit flag wins over the environment
    monkeypatch.setenv("SHEARLAB_BUDGET", "abc")
    assert run(capsys, "demo", "t32", "--budget", "12")[0] == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "shearlab", "demo", "t32"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"] is True
