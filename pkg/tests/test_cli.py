import json

import pytest

from scripts.ribbon_poisson import build_parser, main
from src.core.config_manager import SEED_ENV_VAR


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured


def report_of(captured):
    return json.loads(captured.out)


class TestGraphCommand:
    def test_surface_of_torus(self, capsys):
        code, captured = run(capsys, "graph", "surface", "--name", "torus_one_hole")
        assert code == 0
        assert report_of(captured) == {"command": "graph surface", "V": 1, "E": 2, "b": 1, "chi": -1, "genus": 1}

    def test_faces_of_loop(self, capsys):
        code, captured = run(capsys, "graph", "faces", "--name", "loop")
        faces = report_of(captured)["faces"]
        assert [f["has_cilium"] for f in faces] == [True, False]

    def test_gallery(self, capsys):
        code, captured = run(capsys, "graph", "gallery")
        assert code == 0
        assert report_of(captured)["count"] == 6

    def test_invalid_graph_file(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"ends": ["a"], "involution": {"a": "a"}, "vertices": [["a"]]}))
        code, captured = run(capsys, "graph", "validate", "--graph", str(path))
        assert code == 1
        assert report_of(captured)["violation"] == "fixed point"

    def test_move(self, capsys):
        code, captured = run(capsys, "graph", "move", "--name", "double", "--move", "erase:b")
        assert code == 0
        assert report_of(captured)["graph"]["vertices"] == [["a_v"], ["a"]]


class TestUsage:
    def test_no_subcommand(self, capsys):
        code, captured = run(capsys)
        assert code == 2
        assert report_of(captured)["error"] == "usage"

    def test_unknown_option(self, capsys):
        code, _ = run(capsys, "axioms", "--frobnicate")
        assert code == 2

    def test_k_below_two(self, capsys):
        code, captured = run(capsys, "axioms", "--k", "1")
        assert code == 2
        assert report_of(captured)["error"] == "usage"

    def test_k_range_only_for_axioms(self, capsys):
        code, _ = run(capsys, "verify", "--k", "2..3")
        assert code == 2

    def test_parser_accepts_hex_seed(self):
        args = build_parser().parse_args(["axioms", "--seed", "0x1f"])
        assert args.seed == 31


class TestAxioms:
    def test_range(self, capsys):
        code, captured = run(capsys, "axioms", "--k", "2..3")
        assert code == 0
        report = report_of(captured)
        assert report["passed"] is True
        assert len(report["checks"]) == 10

    def test_summary_on_stderr(self, capsys):
        code, captured = run(capsys, "axioms", "--k", "2", "--summary")
        assert code == 0
        assert "📊 Checks: 5/5 passed" in captured.err


class TestVerify:
    def test_oracle(self, capsys):
        code, captured = run(capsys, "verify", "--suite", "bivector-oracle", "--graph", "torus", "--samples", "2")
        assert code == 0
        assert report_of(captured)["checks"][0]["name"] == "bivector-oracle torus"

    def test_glue_needs_opposite_r_matrices(self, capsys):
        code, captured = run(capsys, "verify", "--suite", "move-poisson", "--assignment", "uniform",
                             "--samples", "1")
        assert code == 2
        assert report_of(captured)["error"] == "glue-precondition"

    def test_failed_check_exit_code(self, capsys):
        code, captured = run(capsys, "verify", "--suite", "poisson-action", "--graph", "torus",
                             "--samples", "2", "--tol", "1e-300")
        assert code == 1
        assert report_of(captured)["replay"]["seed"] == 0

    def test_seed_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv(SEED_ENV_VAR, "7")
        code, captured = run(capsys, "verify", "--suite", "bivector-oracle", "--graph", "loop", "--samples", "1")
        assert report_of(captured)["seed"] == 7

    def test_report_to_file(self, capsys, tmp_path):
        target = tmp_path / "out" / "verify.json"
        code, captured = run(capsys, "verify", "--suite", "ra-independence", "--graph", "loop", "--samples", "2",
                             "--out", str(target))
        assert code == 0
        assert captured.out == ""
        assert json.loads(target.read_text(encoding="utf-8"))["passed"] is True


class TestRuijsenaars:
    def test_leaf_spectrum(self, capsys):
        code, captured = run(capsys, "ruijsenaars", "leaf", "--k", "2", "--x", "3", "--lambda", "2,0.5",
                             "--q", "1,1")
        assert code == 0
        spectrum = report_of(captured)["leaves"][0]["report"]["spectrum"]
        assert sorted(round(re, 8) for re, _ in spectrum) == [round(1 / 3, 8), 3.0]

    def test_pole_is_a_precondition_error(self, capsys):
        code, captured = run(capsys, "ruijsenaars", "leaf", "--k", "2", "--x", "4", "--lambda", "2,0.5")
        assert code == 2
        report = report_of(captured)
        assert report["error"] == "leaf-precondition"
        assert report["pair"] == [0, 1]

    def test_leaf_file(self, capsys, tmp_path):
        path = tmp_path / "leaf.json"
        path.write_text(json.dumps({"k": 2, "x": 3, "lambda": [2, 0.5], "q": [1, 1]}))
        code, _ = run(capsys, "ruijsenaars", "detb", "--leaf", str(path))
        assert code == 0

    def test_missing_leaf_file(self, capsys, tmp_path):
        code, captured = run(capsys, "ruijsenaars", "leaf", "--leaf", str(tmp_path / "missing.json"))
        assert code == 2
        assert report_of(captured)["error"] == "io"

    def test_flow_csv_on_stdout(self, capsys):
        code, captured = run(capsys, "ruijsenaars", "flow", "--k", "2", "--steps", "3")
        assert code == 0
        lines = captured.out.strip().splitlines()
        assert lines[0].startswith("step,t1")
        assert len(lines) == 5

    def test_flow_csv_to_file(self, capsys, tmp_path):
        target = tmp_path / "flow.csv"
        code, captured = run(capsys, "ruijsenaars", "flow", "--k", "3", "--steps", "2", "--times", "0.1,0.2",
                             "--out", str(target))
        assert code == 0
        assert report_of(captured)["times"] == [[0.1, 0.0], [0.2, 0.0]]
        assert len(target.read_text(encoding="utf-8").strip().splitlines()) == 3
