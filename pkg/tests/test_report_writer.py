import io
import json

import pandas as pd

from src.core.report_writer import ReportWriter, check_entry, checks_frame, control_entry, print_summary


class TestCheckEntry:
    def test_pass_and_fail(self):
        assert check_entry("jacobi", 1e-10, 1e-8)["passed"] is True
        failing = check_entry("jacobi", 1e-6, 1e-8, worst_sample=3)
        assert failing["passed"] is False
        assert failing["worst_sample"] == 3

    def test_control_passes_above_threshold(self):
        assert control_entry("jacobi negative-control", 0.15, 1e-3)["passed"] is True
        quiet = control_entry("jacobi negative-control", 1e-15, 1e-3)
        assert quiet["passed"] is False
        assert quiet["control"] is True


class TestReportWriter:
    def test_render_is_deterministic(self):
        writer = ReportWriter()
        text = writer.render({"b": 1j, "a": [0.5]})
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [0.5], "b": [0.0, 1.0]}

    def test_stdout(self, capsys):
        assert ReportWriter().write_report({"passed": True}) is None
        assert json.loads(capsys.readouterr().out) == {"passed": True}

    def test_file(self, tmp_path):
        target = tmp_path / "reports" / "run.json"
        assert ReportWriter(str(target)).write_report({"passed": False}) == str(target)
        assert json.loads(target.read_text(encoding="utf-8")) == {"passed": False}

    def test_csv(self, tmp_path):
        target = tmp_path / "flow.csv"
        ReportWriter(str(target)).write_csv(pd.DataFrame({"step": [0, 1], "x": [0.1, 1 / 3]}))
        frame = pd.read_csv(target)
        assert list(frame.columns) == ["step", "x"]
        assert frame["x"][1] == 1 / 3


class TestSummary:
    def test_checks_frame_orders_columns(self):
        frame = checks_frame([check_entry("a", 1.0, 2.0, k=2)])
        assert list(frame.columns) == ["name", "residual", "tolerance", "passed", "k"]
        assert checks_frame([]).empty

    def test_summary_lists_checks_and_replay(self):
        report = {"command": "verify", "checks": [check_entry("jacobi torus", 1e-6, 1e-8, worst_sample=4)],
                  "replay": {"seed": 9, "check": "jacobi torus", "sample_index": 4}}
        stream = io.StringIO()
        print_summary(report, stream)
        text = stream.getvalue()
        assert "0/1 passed" in text
        assert "❌ jacobi torus" in text
        assert "--seed 9 --sample-index 4" in text

    def test_summary_keeps_controls_out_of_largest_residual(self):
        report = {"command": "verify", "checks": [check_entry("jacobi double", 1e-14, 1e-8),
                                                  control_entry("jacobi negative-control double", 0.2, 1e-3)]}
        stream = io.StringIO()
        print_summary(report, stream)
        text = stream.getvalue()
        assert "2/2 passed" in text
        assert "(above 1.0e-03)" in text
        assert "Largest residual: 1.000e-14 in jacobi double" in text

    def test_summary_of_error(self):
        stream = io.StringIO()
        print_summary({"error": "move", "message": "bad"}, stream)
        assert stream.getvalue().startswith("❌ move: bad")
