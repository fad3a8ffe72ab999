import json
import logging
import os
import sys
from typing import Any, Dict, List, Optional, TextIO

import pandas as pd

from ..utils.serialization import to_jsonable

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def check_entry(name: str, residual: float, tolerance: float, **extra: Any) -> Dict[str, Any]:
    """One line of a report: residual against tolerance"""
    entry = {"name": name, "residual": float(residual), "tolerance": float(tolerance),
             "passed": bool(residual <= tolerance)}
    entry.update(extra)
    return entry


def control_entry(name: str, residual: float, threshold: float, **extra: Any) -> Dict[str, Any]:
    """A negative control: passes when the residual rises above the threshold"""
    entry = {"name": name, "residual": float(residual), "tolerance": float(threshold),
             "passed": bool(residual > threshold), "control": True}
    entry.update(extra)
    return entry


class ReportWriter:
    """Writes JSON reports and CSV tables for the command-line runs"""

    def __init__(self, output: Optional[str] = None, indent: int = 2):
        self.output = output
        self.indent = indent

    def render(self, report: Dict[str, Any]) -> str:
        """Deterministic JSON text: sorted keys, complex numbers as [re, im]"""
        return json.dumps(to_jsonable(report), indent=self.indent, sort_keys=True,
                          ensure_ascii=False, default=str)

    def write_report(self, report: Dict[str, Any], output: Optional[str] = None) -> Optional[str]:
        """Write to `output` (or the writer's default) or stdout; returns the path written"""
        target = output or self.output
        text = self.render(report) + "\n"
        if not target or target == "-":
            sys.stdout.write(text)
            sys.stdout.flush()
            return None
        self._ensure_parent(target)
        with open(target, 'w', encoding='utf-8') as f:
            f.write(text)
        logger.info(f"Report written to: {target}")
        return target

    def write_csv(self, frame: pd.DataFrame, output: Optional[str] = None) -> Optional[str]:
        target = output or self.output
        if not target or target == "-":
            frame.to_csv(sys.stdout, index=False, float_format=CSV_FLOAT_FORMAT)
            sys.stdout.flush()
            return None
        self._ensure_parent(target)
        frame.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT)
        logger.info(f"Table written to: {target}")
        return target

    @staticmethod
    def _ensure_parent(path: str) -> None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)


def checks_frame(checks: List[Dict[str, Any]]) -> pd.DataFrame:
    """Tabular view of the check entries of a report"""
    if not checks:
        return pd.DataFrame(columns=["name", "residual", "tolerance", "passed"])
    frame = pd.DataFrame(checks)
    columns = ["name", "residual", "tolerance", "passed"]
    return frame[columns + [c for c in frame.columns if c not in columns]]


def print_summary(report: Dict[str, Any], stream: Optional[TextIO] = None) -> None:
    """Human-readable digest of a report"""
    stream = stream or sys.stderr
    if "error" in report:
        print(f"❌ {report['error']}: {report.get('message', '')}", file=stream)
        return

    print(f"=== ribbon-poisson {report.get('command', '')} ===", file=stream)
    checks = report.get("checks", [])
    if checks:
        frame = checks_frame(checks)
        print(f"\n📊 Checks: {int(frame['passed'].sum())}/{len(frame)} passed", file=stream)
        for _, row in frame.iterrows():
            mark = "✅" if row["passed"] else "❌"
            bound = "above" if row.get("control") == True else "tol"  # noqa: E712
            print(f"  {mark} {row['name']}: {row['residual']:.3e} ({bound} {row['tolerance']:.1e})", file=stream)
        regular = frame[~frame["control"].fillna(False).astype(bool)] if "control" in frame.columns else frame
        if len(regular):
            worst = regular.loc[regular["residual"].idxmax()]
            print(f"\n📈 Largest residual: {worst['residual']:.3e} in {worst['name']}", file=stream)

    replay = report.get("replay")
    if replay:
        print(f"\n🔁 Replay with --seed {replay['seed']} --sample-index {replay['sample_index']}", file=stream)
