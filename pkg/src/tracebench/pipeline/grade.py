"""Grading front-end: benchmark records + attempt files in, reports out."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from ..checks import CheckSet, parse_check_set
from ..grading import (
    AttemptMatrix,
    CATEGORIES,
    GradeReport,
    category_histogram,
    grade_attempt,
    pass_metrics,
    premature_write_rate,
)
from ..schema import ToolSchema
from ..trace import Attempt, read_attempts


class GradeError(Exception):
    pass


@dataclass
class BenchmarkCase:
    case_id: str
    prompt: str
    checks: CheckSet
    init: dict
    world_model_ref: str = ""

    @staticmethod
    def from_record(record: dict, schema: ToolSchema) -> "BenchmarkCase":
        return BenchmarkCase(
            case_id=record["case_id"],
            prompt=record.get("prompt", ""),
            checks=parse_check_set("\n".join(record["checks"]), schema),
            init=record.get("init", {}),
            world_model_ref=record.get("world_model_ref", ""),
        )


def load_benchmark(path: str | Path, schema: ToolSchema) -> dict[str, BenchmarkCase]:
    cases: dict[str, BenchmarkCase] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        case = BenchmarkCase.from_record(record, schema)
        if case.case_id in cases:
            raise GradeError(f"duplicate case id {case.case_id!r}")
        cases[case.case_id] = case
    return cases


def _fraction(f: Fraction) -> dict:
    return {"num": f.numerator, "den": f.denominator, "value": float(f)}


def grade_run(
    cases: dict[str, BenchmarkCase],
    attempts: list[Attempt],
    schema: ToolSchema,
    k: int | None = None,
) -> dict:
    """Per-attempt grade reports, the per-case attempt matrix, aggregate pass
    metrics, the failure-category histogram, and premature-write rates."""
    by_case: dict[str, list[Attempt]] = {}
    for attempt in attempts:
        if attempt.case_id not in cases:
            raise GradeError(f"unknown case id {attempt.case_id!r}")
        by_case.setdefault(attempt.case_id, []).append(attempt)
    if not by_case:
        raise GradeError("no attempts to grade")

    reports: dict[str, list[GradeReport]] = {}
    attempt_rows: list[dict] = []
    crashes = 0
    for case_id, case_attempts in sorted(by_case.items()):
        case = cases[case_id]
        case_reports = []
        for idx, attempt in enumerate(case_attempts):
            report = grade_attempt(case.checks, attempt, schema)
            case_reports.append(report)
            crashes += int(report.crashed)
            attempt_rows.append(
                {
                    "case_id": case_id,
                    "attempt": idx,
                    "passed": report.passed,
                    "crashed": report.crashed,
                    "premature_write": report.premature_write,
                    "trace_length": report.trace_length,
                    "verdicts": [
                        {
                            "check_id": v.check_id,
                            "passed": v.passed,
                            "category": v.category,
                            "witness_indices": list(v.witness_indices),
                        }
                        for v in report.verdicts
                    ],
                }
            )
        reports[case_id] = case_reports

    counts = {len(r) for r in reports.values()}
    uniform_n = counts.pop() if len(counts) == 1 else None
    metrics: dict = {}
    if uniform_n:
        matrix = AttemptMatrix.from_dict(
            uniform_n, {cid: sum(1 for r in rs if r.passed) for cid, rs in reports.items()}
        )
        k_eff = min(k or uniform_n, uniform_n)
        p1, pk, phat = pass_metrics(matrix, k_eff)
        metrics = {
            "n_attempts": uniform_n,
            "k": k_eff,
            "pass_at_1": _fraction(p1),
            f"pass_at_{k_eff}": _fraction(pk),
            f"pass_hat_{k_eff}": _fraction(phat),
        }

    all_reports = [r for rs in reports.values() for r in rs]
    histogram = category_histogram(all_reports)
    graded_traces = [
        a.trace for a in attempts if not a.crashed
    ]
    premature = premature_write_rate(graded_traces, schema)
    return {
        "cases": {cid: {"attempts": len(rs), "passed": sum(1 for r in rs if r.passed)} for cid, rs in reports.items()},
        "attempts": attempt_rows,
        "metrics": metrics,
        "failure_categories": histogram,
        "premature_write_rate": _fraction(premature),
        "crash_count": crashes,
    }


def _check_table(report: dict) -> dict[tuple[str, str], list[int]]:
    """(case, check) -> [passes, fails] across attempts."""
    table: dict[tuple[str, str], list[int]] = {}
    for row in report["attempts"]:
        for v in row["verdicts"]:
            cell = table.setdefault((row["case_id"], v["check_id"]), [0, 0])
            cell[0 if v["passed"] else 1] += 1
    return table


def format_report(report: dict) -> str:
    lines = []
    lines.append(f"{'case':30s} {'attempts':>8s} {'passed':>7s}")
    for cid, row in sorted(report["cases"].items()):
        lines.append(f"{cid:30s} {row['attempts']:8d} {row['passed']:7d}")
    lines.append("")
    lines.append(f"{'case / check':45s} {'pass':>5s} {'fail':>5s}")
    for (cid, check_id), (ok, bad) in sorted(_check_table(report).items()):
        lines.append(f"{cid + ' / ' + check_id:45s} {ok:5d} {bad:5d}")
    if report["metrics"]:
        m = report["metrics"]
        lines.append("")
        lines.append(f"pass@1 = {m['pass_at_1']['num']}/{m['pass_at_1']['den']} ({m['pass_at_1']['value']:.4f})")
        k = m["k"]
        pk = m[f"pass_at_{k}"]
        ph = m[f"pass_hat_{k}"]
        lines.append(f"pass@{k} = {pk['num']}/{pk['den']} ({pk['value']:.4f})")
        lines.append(f"pass^{k} = {ph['num']}/{ph['den']} ({ph['value']:.4f})")
    lines.append("")
    lines.append("failure categories:")
    for cat in CATEGORIES:
        lines.append(f"  {cat:24s} {report['failure_categories'][cat]:6d}")
    pw = report["premature_write_rate"]
    lines.append(f"premature-write rate = {pw['num']}/{pw['den']} ({pw['value']:.4f})")
    lines.append(f"crashed attempts = {report['crash_count']}")
    return "\n".join(lines) + "\n"


def grade_files(benchmark_path, traces_path, schema_path, out_dir, k=None) -> dict:
    schema = ToolSchema.load(schema_path)
    cases = load_benchmark(benchmark_path, schema)
    attempts = read_attempts(traces_path)
    report = grade_run(cases, attempts, schema, k)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text(format_report(report), encoding="utf-8")
    return report
