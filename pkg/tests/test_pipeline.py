from __future__ import annotations

import hashlib
import json
import shutil
from pathlib import Path

import pytest

from tracebench.pipeline.config import ConfigError, load_config
from tracebench.pipeline.grade import grade_files
from tracebench.pipeline.runner import STAGE_ORDER, PipelineError, RunState, run_pipeline
from tracebench.trace import Attempt, ExecutionTrace, write_attempts

REPO = Path(__file__).resolve().parent.parent
CONFIG = REPO / "assets" / "procurement" / "config.yaml"
SCHEMA = REPO / "assets" / "procurement" / "tools.json"


def demo_config(tmp_path: Path, name: str = "run"):
    cfg = load_config(CONFIG)
    cfg.run_dir_base = str(tmp_path / name)
    return cfg


def run_demo(tmp_path: Path, name: str = "run", stop_after=None) -> tuple[Path, RunState]:
    cfg = demo_config(tmp_path, name)
    state = run_pipeline(cfg, stop_after=stop_after)
    return cfg.run_dir, state


def _export_bytes(run_dir: Path) -> bytes:
    return (run_dir / "export" / "benchmark.jsonl").read_bytes()


def _script_digest(run_dir: Path) -> str:
    h = hashlib.sha256()
    for path in sorted(run_dir.rglob("*.smt2")):
        h.update(path.relative_to(run_dir).as_posix().encode())
        h.update(path.read_bytes())
    return h.hexdigest()


def test_fresh_run_is_hermetic_and_deterministic(tmp_path):
    run_a, state_a = run_demo(tmp_path, "a")
    run_b, state_b = run_demo(tmp_path, "b")
    assert state_a.done == list(STAGE_ORDER)
    assert _export_bytes(run_a) == _export_bytes(run_b)
    assert _script_digest(run_a) == _script_digest(run_b)
    records = [json.loads(l) for l in _export_bytes(run_a).decode().splitlines()]
    ids = {r["case_id"] for r in records}
    assert ids == {"smp_000_s00", "smp_000_s01", "smp_001_s01"}
    assert all(r["status"] == "validated" for r in records)


def test_awaiting_scenario_excluded_from_export(tmp_path):
    run_dir, state = run_demo(tmp_path)
    statuses = json.loads((run_dir / "samples" / "smp_001" / "status.json").read_text())
    assert statuses["smp_001_s00"]["status"]["state"] == "awaiting_human"
    assert b"smp_001_s00" not in _export_bytes(run_dir)


def test_resume_after_kill_at_each_boundary(tmp_path):
    reference, _ = run_demo(tmp_path, "ref")
    expected = _export_bytes(reference)
    for stage in STAGE_ORDER[:-1]:
        name = f"kill_{stage}"
        cfg = demo_config(tmp_path, name)
        run_pipeline(cfg, stop_after=stage)  # simulate a kill right after the checkpoint
        state = RunState.load(cfg.run_dir)
        assert stage in state.done
        run_pipeline(cfg)  # fresh invocation resumes
        assert _export_bytes(cfg.run_dir) == expected, f"resume after {stage} diverged"


def test_resume_regenerates_nothing(tmp_path):
    from tracebench.genport import ReplayAdapter

    cfg = demo_config(tmp_path)
    run_pipeline(cfg, stop_after="checks")
    upstream = ("graph.json", "samples.json", "tools.json", "scenarios.json")
    mtimes = {
        p.relative_to(cfg.run_dir): p.stat().st_mtime_ns
        for p in cfg.run_dir.rglob("*")
        if p.is_file() and p.name in upstream or p.name.endswith(".checks.txt")
    }
    adapter = ReplayAdapter(cfg.resolve(cfg.llm.fixture_dir))
    run_pipeline(cfg, adapter=adapter)
    # generator stages already checkpointed are never re-invoked
    called_stages = {stage for stage, _ in adapter.calls}
    assert called_stages <= {"smt_schema_prepass", "smt_full_pass", "conflict_resolution", "fix_repair", "locus_reassessment"}
    for rel, stamp in mtimes.items():
        if rel.name.endswith(".checks.txt"):
            continue  # validation-owned: repairs rewrite these downstream
        assert (cfg.run_dir / rel).stat().st_mtime_ns == stamp, f"{rel} was regenerated"


def test_fixture_gap_gives_up_per_scenario(tmp_path):
    # remove the check_generation fixture for one scenario; the others proceed
    fixtures = tmp_path / "fixtures"
    shutil.copytree(REPO / "assets" / "fixtures" / "procurement", fixtures)
    removed = None
    for path in fixtures.glob("*.json"):
        record = json.loads(path.read_text())
        if record["stage"] == "check_generation" and "UltraView" in json.dumps(record["request"]):
            removed = path
            path.unlink()
    assert removed is not None
    cfg = demo_config(tmp_path)
    cfg.llm.fixture_dir = str(fixtures)
    state = run_pipeline(cfg)
    assert "smp_000_s00" in state.failed_scenarios
    # The sibling scenario shares the sample's world model, so its judge
    # fixtures no longer match and it degrades to the review queue; the other
    # sample is untouched and still exports.
    statuses = json.loads((cfg.run_dir / "samples" / "smp_000" / "status.json").read_text())
    assert statuses["smp_000_s01"]["status"]["state"] == "awaiting_human"
    records = [json.loads(l) for l in _export_bytes(cfg.run_dir).decode().splitlines()]
    assert {r["case_id"] for r in records} == {"smp_001_s01"}


def test_tool_relevance_for_standard_fulfillment_region():
    """A sample holding only the standard-fulfillment text retains exactly
    the inventory-check, picker-assignment, and purchase-order tools."""
    import sys

    sys.path.insert(0, str(REPO / "scripts"))
    from record_fixtures import relevant_tools

    text = (REPO / "assets" / "procurement" / "manual.md").read_text(encoding="utf-8")
    section = text.split("## Standard fulfillment")[1].split("## Lab procurement")[0]
    assert relevant_tools("## Standard fulfillment" + section) == [
        "check_inventory",
        "assign_warehouse_picker",
        "create_purchase_order",
    ]


def test_run_lock_excludes_second_owner(tmp_path):
    from tracebench.pipeline.runner import acquire_run_lock

    cfg = demo_config(tmp_path)
    cfg.run_dir.mkdir(parents=True)
    lock = acquire_run_lock(cfg.run_dir)
    try:
        with pytest.raises(PipelineError) as exc:
            run_pipeline(cfg)
        assert exc.value.stage == "lock"
    finally:
        lock.unlink()


def test_config_errors():
    with pytest.raises(ConfigError):
        load_config(REPO / "does-not-exist.yaml")
    cfg = load_config(CONFIG)
    assert cfg.validation.trace_bound == 4  # z3_trace_bound alias
    assert cfg.sampling.scenarios_per_sample == 2
    assert cfg.llm.retry.max_repair_attempts == 5


def test_env_interpolation(monkeypatch, tmp_path):
    text = CONFIG.read_text()
    monkeypatch.setenv("TRACEBENCH_ADAPTER", "replay")
    cfg = load_config(CONFIG)
    assert cfg.llm.adapter == "replay"
    from tracebench.pipeline.config import interpolate_env

    assert interpolate_env("${HOME_X:-fallback}", {}) == "fallback"
    assert interpolate_env("${A:-x}/${B:-y}", {"A": "1"}) == "1/y"


# ---------------------------------------------------------------------------
# Grading CLI path


COMPLIANT_S00 = [
    ("check_inventory", {"item_name": "UltraView QHD"}),
    ("assign_warehouse_picker", {"item_id": "HW-1", "quantity": 1}),
]


def _trace_file(tmp_path: Path, attempts) -> Path:
    path = tmp_path / "attempts.jsonl"
    write_attempts(path, attempts)
    return path


def _graded(tmp_path, attempts, k=None):
    run_dir, _ = run_demo(tmp_path)
    out = tmp_path / "reports"
    return grade_files(run_dir / "export" / "benchmark.jsonl", _trace_file(tmp_path, attempts), SCHEMA, out, k), out


def test_grade_single_passing_attempt(tmp_path):
    report, out = _graded(tmp_path, [Attempt("smp_000_s00", ExecutionTrace.of(*COMPLIANT_S00))])
    assert report["metrics"]["pass_at_1"]["value"] == 1.0
    assert (out / "report.json").exists() and (out / "report.txt").exists()


def test_grade_pass_and_forbidden_fail(tmp_path):
    bad = COMPLIANT_S00 + [("create_purchase_order", {"item_id": "HW-1", "quantity": 1})]
    report, _ = _graded(
        tmp_path,
        [
            Attempt("smp_000_s00", ExecutionTrace.of(*COMPLIANT_S00)),
            Attempt("smp_000_s00", ExecutionTrace.of(*bad)),
        ],
    )
    assert report["cases"]["smp_000_s00"] == {"attempts": 2, "passed": 1}
    assert report["failure_categories"]["forbidden_call"] == 1


def test_grade_metrics_spot_value(tmp_path):
    attempts = [
        Attempt("smp_000_s00", ExecutionTrace.of(*COMPLIANT_S00)) if i < 3 else Attempt("smp_000_s00", ExecutionTrace())
        for i in range(5)
    ]
    report, _ = _graded(tmp_path, attempts, k=2)
    assert report["metrics"]["pass_at_2"] == {"num": 9, "den": 10, "value": 0.9}
    assert report["metrics"]["pass_hat_2"] == {"num": 3, "den": 10, "value": 0.3}


def test_grade_unknown_case(tmp_path):
    from tracebench.pipeline.grade import GradeError

    with pytest.raises(GradeError):
        _graded(tmp_path, [Attempt("ghost_case", ExecutionTrace())])


def test_grade_crashed_attempts_excluded_from_premature(tmp_path):
    report, _ = _graded(
        tmp_path,
        [
            Attempt("smp_000_s00", None),
            Attempt("smp_000_s00", ExecutionTrace.of(("assign_warehouse_picker", {"item_id": "x", "quantity": 1}))),
        ],
    )
    assert report["crash_count"] == 1
    assert report["premature_write_rate"] == {"num": 1, "den": 1, "value": 1.0}


# ---------------------------------------------------------------------------
# CLI surface


def test_cli_generate_grade_export(tmp_path, capsys):
    from tracebench.pipeline.cli import main

    rc = main(
        ["generate", "--config", str(CONFIG), "--run-dir-base", str(tmp_path / "cli_run")]
    )
    assert rc == 0
    run_dir = tmp_path / "cli_run" / "procurement"
    assert (run_dir / "export" / "benchmark.jsonl").exists()

    traces = _trace_file(tmp_path, [Attempt("smp_000_s00", ExecutionTrace.of(*COMPLIANT_S00))])
    rc = main(
        [
            "grade",
            "--benchmark",
            str(run_dir / "export" / "benchmark.jsonl"),
            "--traces",
            str(traces),
            "--schema",
            str(SCHEMA),
            "--out",
            str(tmp_path / "out"),
        ]
    )
    assert rc == 0
    assert "pass@1" in capsys.readouterr().out

    rc = main(["export", "--config", str(CONFIG), "--run-dir-base", str(tmp_path / "cli_run")])
    assert rc == 0


def test_cli_config_error_exit_code(tmp_path):
    from tracebench.pipeline.cli import main

    rc = main(["generate", "--config", str(tmp_path / "missing.yaml")])
    assert rc == 2


def test_cli_resume_requires_state(tmp_path):
    from tracebench.pipeline.cli import main

    rc = main(["resume", "--config", str(CONFIG), "--run-dir-base", str(tmp_path / "none")])
    assert rc == 2
