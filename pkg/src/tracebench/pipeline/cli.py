"""Command-line entry point.

Subcommands: generate (run the pipeline), resume (alias that requires an
existing run), grade, export, serve. Exit codes: 2 for configuration errors,
3 for stage failures, 4 for solver failures, 1 for anything else.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..solver import SolverError
from .config import ConfigError, load_config
from .grade import GradeError, format_report, grade_files
from .runner import Pipeline, PipelineError, run_pipeline

EXIT_CONFIG = 2
EXIT_STAGE = 3
EXIT_SOLVER = 4


def _add_config_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", required=True, help="run configuration YAML")
    p.add_argument("--run-dir-base", help="override run_dir_base from the config")
    p.add_argument("--run-name", help="override run_name from the config")


def _load(args) -> "RunConfig":
    cfg = load_config(args.config)
    if args.run_dir_base:
        cfg.run_dir_base = args.run_dir_base
    if getattr(args, "run_name", None):
        cfg.run_name = args.run_name
    return cfg


def cmd_generate(args) -> int:
    cfg = _load(args)
    state = run_pipeline(cfg, stop_after=args.stop_after)
    print(f"run directory: {cfg.run_dir}")
    print(f"completed stages: {', '.join(state.done)}")
    if state.failed_scenarios:
        print(f"failed scenarios: {sorted(state.failed_scenarios)}")
    return 0


def cmd_resume(args) -> int:
    cfg = _load(args)
    if not (cfg.run_dir / "state.json").exists():
        print(f"nothing to resume: {cfg.run_dir} has no state.json", file=sys.stderr)
        return EXIT_CONFIG
    return cmd_generate(args)


def cmd_grade(args) -> int:
    report = grade_files(args.benchmark, args.traces, args.schema, args.out, args.k)
    print(format_report(report))
    print(f"reports written to {args.out}")
    return 0


def cmd_export(args) -> int:
    cfg = _load(args)
    pipeline = Pipeline(cfg)
    pipeline.stage_export()
    out = cfg.run_dir / "export" / "benchmark.jsonl"
    count = len([l for l in out.read_text(encoding='utf-8').splitlines() if l.strip()])
    print(f"exported {count} validated cases to {out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import make_app

    cfg = _load(args)
    frontend = Path(args.frontend) if args.frontend else cfg.base_dir / ".." / ".." / "frontend" / "dist"
    app = make_app(cfg, frontend_dist=frontend.resolve())
    port = args.port or cfg.web_ui.port
    uvicorn.run(app, host="127.0.0.1", port=port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tracebench", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="run the synthesis pipeline (resumes an existing run directory)")
    _add_config_arg(p)
    p.add_argument("--stop-after", help="checkpoint name to stop after (debugging/testing)")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("resume", help="resume an interrupted run")
    _add_config_arg(p)
    p.set_defaults(fn=cmd_resume, stop_after=None)

    p = sub.add_parser("grade", help="grade agent trace attempts against an exported benchmark")
    p.add_argument("--benchmark", required=True, help="benchmark.jsonl from export")
    p.add_argument("--traces", required=True, help="attempts JSONL (one attempt per line)")
    p.add_argument("--schema", required=True, help="tool schema JSON")
    p.add_argument("--out", required=True, help="output directory for report.json / report.txt")
    p.add_argument("--k", type=int, default=None, help="k for pass@k and pass^k (default: n attempts)")
    p.set_defaults(fn=cmd_grade)

    p = sub.add_parser("export", help="re-export validated cases from a run directory")
    _add_config_arg(p)
    p.set_defaults(fn=cmd_export)

    p = sub.add_parser("serve", help="serve the review API (and UI when built)")
    _add_config_arg(p)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--frontend", default=None, help="path to the built frontend dist")
    p.set_defaults(fn=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except GradeError as exc:
        print(f"grading error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
