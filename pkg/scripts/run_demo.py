#!/usr/bin/env python3
"""Run the committed procurement demo end to end and print the export.

Equivalent to `tracebench generate --config assets/procurement/config.yaml`;
kept as a script for quick experimentation with the knobs below.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from tracebench.pipeline.config import load_config  # noqa: E402
from tracebench.pipeline.runner import run_pipeline  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--run-dir-base", default=str(REPO / "runs"))
    parser.add_argument("--strategy", default=None, help="override the sampling strategy")
    parser.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    args = parser.parse_args()

    cfg = load_config(REPO / "assets" / "procurement" / "config.yaml")
    cfg.run_dir_base = args.run_dir_base
    if args.strategy:
        cfg.sampling.strategy = args.strategy
    if args.seed is not None:
        cfg.sampling.seed = args.seed

    state = run_pipeline(cfg)
    print(f"run directory: {cfg.run_dir}")
    print(f"stages completed: {', '.join(state.done)}")
    export = cfg.run_dir / "export" / "benchmark.jsonl"
    records = [json.loads(line) for line in export.read_text(encoding="utf-8").splitlines() if line.strip()]
    print(f"validated cases: {len(records)}")
    for record in records:
        print(f"  {record['case_id']}: {len(record['checks'])} checks")
    statuses = {}
    for sid in state.sample_ids:
        status_path = cfg.run_dir / "samples" / sid / "status.json"
        if status_path.exists():
            for scenario_id, entry in json.loads(status_path.read_text()).items():
                statuses[scenario_id] = entry["status"]["state"]
    pending = sorted(s for s, st in statuses.items() if st == "awaiting_human")
    if pending:
        print(f"awaiting human review: {', '.join(pending)}")
        print("start the console with: tracebench serve --config assets/procurement/config.yaml "
              f"--run-dir-base {args.run_dir_base}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
