"""Execution traces: ordered tool calls with concrete arguments, plus file IO.

Trace files are JSON Lines: one attempt per line,
``{"case_id": ..., "steps": [["tool", {"arg": value, ...}], ...]}``.
A crashed attempt (no parseable trace) is recorded as ``{"case_id": ...,
"crashed": true}``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

ArgValue = bool | int | float | str


@dataclass(frozen=True)
class Step:
    tool: str
    args: dict[str, ArgValue] = field(default_factory=dict)


@dataclass(frozen=True)
class ExecutionTrace:
    steps: tuple[Step, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    @staticmethod
    def of(*steps: tuple[str, dict[str, ArgValue]]) -> "ExecutionTrace":
        return ExecutionTrace(tuple(Step(t, dict(a)) for t, a in steps))

    def to_json(self) -> list:
        return [[s.tool, s.args] for s in self.steps]

    @staticmethod
    def from_json(data: list) -> "ExecutionTrace":
        return ExecutionTrace(tuple(Step(t, dict(a)) for t, a in data))


@dataclass(frozen=True)
class Attempt:
    case_id: str
    trace: ExecutionTrace | None  # None means the attempt crashed

    @property
    def crashed(self) -> bool:
        return self.trace is None


def read_attempts(path: str | Path) -> list[Attempt]:
    attempts: list[Attempt] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
            case_id = rec["case_id"]
            if rec.get("crashed"):
                attempts.append(Attempt(case_id, None))
            else:
                attempts.append(Attempt(case_id, ExecutionTrace.from_json(rec["steps"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"{path}:{lineno}: malformed trace record: {exc}") from exc
    return attempts


def write_attempts(path: str | Path, attempts: list[Attempt]) -> None:
    lines = []
    for a in attempts:
        if a.crashed:
            lines.append(json.dumps({"case_id": a.case_id, "crashed": True}, sort_keys=True))
        else:
            lines.append(json.dumps({"case_id": a.case_id, "steps": a.trace.to_json()}, sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
