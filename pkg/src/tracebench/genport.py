"""Single pluggable port for every model-backed generation stage.

All stages go through ``invoke_stage`` against an adapter: replay (committed
fixture store, the default for tests and hermetic runs), record (wraps a live
or scripted generator and persists its responses), or live (process-exec
shim, disabled unless explicitly enabled). Fixture keys are stable hashes
over (stage, canonicalized payload) excluding the volatile repair context, so
a retry sequence replays as an ordered response list under one key.
"""
from __future__ import annotations

import hashlib
import json
import os
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

from .valuation import InitialValuation

STAGES = (
    "document_extraction",
    "tool_relevance",
    "scenario_generation",
    "check_generation",
    "world_model_generation",
    "smt_schema_prepass",
    "smt_full_pass",
    "conflict_resolution",
    "locus_reassessment",
    "fix_repair",
)

VOLATILE_KEYS = ("repair_context",)


class GenPortError(Exception):
    pass


class FixtureMiss(GenPortError):
    def __init__(self, key: str, stage: str) -> None:
        super().__init__(f"no fixture for stage {stage!r} request hash {key}")
        self.key = key
        self.stage = stage


class LiveCallBlocked(GenPortError):
    pass


@dataclass
class GiveUp(GenPortError):
    stage: str
    attempts: list[dict] = field(default_factory=list)  # [{attempt, error, payload}]

    def __str__(self) -> str:
        last = self.attempts[-1]["error"] if self.attempts else "no attempts"
        return f"stage {self.stage!r} gave up after {len(self.attempts)} attempts: {last}"


@dataclass(frozen=True)
class StageRequest:
    stage: str
    payload: dict
    attempt: int = 1

    def __post_init__(self) -> None:
        if self.stage not in STAGES:
            raise GenPortError(f"unknown stage {self.stage!r}")


@dataclass(frozen=True)
class StageResponse:
    payload: dict
    provenance: str  # "live" | "replayed"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_key(req: StageRequest) -> str:
    stable_payload = {k: v for k, v in req.payload.items() if k not in VOLATILE_KEYS}
    blob = canonical_json({"stage": req.stage, "payload": stable_payload})
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Adapters


class ReplayAdapter:
    """Read-only fixture playback. Responses for one key are consumed in
    order, which is how recorded repair-retry sequences replay."""

    def __init__(self, store_dir: str | Path) -> None:
        self.store_dir = Path(store_dir)
        self._cursors: dict[str, int] = {}
        self.calls: list[tuple[str, str]] = []  # (stage, key), for tests

    def respond(self, req: StageRequest) -> StageResponse:
        key = request_key(req)
        self.calls.append((req.stage, key))
        path = self.store_dir / f"{key}.json"
        if not path.exists():
            raise FixtureMiss(key, req.stage)
        record = json.loads(path.read_text(encoding="utf-8"))
        responses = record["responses"]
        cursor = self._cursors.get(key, 0)
        if cursor >= len(responses):
            raise FixtureMiss(key, req.stage)
        self._cursors[key] = cursor + 1
        return StageResponse(responses[cursor], "replayed")


class RecordingAdapter:
    """Wraps another adapter and appends every response to the fixture store."""

    def __init__(self, inner, store_dir: str | Path) -> None:
        self.inner = inner
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)

    def respond(self, req: StageRequest) -> StageResponse:
        resp = self.inner.respond(req)
        key = request_key(req)
        path = self.store_dir / f"{key}.json"
        if path.exists():
            record = json.loads(path.read_text(encoding="utf-8"))
        else:
            stable_payload = {k: v for k, v in req.payload.items() if k not in VOLATILE_KEYS}
            record = {"stage": req.stage, "key": key, "request": stable_payload, "responses": []}
        record["responses"].append(resp.payload)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)
        return resp


class LiveAdapter:
    """Process-exec shim: sends {stage, payload} as JSON on stdin and expects
    a JSON payload on stdout. Off by default; the formal core never needs it."""

    def __init__(self, executable: str, enabled: bool = False, timeout: float = 300.0) -> None:
        self.executable = executable
        self.enabled = enabled
        self.timeout = timeout

    def respond(self, req: StageRequest) -> StageResponse:
        if not self.enabled:
            raise LiveCallBlocked("live generator calls are disabled")
        proc = subprocess.run(
            [self.executable],
            input=json.dumps({"stage": req.stage, "payload": req.payload}),
            capture_output=True,
            text=True,
            timeout=self.timeout,
        )
        if proc.returncode != 0:
            raise GenPortError(f"live generator failed: {proc.stderr[:500]}")
        try:
            return StageResponse(json.loads(proc.stdout), "live")
        except json.JSONDecodeError as exc:
            raise GenPortError(f"live generator produced invalid JSON: {exc}") from None


class BlockedAdapter:
    """Fails on any call; used to prove hermeticity in tests."""

    def respond(self, req: StageRequest) -> StageResponse:
        raise LiveCallBlocked(f"unexpected generator call for stage {req.stage!r}")


def invoke_stage(req: StageRequest, adapter) -> StageResponse:
    return adapter.respond(req)


# ---------------------------------------------------------------------------
# Syntactic-error repair loop


def repair_retry(req: StageRequest, error: Exception, adapter, validator, budget: int):
    """Re-invoke a failed stage with the error details appended until the
    response validates or the budget runs out. Returns (validated result,
    StageResponse); raises GiveUp carrying the attempt history."""
    if budget < 1:
        raise GenPortError("repair budget must be at least 1")
    attempts: list[dict] = [{"attempt": req.attempt, "error": str(error), "payload": None}]
    prior_error = error
    prior_payload: dict | None = None
    for n in range(req.attempt + 1, req.attempt + budget + 1):
        repair_payload = dict(req.payload)
        repair_payload["repair_context"] = {
            "attempt": n,
            "error": str(prior_error),
            "previous": prior_payload,
        }
        retry = StageRequest(req.stage, repair_payload, attempt=n)
        resp = invoke_stage(retry, adapter)
        try:
            return validator(resp.payload), resp
        except Exception as exc:  # validation errors are data, not bugs
            attempts.append({"attempt": n, "error": str(exc), "payload": resp.payload})
            prior_error = exc
            prior_payload = resp.payload
    raise GiveUp(req.stage, attempts)


def generate_validated(stage: str, payload: dict, adapter, validator, repair_budget: int = 5):
    """First invocation plus the repair loop; the standard entry point for
    pipeline stages. Returns (validated result, StageResponse)."""
    req = StageRequest(stage, payload)
    resp = invoke_stage(req, adapter)
    try:
        return validator(resp.payload), resp
    except (FixtureMiss, LiveCallBlocked, GiveUp):
        raise
    except Exception as exc:
        try:
            return repair_retry(req, exc, adapter, validator, repair_budget)
        except GiveUp as give_up:
            give_up.attempts[0]["payload"] = resp.payload
            raise


# ---------------------------------------------------------------------------
# Scenarios


@dataclass(frozen=True)
class Scenario:
    id: str
    prompt: str
    external: tuple[tuple[str, object], ...]
    internal: tuple[tuple[str, object], ...]
    sample_id: str

    @property
    def init(self) -> InitialValuation:
        merged = dict(self.external)
        merged.update(dict(self.internal))
        return InitialValuation(tuple(sorted(merged.items())))

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "prompt": self.prompt,
            "external": dict(self.external),
            "internal": dict(self.internal),
            "sample_id": self.sample_id,
        }

    @staticmethod
    def from_json(data: dict) -> "Scenario":
        return Scenario(
            id=data["id"],
            prompt=data["prompt"],
            external=tuple(sorted(data.get("external", {}).items())),
            internal=tuple(sorted(data.get("internal", {}).items())),
            sample_id=data.get("sample_id", ""),
        )


def render_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def validate_scenario(sc: Scenario) -> Scenario:
    """Internal and external variable names must be disjoint, and every
    internal value must be spelled out in the prompt text."""
    ext, intl = dict(sc.external), dict(sc.internal)
    overlap = set(ext) & set(intl)
    if overlap:
        raise GenPortError(f"scenario {sc.id}: internal/external overlap {sorted(overlap)}")
    for name, value in intl.items():
        if render_value(value) not in sc.prompt:
            raise GenPortError(
                f"scenario {sc.id}: internal value {name}={render_value(value)!r} not reflected in the prompt"
            )
    return sc
