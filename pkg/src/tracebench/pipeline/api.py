"""HTTP+JSON API over a finished (or interrupted) run directory: the review
console's backend.

Readers are concurrent; writers serialize through one lock and every mutation
is compare-and-set on the target artifact's version, so lost updates are
impossible. All mutations route through the typed edit language; human edits
extend the lock tables, and re-validation is solver-only.
"""
from __future__ import annotations

import json
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from ..checks import parse_check_set, serialize_check_set, serialize_node
from ..dsl import parse_model, print_canonical, type_check
from ..edits import EditCommand, EditRejected, LockTable, apply_edit
from ..schema import ToolSchema
from ..validate import ScenarioArtifacts, ValidationStatus, revalidate_scenario
from ..valuation import InitialValuation
from .config import RunConfig
from .runner import _read_json, _write_json, _write_text, solver_config


class EditRequest(BaseModel):
    command: dict
    provenance: str = "human"
    expected_version: int | None = None


class RunStore:
    """In-memory view of a run directory with write-through persistence."""

    def __init__(self, cfg: RunConfig) -> None:
        self.cfg = cfg
        self.run_dir = cfg.run_dir
        self.schema = ToolSchema.load(cfg.resolve(cfg.tools_path))
        self.lock = threading.Lock()
        self.scenarios: dict[str, ScenarioArtifacts] = {}
        self.sample_of: dict[str, str] = {}
        self.models: dict[str, object] = {}
        self.model_versions: dict[str, int] = {}
        self.world_locks: dict[str, LockTable] = {}
        self.prompts: dict[str, str] = {}
        self._load()

    def _sample_dir(self, sid: str) -> Path:
        return self.run_dir / "samples" / sid

    def _load(self) -> None:
        state = _read_json(self.run_dir / "state.json")
        for sid in state.get("sample_ids", []):
            sdir = self._sample_dir(sid)
            if not (sdir / "status.json").exists():
                continue
            locks_blob = _read_json(sdir / "locks.json") if (sdir / "locks.json").exists() else {}
            self.world_locks[sid] = LockTable.from_json(locks_blob.get("world", {}))
            model = type_check(parse_model((sdir / "model.wm.sexp").read_text(encoding="utf-8")), self.schema)
            model.version = locks_blob.get("model_version", 0)
            self.models[sid] = model
            statuses = _read_json(sdir / "status.json")
            scenarios = {s["id"]: s for s in _read_json(sdir / "scenarios.json")}
            for scenario_id, entry in statuses.items():
                checks = parse_check_set(
                    (sdir / "checks" / f"{scenario_id}.checks.txt").read_text(encoding="utf-8"), self.schema
                )
                checks = type(checks)(checks.checks, entry.get("checks_version", 0))
                art = ScenarioArtifacts(
                    id=scenario_id,
                    prompt=scenarios.get(scenario_id, {}).get("prompt", ""),
                    check_set=checks,
                    init=InitialValuation.from_dict(entry["init"], entry.get("init_version", 0)),
                    locks=LockTable.from_json(entry.get("locks", {})),
                    status=ValidationStatus.from_json(entry["status"]),
                )
                art.last_witness = entry.get("witness")
                art.suggestions = entry.get("suggestions", [])
                self.scenarios[scenario_id] = art
                self.sample_of[scenario_id] = sid

    def persist_scenario(self, scenario_id: str) -> None:
        sid = self.sample_of[scenario_id]
        sdir = self._sample_dir(sid)
        statuses = _read_json(sdir / "status.json")
        s = self.scenarios[scenario_id]
        _write_text(sdir / "checks" / f"{scenario_id}.checks.txt", serialize_check_set(s.check_set))
        statuses[scenario_id] = {
            "status": s.status.to_json(),
            "init": s.init.as_dict(),
            "init_version": s.init.version,
            "witness": s.last_witness,
            "suggestions": s.suggestions,
            "locks": s.locks.to_json(),
            "checks_version": s.check_set.version,
        }
        _write_json(sdir / "status.json", statuses)

    def persist_model(self, sid: str) -> None:
        _write_text(self._sample_dir(sid) / "model.wm.sexp", print_canonical(self.models[sid]))
        _write_json(
            self._sample_dir(sid) / "locks.json",
            {"world": self.world_locks[sid].to_json(), "model_version": self.models[sid].version},
        )

    # -- views ---------------------------------------------------------------

    def scenario_row(self, s: ScenarioArtifacts) -> dict:
        last_query = s.status.history[-1]["query"] if s.status.history else ""
        conflict_kind = "backward" if last_query.startswith("backward") else "forward"
        return {
            "id": s.id,
            "sample_id": self.sample_of[s.id],
            "state": s.status.state,
            "round": s.status.round,
            "conflict_kind": conflict_kind if s.status.state == "awaiting_human" else None,
        }

    def bundle(self, s: ScenarioArtifacts) -> dict:
        sid = self.sample_of[s.id]
        model = self.models[sid]
        sample = next(
            (rec for rec in _read_json(self.run_dir / "samples.json") if rec["id"] == sid), {}
        )
        return {
            "id": s.id,
            "sample_id": sid,
            "state": s.status.state,
            "round": s.status.round,
            "prompt": s.prompt,
            "document_text": sample.get("text", ""),
            "checks": [
                {
                    "id": c.id,
                    "text": serialize_node(c.node),
                    "locked": s.locks.is_locked("check", c.id),
                    "kept": c.id in s.status.kept_checks,
                }
                for c in s.check_set.checks
            ],
            "world_model": print_canonical(model),
            "init": s.init.as_dict(),
            "witness": s.last_witness,
            "suggestions": s.suggestions,
            "tool_styles": {t.name: t.style for t in self.schema.tools.values()},
            "versions": {
                "checks": s.check_set.version,
                "model": model.version,
                "init": s.init.version,
            },
            "history": s.status.history,
        }


def make_app(cfg: RunConfig, frontend_dist: Path | None = None) -> FastAPI:
    store = RunStore(cfg)
    app = FastAPI(title="tracebench review console")
    app.state.store = store

    def _get_scenario(scenario_id: str) -> ScenarioArtifacts:
        s = store.scenarios.get(scenario_id)
        if s is None:
            raise HTTPException(404, f"unknown scenario {scenario_id!r}")
        return s

    @app.get("/api/scenarios")
    def list_scenarios(status: str | None = None):
        rows = [store.scenario_row(s) for s in store.scenarios.values()]
        if status:
            rows = [r for r in rows if r["state"] == status]
        return {"scenarios": sorted(rows, key=lambda r: r["id"])}

    @app.get("/api/scenarios/{scenario_id}/bundle")
    def get_bundle(scenario_id: str):
        return store.bundle(_get_scenario(scenario_id))

    @app.get("/api/scenarios/{scenario_id}/status")
    def get_status(scenario_id: str):
        s = _get_scenario(scenario_id)
        return {"id": s.id, "state": s.status.state, "round": s.status.round}

    @app.post("/api/scenarios/{scenario_id}/edits")
    def post_edit(scenario_id: str, body: EditRequest):
        with store.lock:
            s = _get_scenario(scenario_id)
            if s.status.state != "awaiting_human":
                raise HTTPException(409, f"scenario is {s.status.state}, not awaiting_human")
            try:
                cmd = EditCommand.from_json(body.command)
            except EditRejected as exc:
                raise HTTPException(422, str(exc)) from None
            sid = store.sample_of[scenario_id]
            if cmd.kind in ("add_check", "remove_check", "replace_check"):
                target, versions = s.check_set, s.check_set.version
            elif cmd.kind == "set_init_binding":
                target, versions = s.init, s.init.version
            else:
                target, versions = store.models[sid], store.models[sid].version
            if body.expected_version is not None and body.expected_version != versions:
                raise HTTPException(409, f"version conflict: expected {body.expected_version}, have {versions}")
            locks = store.world_locks[sid] if target is store.models[sid] else s.locks
            try:
                new_artifact = apply_edit(
                    target, cmd, locks, store.schema, provenance=body.provenance, model=store.models[sid]
                )
            except EditRejected as exc:
                status = 403 if exc.kind == "lock" else 422
                raise HTTPException(status, f"{exc.kind}: {exc}") from None
            if cmd.kind in ("add_check", "remove_check", "replace_check"):
                s.check_set = new_artifact
            elif cmd.kind == "set_init_binding":
                s.init = new_artifact
            else:
                store.models[sid] = new_artifact
                store.persist_model(sid)
            store.persist_scenario(scenario_id)
            return store.bundle(s)

    @app.post("/api/scenarios/{scenario_id}/revalidate")
    def post_revalidate(scenario_id: str):
        with store.lock:
            s = _get_scenario(scenario_id)
            sid = store.sample_of[scenario_id]
            status = revalidate_scenario(
                store.models[sid],
                store.schema,
                s,
                cfg.validation.trace_bound,
                solver_config(cfg),
            )
            store.persist_scenario(scenario_id)
            return {"id": s.id, "state": status.state}

    @app.post("/api/scenarios/{scenario_id}/discard")
    def post_discard(scenario_id: str):
        with store.lock:
            s = _get_scenario(scenario_id)
            if s.status.state == "validated":
                raise HTTPException(409, "validated scenarios are not discarded from the console")
            s.status.state = "discarded"
            store.persist_scenario(scenario_id)
            return {"id": s.id, "state": s.status.state}

    if frontend_dist and frontend_dist.exists():
        app.mount("/assets", StaticFiles(directory=frontend_dist), name="assets")

        @app.get("/")
        def index():
            return FileResponse(frontend_dist / "index.html")

    return app
