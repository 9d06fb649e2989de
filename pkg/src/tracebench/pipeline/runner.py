"""Staged pipeline execution with on-disk resumability.

Every stage persists its artifacts and marks itself done in state.json before
the next stage starts; re-running a pipeline on an existing run directory
resumes from the last completed checkpoint, regenerating nothing. With the
replay adapter and a fixed seed the whole run, including the benchmark
export, is byte-deterministic.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..checks import CheckSet, parse_check_set, serialize_check_set
from ..docgraph import DocGraph, build_graph, sample_nodes
from ..dsl import parse_model, print_canonical, type_check
from ..edits import LockTable
from ..genport import (
    FixtureMiss,
    GenPortError,
    GiveUp,
    LiveAdapter,
    RecordingAdapter,
    ReplayAdapter,
    Scenario,
    generate_validated,
    validate_scenario,
)
from ..schema import ToolSchema
from ..solver import SolverError
from ..validate import SampleValidator, ScenarioArtifacts, SolverConfig
from ..valuation import validate_valuation
from .config import ConfigError, RunConfig

STAGE_ORDER = ("graph", "sampling", "tool_relevance", "scenarios", "checks", "world_model", "validation", "export")


class PipelineError(Exception):
    def __init__(self, stage: str, message: str) -> None:
        super().__init__(f"stage {stage!r} failed: {message}")
        self.stage = stage


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json(path: Path, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


@dataclass
class RunState:
    run_dir: Path
    done: list[str] = field(default_factory=list)
    sample_ids: list[str] = field(default_factory=list)
    failed_scenarios: dict[str, str] = field(default_factory=dict)  # scenario id -> reason

    def save(self) -> None:
        _write_json(
            self.run_dir / "state.json",
            {"done": self.done, "sample_ids": self.sample_ids, "failed_scenarios": self.failed_scenarios},
        )

    @staticmethod
    def load(run_dir: Path) -> "RunState":
        path = run_dir / "state.json"
        if not path.exists():
            return RunState(run_dir)
        data = _read_json(path)
        return RunState(
            run_dir,
            list(data.get("done", [])),
            list(data.get("sample_ids", [])),
            dict(data.get("failed_scenarios", {})),
        )

    def mark(self, stage: str) -> None:
        if stage not in self.done:
            self.done.append(stage)
        self.save()


def make_adapter(cfg: RunConfig):
    if cfg.llm.adapter == "replay":
        return ReplayAdapter(cfg.resolve(cfg.llm.fixture_dir))
    if cfg.llm.adapter == "record":
        if not cfg.llm.live_executable:
            raise ConfigError("record adapter needs llm.live_executable")
        return RecordingAdapter(
            LiveAdapter(cfg.llm.live_executable, enabled=True), cfg.resolve(cfg.llm.fixture_dir)
        )
    return LiveAdapter(cfg.llm.live_executable or "", enabled=True)


def solver_config(cfg: RunConfig) -> SolverConfig:
    exe = cfg.solver.executable
    return SolverConfig(command=exe if exe else None, timeout=cfg.solver.timeout_s)


@dataclass
class Pipeline:
    cfg: RunConfig
    adapter: object = None
    state: RunState = None  # type: ignore[assignment]
    schema: ToolSchema = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.adapter is None:
            self.adapter = make_adapter(self.cfg)
        self.cfg.run_dir.mkdir(parents=True, exist_ok=True)
        self.state = RunState.load(self.cfg.run_dir)
        try:
            self.schema = ToolSchema.load(self.cfg.resolve(self.cfg.tools_path))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot load tool schema: {exc}") from None
        self.repair_budget = self.cfg.llm.retry.max_repair_attempts

    # -- paths ---------------------------------------------------------------

    @property
    def run_dir(self) -> Path:
        return self.cfg.run_dir

    def sample_dir(self, sample_id: str) -> Path:
        return self.run_dir / "samples" / sample_id

    # -- stage implementations -------------------------------------------------

    def stage_graph(self) -> None:
        doc_path = self.cfg.resolve(self.cfg.document_path)
        try:
            document = doc_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise PipelineError("graph", str(exc)) from None
        graph = build_graph(document, self.cfg.chunking.max_chunk_tokens, self.adapter)
        graph.save(self.run_dir / "graph.json")

    def stage_sampling(self) -> None:
        graph = DocGraph.load(self.run_dir / "graph.json")
        s = self.cfg.sampling
        samples = sample_nodes(graph, s.strategy, s.min_nodes_per_sample, s.max_nodes_per_sample, s.seed, s.max_samples)
        graph.save(self.run_dir / "graph.json")  # coverage counters advanced
        ids = []
        records = []
        for i, sample in enumerate(samples):
            sid = f"smp_{i:03d}"
            ids.append(sid)
            records.append({"id": sid, "node_ids": list(sample.node_ids), "text": sample.text})
        _write_json(self.run_dir / "samples.json", records)
        self.state.sample_ids = ids
        self.state.save()

    def _samples(self) -> list[dict]:
        return _read_json(self.run_dir / "samples.json")

    def stage_tool_relevance(self) -> None:
        tool_listing = [
            {"name": t.name, "style": t.style, "params": [p.name for p in t.params]}
            for t in self.schema.tools.values()
        ]
        for sample in self._samples():
            payload = {"sample_id": sample["id"], "text": sample["text"], "tools": tool_listing}

            def validate(resp: dict) -> list[str]:
                tools = resp.get("tools")
                if not isinstance(tools, list) or not tools:
                    raise GenPortError("tool_relevance must return a non-empty tool list")
                unknown = [t for t in tools if t not in self.schema.tools]
                if unknown:
                    raise GenPortError(f"unknown tools: {unknown}")
                return sorted(set(tools))

            try:
                tools, _ = generate_validated("tool_relevance", payload, self.adapter, validate, self.repair_budget)
            except (GiveUp, FixtureMiss) as exc:
                self.state.failed_scenarios[sample["id"]] = str(exc)
                self.state.save()
                continue
            _write_json(self.sample_dir(sample["id"]) / "tools.json", tools)

    def stage_scenarios(self) -> None:
        for sample in self._samples():
            sid = sample["id"]
            tools_path = self.sample_dir(sid) / "tools.json"
            if not tools_path.exists():
                continue
            tools = _read_json(tools_path)
            payload = {
                "sample_id": sid,
                "text": sample["text"],
                "tools": tools,
                "count": self.cfg.sampling.scenarios_per_sample,
            }

            def validate(resp: dict) -> list[Scenario]:
                raw = resp.get("scenarios")
                if not isinstance(raw, list) or not raw:
                    raise GenPortError("scenario_generation must return scenarios")
                out = []
                for i, r in enumerate(raw):
                    sc = Scenario(
                        id=f"{sid}_s{i:02d}",
                        prompt=str(r.get("prompt", "")),
                        external=tuple(sorted(r.get("external", {}).items())),
                        internal=tuple(sorted(r.get("internal", {}).items())),
                        sample_id=sid,
                    )
                    out.append(validate_scenario(sc))
                return out

            try:
                scenarios, _ = generate_validated("scenario_generation", payload, self.adapter, validate, self.repair_budget)
            except (GiveUp, FixtureMiss) as exc:
                self.state.failed_scenarios[sid] = str(exc)
                self.state.save()
                scenarios = []
            _write_json(self.sample_dir(sid) / "scenarios.json", [s.to_json() for s in scenarios])

    def _scenarios_of(self, sid: str) -> list[Scenario]:
        return [Scenario.from_json(r) for r in _read_json(self.sample_dir(sid) / "scenarios.json")]

    def stage_checks(self) -> None:
        for sample in self._samples():
            sid = sample["id"]
            tools_path = self.sample_dir(sid) / "tools.json"
            if not tools_path.exists() or not (self.sample_dir(sid) / "scenarios.json").exists():
                continue
            tools = _read_json(tools_path)
            for scenario in self._scenarios_of(sid):
                payload = {
                    "scenario_id": scenario.id,
                    "prompt": scenario.prompt,
                    "init": scenario.init.as_dict(),
                    "tools": tools,
                    "text": sample["text"],
                }

                def validate(resp: dict) -> CheckSet:
                    return parse_check_set(resp.get("checks", ""), self.schema)

                try:
                    cs, _ = generate_validated("check_generation", payload, self.adapter, validate, self.repair_budget)
                except (GiveUp, FixtureMiss) as exc:
                    self.state.failed_scenarios[scenario.id] = str(exc)
                    self.state.save()
                    continue
                _write_text(self.sample_dir(sid) / "checks" / f"{scenario.id}.checks.txt", serialize_check_set(cs))

    def stage_world_model(self) -> None:
        for sample in self._samples():
            sid = sample["id"]
            tools_path = self.sample_dir(sid) / "tools.json"
            if not tools_path.exists():
                continue
            tools = _read_json(tools_path)
            sketch_payload = {"sample_id": sid, "text": sample["text"], "tools": tools}

            def validate_sketch(resp: dict) -> dict:
                if "state_vars" not in resp or not isinstance(resp["state_vars"], list):
                    raise GenPortError("schema prepass must propose a state_vars list")
                return resp

            try:
                sketch, _ = generate_validated(
                    "smt_schema_prepass", sketch_payload, self.adapter, validate_sketch, self.repair_budget
                )
            except (GiveUp, FixtureMiss) as exc:
                for scenario in self._scenarios_of(sid):
                    self.state.failed_scenarios[scenario.id] = str(exc)
                self.state.save()
                continue

            full_payload = {"sample_id": sid, "text": sample["text"], "tools": tools, "sketch": sketch}

            def validate_model(resp: dict):
                model = type_check(parse_model(resp.get("model", "")), self.schema)
                missing = [t for t in tools if model.transition_for(t) is None]
                if missing:
                    raise GenPortError(f"world model lacks transitions for: {missing}")
                return model

            try:
                model, _ = generate_validated(
                    "smt_full_pass", full_payload, self.adapter, validate_model, self.repair_budget
                )
            except (GiveUp, FixtureMiss) as exc:
                for scenario in self._scenarios_of(sid):
                    self.state.failed_scenarios[scenario.id] = str(exc)
                self.state.save()
                continue
            _write_text(self.sample_dir(sid) / "model.wm.sexp", print_canonical(model))

    def stage_validation(self) -> None:
        for sample in self._samples():
            sid = sample["id"]
            model_path = self.sample_dir(sid) / "model.wm.sexp"
            if not model_path.exists() or not (self.sample_dir(sid) / "scenarios.json").exists():
                continue
            model = type_check(parse_model(model_path.read_text(encoding="utf-8")), self.schema)
            scenarios: list[ScenarioArtifacts] = []
            for scenario in self._scenarios_of(sid):
                checks_path = self.sample_dir(sid) / "checks" / f"{scenario.id}.checks.txt"
                if not checks_path.exists():
                    continue
                init = scenario.init
                try:
                    validate_valuation(init, model)
                except Exception as exc:
                    self.state.failed_scenarios[scenario.id] = f"initial valuation invalid: {exc}"
                    self.state.save()
                    continue
                scenarios.append(
                    ScenarioArtifacts(
                        id=scenario.id,
                        prompt=scenario.prompt,
                        check_set=parse_check_set(checks_path.read_text(encoding="utf-8"), self.schema),
                        init=init,
                    )
                )
            world_locks = LockTable()
            validator = SampleValidator(
                model,
                self.schema,
                scenarios,
                self.cfg.validation.trace_bound,
                solver_config(self.cfg),
                self.adapter,
                sample_id=sid,
                world_locks=world_locks,
                run_dir=self.sample_dir(sid) / "rounds",
                repair_budget=self.repair_budget,
            )
            validator.run(self.cfg.validation.n_rounds)
            self._persist_sample_state(sid, validator, scenarios, world_locks)

    def _persist_sample_state(self, sid, validator, scenarios, world_locks) -> None:
        _write_text(self.sample_dir(sid) / "model.wm.sexp", print_canonical(validator.model))
        status_blob = {}
        for s in scenarios:
            _write_text(self.sample_dir(sid) / "checks" / f"{s.id}.checks.txt", serialize_check_set(s.check_set))
            status_blob[s.id] = {
                "status": s.status.to_json(),
                "init": s.init.as_dict(),
                "init_version": s.init.version,
                "witness": s.last_witness,
                "suggestions": s.suggestions,
                "locks": s.locks.to_json(),
                "checks_version": s.check_set.version,
            }
        _write_json(self.sample_dir(sid) / "status.json", status_blob)
        _write_json(
            self.sample_dir(sid) / "locks.json",
            {"world": world_locks.to_json(), "model_version": validator.model.version},
        )

    def stage_export(self) -> None:
        records = []
        for sid in self.state.sample_ids:
            status_path = self.sample_dir(sid) / "status.json"
            if not status_path.exists():
                continue
            statuses = _read_json(status_path)
            for scenario in self._scenarios_of(sid):
                entry = statuses.get(scenario.id)
                if not entry or entry["status"]["state"] != "validated":
                    continue
                checks_text = (self.sample_dir(sid) / "checks" / f"{scenario.id}.checks.txt").read_text(
                    encoding="utf-8"
                )
                records.append(
                    {
                        "case_id": scenario.id,
                        "sample_id": sid,
                        "prompt": scenario.prompt,
                        "init": entry["init"],
                        "checks": checks_text.splitlines(),
                        "world_model_ref": f"samples/{sid}/model.wm.sexp",
                        "status": "validated",
                        "provenance": {
                            "rounds": entry["status"]["round"],
                            "kept_checks": entry["status"]["kept_checks"],
                            "human_touched": bool(
                                any(entry["locks"].get(k) for k in entry["locks"])
                            ),
                        },
                    }
                )
        lines = [json.dumps(r, sort_keys=True) for r in records]
        _write_text(self.run_dir / "export" / "benchmark.jsonl", "\n".join(lines) + ("\n" if lines else ""))

    # -- orchestration ---------------------------------------------------------

    def run(self, stop_after: str | None = None) -> RunState:
        stages = {
            "graph": self.stage_graph,
            "sampling": self.stage_sampling,
            "tool_relevance": self.stage_tool_relevance,
            "scenarios": self.stage_scenarios,
            "checks": self.stage_checks,
            "world_model": self.stage_world_model,
            "validation": self.stage_validation,
            "export": self.stage_export,
        }
        if stop_after is not None and stop_after not in STAGE_ORDER:
            raise ConfigError(f"unknown stage {stop_after!r}")
        lock = acquire_run_lock(self.run_dir)
        try:
            for name in STAGE_ORDER:
                if name in self.state.done:
                    continue
                try:
                    stages[name]()
                except PipelineError:
                    raise
                except SolverError:
                    self.state.save()
                    raise  # solver failures keep their own exit code
                except Exception as exc:
                    self.state.save()
                    raise PipelineError(name, str(exc)) from exc
                self.state.mark(name)
                if stop_after == name:
                    break
        finally:
            release_run_lock(lock)
        return self.state


def acquire_run_lock(run_dir: Path) -> Path:
    """One process owns a run directory at a time (pipeline or API service)."""
    run_dir.mkdir(parents=True, exist_ok=True)
    lock_path = run_dir / "run.lock"
    if lock_path.exists():
        holder = lock_path.read_text(encoding="utf-8").strip()
        try:
            pid = int(holder)
            os.kill(pid, 0)
        except (ValueError, ProcessLookupError):
            lock_path.unlink()  # stale
        except PermissionError:
            raise PipelineError("lock", f"run directory is owned by process {holder}")
        else:
            raise PipelineError("lock", f"run directory is owned by process {holder}")
    lock_path.write_text(str(os.getpid()), encoding="utf-8")
    return lock_path


def release_run_lock(lock_path: Path) -> None:
    try:
        lock_path.unlink()
    except FileNotFoundError:
        pass


def run_pipeline(cfg: RunConfig, adapter=None, stop_after: str | None = None) -> RunState:
    """Execute (or resume) a run; persisted after every stage."""
    return Pipeline(cfg, adapter).run(stop_after)
