"""Run configuration: YAML with ${VAR:-default} environment interpolation.

The key structure mirrors the standard pipeline config: document and tool
sources, chunking, sampling, validation, solver, generator adapter, and the
review-UI port.
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml


class ConfigError(Exception):
    pass


_ENV_RE = re.compile(r"\$\{(?P<name>[A-Za-z_][A-Za-z0-9_]*)(?::-(?P<default>[^}]*))?\}")


def interpolate_env(value: str, env: dict[str, str] | None = None) -> str:
    env = os.environ if env is None else env

    def sub(m: re.Match) -> str:
        name = m.group("name")
        if name in env and env[name] != "":
            return env[name]
        return m.group("default") or ""

    return _ENV_RE.sub(sub, value)


def _walk_interpolate(obj, env):
    if isinstance(obj, str):
        return interpolate_env(obj, env)
    if isinstance(obj, dict):
        return {k: _walk_interpolate(v, env) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_walk_interpolate(v, env) for v in obj]
    return obj


@dataclass
class ChunkingConfig:
    max_chunk_tokens: int = 4000


@dataclass
class SamplingConfig:
    strategy: str = "coverage_islands"
    min_nodes_per_sample: int = 2
    max_nodes_per_sample: int = 4
    scenarios_per_sample: int = 4
    max_samples: int = 12
    max_parallel_samples: int = 3
    seed: int = 42


@dataclass
class ValidationConfig:
    n_rounds: int = 5
    trace_bound: int = 16


@dataclass
class SolverBlock:
    executable: str | None = None  # None or "": bundled reference solver
    timeout_s: float = 30.0


@dataclass
class RetryConfig:
    max_attempts: int = 16
    base_delay_s: float = 0.5
    max_repair_attempts: int = 5


@dataclass
class LlmConfig:
    adapter: str = "replay"  # replay | record | live
    fixture_dir: str = "fixtures"
    live_executable: str | None = None
    retry: RetryConfig = field(default_factory=RetryConfig)


@dataclass
class WebUiConfig:
    port: int = 8080


@dataclass
class RunConfig:
    document_path: str = ""
    tools_path: str = ""
    run_dir_base: str = "runs"
    run_name: str = "run"
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    solver: SolverBlock = field(default_factory=SolverBlock)
    llm: LlmConfig = field(default_factory=LlmConfig)
    web_ui: WebUiConfig = field(default_factory=WebUiConfig)
    base_dir: Path = field(default_factory=Path)

    @property
    def run_dir(self) -> Path:
        return self.base_dir / self.run_dir_base / self.run_name

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p


def _require(data: dict, key: str):
    if key not in data:
        raise ConfigError(f"missing config key {key!r}")
    return data[key]


def _take(data: dict, cls):
    kwargs = {}
    for f in cls.__dataclass_fields__:
        if f in data:
            kwargs[f] = data[f]
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad {cls.__name__}: {exc}") from None


def parse_config(data: dict, base_dir: Path) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    tools = data.get("tools", {})
    tools_path = tools.get("source", "") if isinstance(tools, dict) else str(tools)
    validation = dict(data.get("validation", {}))
    if "z3_trace_bound" in validation:  # paper-style key name
        validation["trace_bound"] = validation.pop("z3_trace_bound")
    cfg = RunConfig(
        document_path=str(_require(data, "document_path")),
        tools_path=str(tools_path),
        run_dir_base=str(data.get("run_dir_base", "runs")),
        run_name=str(data.get("run_name", "run")),
        chunking=_take(data.get("chunking", {}), ChunkingConfig),
        sampling=_take(data.get("sampling", {}), SamplingConfig),
        validation=_take(validation, ValidationConfig),
        solver=_take(data.get("solver", {}), SolverBlock),
        web_ui=_take(data.get("web_ui", {}), WebUiConfig),
        base_dir=base_dir,
    )
    llm = data.get("llm", {})
    cfg.llm = _take(llm, LlmConfig)
    if "retry" in llm:
        cfg.llm.retry = _take(llm["retry"], RetryConfig)
    if not tools_path:
        raise ConfigError("missing config key 'tools.source'")
    if cfg.sampling.strategy not in ("uniform", "coverage_driven", "connected_diverse_coverage", "coverage_islands"):
        raise ConfigError(f"unknown sampling strategy {cfg.sampling.strategy!r}")
    if cfg.llm.adapter not in ("replay", "record", "live"):
        raise ConfigError(f"unknown adapter {cfg.llm.adapter!r}")
    if cfg.validation.trace_bound < 1 or cfg.validation.n_rounds < 1:
        raise ConfigError("validation bounds must be positive")
    if not 1 <= cfg.sampling.min_nodes_per_sample <= cfg.sampling.max_nodes_per_sample:
        raise ConfigError("sampling needs 1 <= min_nodes_per_sample <= max_nodes_per_sample")
    return cfg


def load_config(path: str | Path, env: dict[str, str] | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    data = _walk_interpolate(raw, env)
    return parse_config(data, path.parent.resolve())
