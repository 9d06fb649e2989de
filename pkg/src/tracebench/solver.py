"""External solver process driver and witness extraction.

One process per query: the script is streamed to the solver's stdin, stdout is
parsed for sat/unsat/unknown and, on sat, the model block. Any SMT-LIB 2
compliant solver works (z3, cvc5); the bundled ``tracebench-solve`` is the
default when nothing else is configured.
"""
from __future__ import annotations

import shutil
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .smtc.encode import Manifest
from .smtc.queries import SolverScript
from .trace import ExecutionTrace, Step


class SolverError(Exception):
    pass


DEFAULT_SOLVER = ("tracebench-solve",)


def resolve_solver_command(configured: list[str] | tuple[str, ...] | str | None) -> tuple[str, ...]:
    if configured:
        if isinstance(configured, str):
            return tuple(configured.split())
        return tuple(configured)
    return DEFAULT_SOLVER


@dataclass
class SolverVerdict:
    status: str  # sat | unsat | unknown
    raw_model: str | None = None  # present iff status == sat
    wall_time: float = 0.0

    def __post_init__(self) -> None:
        if (self.status == "sat") != (self.raw_model is not None):
            raise ValueError("raw_model must be present exactly when status is sat")


def run_solver(script: SolverScript, timeout: float = 30.0, command=None) -> SolverVerdict:
    """Run one query in a fresh solver process. Timeouts map to unknown."""
    cmd = resolve_solver_command(command)
    if shutil.which(cmd[0]) is None:
        raise SolverError(f"solver executable {cmd[0]!r} not found")
    start = time.monotonic()
    try:
        proc = subprocess.run(
            list(cmd),
            input=script.text,
            capture_output=True,
            text=True,
            timeout=timeout,
        )
    except subprocess.TimeoutExpired:
        return SolverVerdict("unknown", None, time.monotonic() - start)
    elapsed = time.monotonic() - start
    out = proc.stdout
    status = None
    rest_lines: list[str] = []
    for line in out.splitlines():
        stripped = line.strip()
        if status is None and stripped in ("sat", "unsat", "unknown"):
            status = stripped
            continue
        rest_lines.append(line)
    if status is None:
        raise SolverError(
            f"solver produced no verdict (exit {proc.returncode}): {out[:500]!r} {proc.stderr[:500]!r}"
        )
    if status == "sat":
        return SolverVerdict("sat", "\n".join(rest_lines), elapsed)
    return SolverVerdict(status, None, elapsed)


# ---------------------------------------------------------------------------
# Model block parsing (handles z3-style and bundled-solver output)


def _tokenize_model(text: str) -> list[str]:
    toks: list[str] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c in "()":
            toks.append(c)
            i += 1
            continue
        if c == '"':
            j = i + 1
            out = []
            while j < n:
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':
                        out.append('"')
                        j += 2
                        continue
                    break
                out.append(text[j])
                j += 1
            toks.append('"' + "".join(out))
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in ' \t\r\n()"':
            j += 1
        toks.append(text[i:j])
        i = j
    return toks


def _read_all(toks: list[str]):
    pos = 0

    def read():
        nonlocal pos
        t = toks[pos]
        pos += 1
        if t == "(":
            items = []
            while pos < len(toks) and toks[pos] != ")":
                items.append(read())
            pos += 1
            return items
        return t

    out = []
    while pos < len(toks):
        out.append(read())
    return out


def _value_of(sexp) -> object:
    if isinstance(sexp, str):
        if sexp.startswith('"'):
            return sexp[1:]
        if sexp == "true":
            return True
        if sexp == "false":
            return False
        if sexp.replace(".", "", 1).lstrip("-").isdigit():
            return Fraction(sexp) if "." in sexp else int(sexp)
        raise SolverError(f"unparseable model value {sexp!r}")
    if isinstance(sexp, list) and sexp:
        if sexp[0] == "-" and len(sexp) == 2:
            v = _value_of(sexp[1])
            return -v  # type: ignore[operator]
        if sexp[0] == "/" and len(sexp) == 3:
            a, b = _value_of(sexp[1]), _value_of(sexp[2])
            return Fraction(a) / Fraction(b)  # type: ignore[arg-type]
    raise SolverError(f"unparseable model value {sexp!r}")


def parse_model_block(raw: str) -> dict[str, object]:
    """Extract symbol -> value from a (get-model) block."""
    forms = _read_all(_tokenize_model(raw))
    defines = []

    def collect(form) -> None:
        if isinstance(form, list):
            if form and form[0] == "define-fun":
                defines.append(form)
            else:
                for item in form:
                    collect(item)

    for f in forms:
        collect(f)
    out: dict[str, object] = {}
    for d in defines:
        # (define-fun name () Sort value)
        if len(d) < 5:
            raise SolverError(f"malformed define-fun {d!r}")
        name, args, value = d[1], d[2], d[-1]
        if args != []:
            continue  # not a constant
        out[name] = _value_of(value)
    return out


# ---------------------------------------------------------------------------
# Witness extraction


@dataclass
class Witness:
    trace: ExecutionTrace
    initial_state: dict[str, object] = field(default_factory=dict)


def _decode_typed(value: object, type_kind: str, enum_values: list[str] | None, interning: dict[str, int] | None) -> object:
    if type_kind == "Enum":
        idx = int(value)  # type: ignore[arg-type]
        if enum_values is None or not (0 <= idx < len(enum_values)):
            raise SolverError(f"enum index {idx} out of range")
        return enum_values[idx]
    if type_kind == "Bool":
        return bool(value)
    if type_kind == "Int":
        return int(value)  # type: ignore[arg-type]
    if type_kind == "Real":
        f = Fraction(value)  # type: ignore[arg-type]
        return float(f)
    if type_kind == "String":
        if interning is not None:
            reverse = {v: k for k, v in interning.items()}
            idx = int(value)  # type: ignore[arg-type]
            return reverse.get(idx, f"<interned:{idx}>")
        return str(value)
    raise SolverError(f"cannot decode type {type_kind!r}")


def extract_witness(verdict: SolverVerdict, manifest: Manifest) -> Witness:
    """Decode a sat model into the execution trace it encodes: tool indices
    and argument values at each active step, in order, stopping at the first
    no-op. Also reports the solver-chosen initial state (scalar variables at
    boundary 0)."""
    if verdict.status != "sat":
        raise SolverError("witness extraction requires a sat verdict")
    model = parse_model_block(verdict.raw_model or "")

    def require(sym: str) -> object:
        if sym not in model:
            raise SolverError(f"model block is missing manifest symbol {sym!r}")
        return model[sym]

    # Argument metadata grouped per tool for step decoding.
    arg_meta: dict[str, list[tuple[str, str, str]]] = {}  # tool -> [(sym_prefixless param, type kind, enum key)]
    steps: list[Step] = []
    for i in range(manifest.horizon):
        t_val = int(require(f"t_{i}"))  # type: ignore[arg-type]
        if t_val == manifest.noop_index:
            break
        if not (0 <= t_val < len(manifest.tools)):
            raise SolverError(f"tool index {t_val} out of range at step {i}")
        tool = manifest.tools[t_val]
        args: dict[str, object] = {}
        for sym, meta in manifest.symbols.items():
            if meta.get("kind") == "arg" and meta.get("step") == i and meta.get("tool") == tool:
                enum_values = manifest.enums.get(f"arg:{tool}:{meta['param']}")
                args[meta["param"]] = _decode_typed(require(sym), meta["type"], enum_values, manifest.interning)
        steps.append(Step(tool, args))  # type: ignore[arg-type]
    initial: dict[str, object] = {}
    for sym, meta in manifest.symbols.items():
        if meta.get("kind") == "state" and meta.get("boundary") == 0 and not meta.get("path"):
            enum_values = manifest.enums.get(f"state:{meta['name']}")
            initial[meta["name"]] = _decode_typed(require(sym), meta["type"], enum_values, manifest.interning)
    return Witness(ExecutionTrace(tuple(steps)), initial)
