"""Assembly of solver scripts: forward conflict query, backward audit,
pinned-trace queries, and the full world-model query.

Every script is deterministic SMT-LIB 2 text plus the symbol manifest needed
to decode models back to steps, state variables, and arguments.
"""
from __future__ import annotations

from dataclasses import dataclass

from ..checks import CheckSet, mentioned_tools
from ..schema import ToolSchema
from ..trace import ExecutionTrace
from .checkenc import CheckCompileError, CheckEncoding
from .encode import EncodeError, Manifest, WorldEncoding, encode_check_value, s_and, s_eq, s_not

HEADER = ["(set-option :produce-models true)", "(set-logic ALL)"]


@dataclass
class SolverScript:
    text: str
    manifest: Manifest
    kind: str = "query"


def _assemble(we: WorldEncoding, formulas: list[str], kind: str) -> SolverScript:
    lines: list[str] = list(HEADER)
    lines.extend(we.decls)
    for f in we.structural:
        lines.append(f"(assert {f})")
    for f in we.initial:
        lines.append(f"(assert {f})")
    for f in formulas:
        lines.append(f"(assert {f})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return SolverScript("\n".join(lines) + "\n", we.manifest, kind)


def world_formulas(we: WorldEncoding, tools: list[str] | None = None) -> list[str]:
    """Pre and post+frame implications for the given tools (default: all), in
    transition order."""
    selected = we.manifest.tools if tools is None else tools
    out: list[str] = []
    for tool in we.manifest.tools:
        if tool in selected:
            out.extend(we.pre[tool])
    for tool in we.manifest.tools:
        if tool in selected:
            out.extend(we.post_and_frame[tool])
    return out


def emit_world_query(we: WorldEncoding, extra: list[str] | None = None) -> SolverScript:
    """Full bounded world-model encoding (plus optional extra assertions)."""
    return _assemble(we, world_formulas(we) + (extra or []), "world")


def emit_forward_query(we: WorldEncoding, ce: CheckEncoding, focus: set[str]) -> SolverScript:
    """Forward conflict query: checks hold, background tools and focus
    postconditions hold, and at least one focus precondition implication is
    violated. An empty focus precondition partition makes the query trivially
    unsatisfiable (the negation of an empty conjunction is false)."""
    for tool in sorted(focus):
        if tool not in we.manifest.tools:
            raise CheckCompileError(f"focus tool {tool!r} has no transition in the compiled model")
    formulas: list[str] = []
    formulas.extend(ce.formulas.values())
    bg = [t for t in we.manifest.tools if t not in focus]
    formulas.extend(world_formulas(we, bg))
    for tool in we.manifest.tools:
        if tool in focus:
            formulas.extend(we.post_and_frame[tool])
    pre_conj: list[str] = []
    for tool in we.manifest.tools:
        if tool in focus:
            pre_conj.extend(we.pre[tool])
    formulas.append(s_not(s_and(pre_conj)))
    return _assemble(we, formulas, "forward")


def emit_backward_query(we: WorldEncoding, ce: CheckEncoding, check_id: str) -> SolverScript:
    """Backward audit for one check: full world model, all other checks, and
    the negation of the audited check."""
    if check_id not in ce.formulas:
        raise CheckCompileError(f"unknown check id {check_id!r}")
    formulas = world_formulas(we)
    for cid, formula in ce.formulas.items():
        if cid != check_id:
            formulas.append(formula)
    formulas.append(s_not(ce.formulas[check_id]))
    return _assemble(we, formulas, "backward")


# ---------------------------------------------------------------------------
# Trace pinning


def pin_trace(we: WorldEncoding, schema: ToolSchema, trace: ExecutionTrace) -> list[str]:
    """Step equalities pinning a concrete trace: tool indices for every step
    (no-ops beyond the trace) and argument values for every scalar parameter
    of each called tool. Steps must carry complete argument maps."""
    if len(trace) > we.horizon:
        raise EncodeError(f"trace length {len(trace)} exceeds horizon {we.horizon}")
    pins: list[str] = []
    noop = str(we.manifest.noop_index)
    for i, step in enumerate(trace.steps):
        idx = we.manifest.tool_index(step.tool)
        pins.append(s_eq(we.t_sym(i), str(idx)))
        for pname, ptype in we.arg_params(step.tool):
            if pname not in step.args:
                raise EncodeError(f"step {i} ({step.tool}) is missing argument {pname!r}")
            value = encode_check_value(step.args[pname], ptype, we.manifest)
            pins.append(s_eq(we.arg_sym(i, step.tool, pname), value))
    for i in range(len(trace), we.horizon):
        pins.append(s_eq(we.t_sym(i), noop))
    return pins


def pin_state(we: WorldEncoding, boundary: int, values: dict[str, object]) -> list[str]:
    """Equalities pinning scalar state variables at a boundary (used to pin a
    witness's solver-chosen initial state)."""
    pins = []
    for name in sorted(values):
        slots = we.state_slots(name)
        if len(slots) != 1 or slots[0].path:
            raise EncodeError(f"cannot pin composite state variable {name!r}")
        t = slots[0].type
        pins.append(s_eq(we.state_sym(boundary, name), encode_check_value(values[name], t, we.manifest)))
    return pins


def emit_pinned_check_query(
    we: WorldEncoding, ce: CheckEncoding, schema: ToolSchema, trace: ExecutionTrace
) -> SolverScript:
    """Check encoding plus structural clauses with the trace pinned; sat iff
    the direct evaluator passes the trace."""
    formulas = list(ce.formulas.values()) + pin_trace(we, schema, trace)
    return _assemble(we, formulas, "pinned_checks")


def emit_pinned_world_query(
    we: WorldEncoding,
    schema: ToolSchema,
    trace: ExecutionTrace,
    state0: dict[str, object] | None = None,
) -> SolverScript:
    """Full world encoding with the trace (and optionally the initial state)
    pinned; unsat means the trace violates the model from that state."""
    formulas = world_formulas(we) + pin_trace(we, schema, trace)
    if state0:
        formulas.extend(pin_state(we, 0, state0))
    return _assemble(we, formulas, "pinned_world")


def forward_query_for(
    we: WorldEncoding, ce: CheckEncoding, cs: CheckSet
) -> SolverScript:
    return emit_forward_query(we, ce, mentioned_tools(cs))
