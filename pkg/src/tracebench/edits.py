"""Typed edit language: the only mutation channel for world models, check
sets, and initial valuations.

Edits are applied atomically: the new artifact is re-validated before it is
returned, a failed edit raises EditRejected and leaves the original untouched
(artifacts are immutable values), and committed edits bump the version.
Human-provenance edits extend the lock table; automated edits against locked
regions are rejected.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .checks import Check, CheckParseError, CheckSet, parse_check_line, validate_check_set
from .dsl import ParseError, TypeErrorList, parse_expr_text, parse_type, type_check, tokenize, _read_sexp
from .dsl.nodes import WorldModel
from .schema import ToolSchema
from .valuation import InitialValuation, ValuationError, validate_valuation

WORLD_KINDS = ("add_pre_clause", "remove_pre_clause", "add_post_clause", "remove_post_clause", "add_state_var")
CHECK_KINDS = ("add_check", "remove_check", "replace_check")
INIT_KINDS = ("set_init_binding",)


class EditRejected(Exception):
    def __init__(self, reason: str, kind: str = "invalid") -> None:
        super().__init__(reason)
        self.kind = kind  # invalid | missing_referent | validation | lock


@dataclass(frozen=True)
class EditCommand:
    """Wire form of one typed edit. Expressions travel as DSL text, checks as
    check-line text, types as type-expression text."""

    target: str  # "world_model" | "check_set"
    kind: str
    tool: str | None = None
    index: int | None = None
    name: str | None = None
    var_type: str | None = None
    value: object | None = None
    check_text: str | None = None
    check_id: str | None = None
    expr: str | None = None
    rationale: str = ""

    def to_json(self) -> dict:
        out = {"target": self.target, "kind": self.kind, "rationale": self.rationale}
        for key in ("tool", "index", "name", "var_type", "value", "check_text", "check_id", "expr"):
            v = getattr(self, key)
            if v is not None:
                out[key] = v
        return out

    @staticmethod
    def from_json(data: dict) -> "EditCommand":
        known = {"target", "kind", "tool", "index", "name", "var_type", "value", "check_text", "check_id", "expr", "rationale"}
        unknown = set(data) - known
        if unknown:
            raise EditRejected(f"unknown edit fields: {sorted(unknown)}")
        if "target" not in data or "kind" not in data:
            raise EditRejected("edit needs target and kind")
        return EditCommand(
            target=data["target"],
            kind=data["kind"],
            tool=data.get("tool"),
            index=data.get("index"),
            name=data.get("name"),
            var_type=data.get("var_type"),
            value=data.get("value"),
            check_text=data.get("check_text"),
            check_id=data.get("check_id"),
            expr=data.get("expr"),
            rationale=data.get("rationale", ""),
        )


# ---------------------------------------------------------------------------
# Locks


@dataclass
class LockTable:
    """Human-edited regions: (kind, key) pairs. Checks lock by id, transitions
    by tool name, init bindings by variable name."""

    locked: set[tuple[str, str]] = field(default_factory=set)

    def lock(self, kind: str, key: str) -> None:
        self.locked.add((kind, key))

    def is_locked(self, kind: str, key: str) -> bool:
        return (kind, key) in self.locked

    def to_json(self) -> dict:
        out: dict[str, list[str]] = {"check": [], "transition": [], "init": []}
        for kind, key in sorted(self.locked):
            out.setdefault(kind, []).append(key)
        return out

    @staticmethod
    def from_json(data: dict) -> "LockTable":
        locked = {(kind, key) for kind, keys in data.items() for key in keys}
        return LockTable(locked)


def _lock_key(cmd: EditCommand) -> tuple[str, str]:
    if cmd.kind in WORLD_KINDS:
        return ("transition", cmd.tool or "")
    if cmd.kind in CHECK_KINDS:
        return ("check", cmd.check_id or _added_check_id(cmd))
    return ("init", cmd.name or "")


def _added_check_id(cmd: EditCommand) -> str:
    return cmd.check_id or ""


# ---------------------------------------------------------------------------
# Application


def _parse_type_text(text: str):
    toks = tokenize(text)
    sexp, pos = _read_sexp(toks, 0)
    if toks[pos].kind != "eof":
        raise ParseError("trailing input after type", toks[pos].offset)
    return parse_type(sexp)


def _apply_world_edit(model: WorldModel, cmd: EditCommand, schema: ToolSchema) -> WorldModel:
    transitions = list(model.transitions)
    constants = dict(model.constants)
    state_vars = dict(model.state_vars)

    def transition_index(tool: str) -> int:
        for i, t in enumerate(transitions):
            if t.tool_name == tool:
                return i
        raise EditRejected(f"no transition for tool {tool!r}", "missing_referent")

    if cmd.kind == "add_state_var":
        if not cmd.name or not cmd.var_type:
            raise EditRejected("add_state_var needs name and var_type")
        if cmd.name in state_vars or cmd.name in constants:
            raise EditRejected(f"{cmd.name!r} is already declared", "missing_referent")
        try:
            state_vars[cmd.name] = _parse_type_text(cmd.var_type)
        except ParseError as exc:
            raise EditRejected(f"bad type expression: {exc}", "validation") from None
    elif cmd.kind in ("add_pre_clause", "add_post_clause"):
        if not cmd.tool or not cmd.expr:
            raise EditRejected(f"{cmd.kind} needs tool and expr")
        i = transition_index(cmd.tool)
        try:
            clause = parse_expr_text(cmd.expr)
        except ParseError as exc:
            raise EditRejected(f"bad expression: {exc}", "validation") from None
        t = transitions[i]
        if cmd.kind == "add_pre_clause":
            transitions[i] = replace(t, pre=t.pre + (clause,))
        else:
            transitions[i] = replace(t, post=t.post + (clause,))
    elif cmd.kind in ("remove_pre_clause", "remove_post_clause"):
        if not cmd.tool or cmd.index is None:
            raise EditRejected(f"{cmd.kind} needs tool and index")
        i = transition_index(cmd.tool)
        t = transitions[i]
        clauses = list(t.pre if cmd.kind == "remove_pre_clause" else t.post)
        if not 0 <= cmd.index < len(clauses):
            raise EditRejected(f"clause index {cmd.index} out of range", "missing_referent")
        del clauses[cmd.index]
        if cmd.kind == "remove_pre_clause":
            transitions[i] = replace(t, pre=tuple(clauses))
        else:
            transitions[i] = replace(t, post=tuple(clauses))
    else:
        raise EditRejected(f"unknown world-model edit kind {cmd.kind!r}")

    candidate = WorldModel(constants, state_vars, transitions, version=model.version + 1)
    try:
        type_check(candidate, schema)
    except TypeErrorList as exc:
        raise EditRejected(f"edit fails type check: {exc}", "validation") from None
    return candidate


def _apply_check_edit(cs: CheckSet, cmd: EditCommand, schema: ToolSchema) -> CheckSet:
    checks = list(cs.checks)

    def check_index(check_id: str) -> int:
        for i, c in enumerate(checks):
            if c.id == check_id:
                return i
        raise EditRejected(f"no check with id {check_id!r}", "missing_referent")

    if cmd.kind == "add_check":
        if not cmd.check_text:
            raise EditRejected("add_check needs check_text")
        try:
            explicit_id, node = parse_check_line(cmd.check_text, schema)
        except CheckParseError as exc:
            raise EditRejected(f"bad check: {exc}", "validation") from None
        new_id = cmd.check_id or explicit_id
        if new_id is None:
            used = {c.id for c in checks}
            n = 0
            while f"check_{n:03d}" in used:
                n += 1
            new_id = f"check_{n:03d}"
        if any(c.id == new_id for c in checks):
            raise EditRejected(f"check id {new_id!r} already exists", "validation")
        checks.append(Check(new_id, node))
    elif cmd.kind == "remove_check":
        if not cmd.check_id:
            raise EditRejected("remove_check needs check_id")
        del checks[check_index(cmd.check_id)]
    elif cmd.kind == "replace_check":
        if not cmd.check_id or not cmd.check_text:
            raise EditRejected("replace_check needs check_id and check_text")
        i = check_index(cmd.check_id)
        try:
            _, node = parse_check_line(cmd.check_text, schema)
        except CheckParseError as exc:
            raise EditRejected(f"bad check: {exc}", "validation") from None
        checks[i] = Check(cmd.check_id, node)
    else:
        raise EditRejected(f"unknown check edit kind {cmd.kind!r}")

    candidate = CheckSet(tuple(checks), version=cs.version + 1)
    try:
        validate_check_set(candidate, schema)
    except CheckParseError as exc:
        raise EditRejected(f"edit fails validation: {exc}", "validation") from None
    return candidate


def _apply_init_edit(init: InitialValuation, cmd: EditCommand, model: WorldModel) -> InitialValuation:
    if cmd.kind != "set_init_binding":
        raise EditRejected(f"unknown init edit kind {cmd.kind!r}")
    if not cmd.name:
        raise EditRejected("set_init_binding needs name")
    bindings = dict(init.bindings)
    bindings[cmd.name] = cmd.value
    candidate = InitialValuation(tuple(sorted(bindings.items())), version=init.version + 1)
    try:
        validate_valuation(candidate, model)
    except ValuationError as exc:
        raise EditRejected(f"edit fails validation: {exc}", "validation") from None
    return candidate


def apply_edit(
    artifact,
    cmd: EditCommand,
    locks: LockTable,
    schema: ToolSchema,
    provenance: str = "automated",
    model: WorldModel | None = None,
):
    """Apply one typed edit and return the new artifact (version bumped).

    ``artifact`` is a WorldModel, CheckSet, or InitialValuation matching the
    command kind. Human edits are final: they extend the lock table, and any
    later automated edit touching the locked region is rejected. ``model`` is
    required for init edits (binding validation)."""
    if provenance not in ("automated", "human"):
        raise EditRejected(f"unknown provenance {provenance!r}")
    kind_ok = (
        (cmd.kind in WORLD_KINDS and isinstance(artifact, WorldModel))
        or (cmd.kind in CHECK_KINDS and isinstance(artifact, CheckSet))
        or (cmd.kind in INIT_KINDS and isinstance(artifact, InitialValuation))
    )
    if not kind_ok:
        raise EditRejected(f"edit kind {cmd.kind!r} does not apply to {type(artifact).__name__}")
    lock_kind, lock_key = _lock_key(cmd)
    if provenance == "automated" and lock_key and locks.is_locked(lock_kind, lock_key):
        raise EditRejected(f"{lock_kind} {lock_key!r} is human-locked", "lock")

    if isinstance(artifact, WorldModel):
        new_artifact = _apply_world_edit(artifact, cmd, schema)
    elif isinstance(artifact, CheckSet):
        new_artifact = _apply_check_edit(artifact, cmd, schema)
    else:
        if model is None:
            raise EditRejected("init edits need the world model for validation")
        new_artifact = _apply_init_edit(artifact, cmd, model)

    if provenance == "human":
        if cmd.kind == "add_check":
            lock_key = new_artifact.checks[-1].id
        if lock_key:
            locks.lock(lock_kind, lock_key)
    return new_artifact


def edits_to_json(edits: list[EditCommand]) -> str:
    return json.dumps([e.to_json() for e in edits], sort_keys=True)
