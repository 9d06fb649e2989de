"""Per-sample cross-validation: forward conflict rounds with batched
world-model repair and per-scenario check repair, then the backward
over-restriction audit, with statuses, locks, and full on-disk round logs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .checks import CheckSet, mentioned_tools, serialize_check_set
from .dsl import print_canonical
from .dsl.nodes import WorldModel
from .edits import CHECK_KINDS, INIT_KINDS, WORLD_KINDS, EditCommand, EditRejected, LockTable, apply_edit
from .genport import GenPortError, GiveUp, generate_validated
from .schema import ToolSchema
from .smtc import (
    compile_checks,
    compile_world,
    emit_backward_query,
    emit_forward_query,
    world_formulas,
)
from .smtc.queries import _assemble, pin_state, pin_trace
from .solver import SolverVerdict, Witness, extract_witness, run_solver
from .valuation import InitialValuation

STATES = ("unvalidated", "forward_valid", "backward_valid", "validated", "awaiting_human", "discarded")


@dataclass
class SolverConfig:
    command: tuple[str, ...] | str | None = None  # None: bundled reference solver
    timeout: float = 30.0


@dataclass
class ValidationStatus:
    state: str = "unvalidated"
    round: int = 0
    history: list[dict] = field(default_factory=list)
    kept_checks: list[str] = field(default_factory=list)  # judge-kept despite a backward flag

    def record(self, round_no: int, query: str, verdict: str, edits: list[str]) -> None:
        self.history.append({"round": round_no, "query": query, "verdict": verdict, "edits": edits})

    def to_json(self) -> dict:
        return {
            "state": self.state,
            "round": self.round,
            "history": self.history,
            "kept_checks": self.kept_checks,
        }

    @staticmethod
    def from_json(data: dict) -> "ValidationStatus":
        st = ValidationStatus(data["state"], data["round"], list(data["history"]))
        st.kept_checks = list(data.get("kept_checks", []))
        return st


@dataclass
class ScenarioArtifacts:
    id: str
    prompt: str
    check_set: CheckSet
    init: InitialValuation
    locks: LockTable = field(default_factory=LockTable)
    status: ValidationStatus = field(default_factory=ValidationStatus)
    last_witness: dict | None = None  # decoded witness bundle for review
    suggestions: list[dict] = field(default_factory=list)  # judge proposals from the last failed round


def check_literal_values(cs: CheckSet) -> tuple:
    from .checks import atoms_of

    values = []
    for check in cs.checks:
        for atom in atoms_of(check.node):
            for _, v in atom.args.items():
                values.append(v)
    return tuple(values)


def _compile(model, schema, h, scenario):
    we = compile_world(model, schema, h, scenario.init, extra_literals=check_literal_values(scenario.check_set))
    ce = compile_checks(scenario.check_set, we, schema)
    return we, ce


def witness_bundle(witness: Witness) -> dict:
    return {
        "trace": witness.trace.to_json(),
        "initial_state": {k: witness.initial_state[k] for k in sorted(witness.initial_state)},
    }


def recheck_witness(we, ce, schema, witness: Witness, focus: set[str]) -> tuple[str, str]:
    """Independent solver calls re-checking a forward witness: it must satisfy
    the checks plus background and focus postconditions (sat) and violate the
    full world encoding from its own initial state (unsat)."""
    pins = pin_trace(we, schema, witness.trace) + pin_state(we, 0, witness.initial_state)
    formulas = list(ce.formulas.values())
    bg = [t for t in we.manifest.tools if t not in focus]
    formulas.extend(world_formulas(we, bg))
    for tool in we.manifest.tools:
        if tool in focus:
            formulas.extend(we.post_and_frame[tool])
    check_side = _assemble(we, formulas + pins, "witness_recheck_checks")
    world_side = _assemble(we, world_formulas(we) + pins, "witness_recheck_world")
    from .refsolver import Session

    return Session(check_side.text).check([])[0], Session(world_side.text).check([])[0]


# ---------------------------------------------------------------------------
# Judge payloads and validators


def _edit_list_validator(allowed_kinds) -> "callable":
    def validate(payload: dict) -> list[EditCommand]:
        if not isinstance(payload, dict) or "edits" not in payload:
            raise GenPortError("judge response must carry an 'edits' list")
        edits = [EditCommand.from_json(e) for e in payload["edits"]]
        for e in edits:
            if e.kind not in allowed_kinds:
                raise GenPortError(f"edit kind {e.kind!r} not allowed in this phase")
        return edits

    return validate


def _keep_remove_validator(payload: dict) -> dict:
    if not isinstance(payload, dict) or payload.get("action") not in ("keep", "remove", "replace"):
        raise GenPortError("backward decision must be keep, remove, or replace")
    if payload["action"] == "replace" and not payload.get("check_text"):
        raise GenPortError("replace decision needs check_text")
    return payload


# ---------------------------------------------------------------------------
# The engine


class SampleValidator:
    def __init__(
        self,
        model: WorldModel,
        schema: ToolSchema,
        scenarios: list[ScenarioArtifacts],
        h: int,
        solver: SolverConfig,
        judge,
        sample_id: str = "sample",
        world_locks: LockTable | None = None,
        run_dir: str | Path | None = None,
        repair_budget: int = 5,
    ) -> None:
        self.model = model
        self.schema = schema
        self.scenarios = scenarios
        self.h = h
        self.solver = solver
        self.judge = judge
        self.sample_id = sample_id
        self.world_locks = world_locks if world_locks is not None else LockTable()
        self.run_dir = Path(run_dir) if run_dir else None
        self.repair_budget = repair_budget

    # -- persistence -------------------------------------------------------

    def _persist(self, round_no: int, name: str, text: str) -> None:
        if self.run_dir is None:
            return
        out = self.run_dir / f"round_{round_no:02d}"
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")

    def _persist_json(self, round_no: int, name: str, obj) -> None:
        self._persist(round_no, name, json.dumps(obj, indent=2, sort_keys=True) + "\n")

    # -- solving -----------------------------------------------------------

    def _solve(self, script, round_no: int, label: str) -> SolverVerdict:
        self._persist(round_no, f"{label}.smt2", script.text)
        self._persist_json(round_no, f"{label}.manifest.json", script.manifest.to_json())
        verdict = run_solver(script, timeout=self.solver.timeout, command=self.solver.command)
        return verdict

    def _forward(
        self, scenario: ScenarioArtifacts, round_no: int, label_suffix: str = ""
    ) -> tuple[SolverVerdict, Witness | None]:
        we, ce = _compile(self.model, self.schema, self.h, scenario)
        focus = mentioned_tools(scenario.check_set)
        script = emit_forward_query(we, ce, focus)
        verdict = self._solve(script, round_no, f"fwd_{scenario.id}{label_suffix}")
        witness = None
        if verdict.status == "sat":
            witness = extract_witness(verdict, we.manifest)
            scenario.last_witness = witness_bundle(witness)
        return verdict, witness

    # -- rounds --------------------------------------------------------------

    def run(self, budget: int) -> dict[str, ValidationStatus]:
        pending = [s for s in self.scenarios if s.status.state in ("unvalidated", "awaiting_human")]
        for s in pending:
            s.status.state = "unvalidated"
        for round_no in range(1, budget + 1):
            conflicts = self._forward_round(round_no, pending)
            if not conflicts:
                break
        open_scenarios = []
        for s in pending:
            if s.status.state == "forward_valid":
                open_scenarios.append(s)
            else:
                s.status.state = "awaiting_human"
        for s in open_scenarios:
            self._backward_audit(s)
        return {s.id: s.status for s in self.scenarios}

    def _forward_round(self, round_no: int, pending: list[ScenarioArtifacts]) -> list[ScenarioArtifacts]:
        conflicts: list[tuple[ScenarioArtifacts, Witness | None]] = []
        for s in pending:
            s.status.round = round_no
            verdict, witness = self._forward(s, round_no)
            s.status.record(round_no, "forward", verdict.status, [])
            if verdict.status == "unsat":
                s.status.state = "forward_valid"
            else:
                s.status.state = "unvalidated"
                conflicts.append((s, witness))
        self._persist_json(
            round_no,
            "verdicts.json",
            {s.id: s.status.history[-1]["verdict"] for s in pending},
        )
        if not conflicts:
            return []

        # Batched world-model resolution first: one shared repair proposal.
        applied_world: list[str] = []
        with_witness = [(s, w) for s, w in conflicts if w is not None]
        if with_witness:
            payload = {
                "sample_id": self.sample_id,
                "world_model": print_canonical(self.model),
                "conflicts": [
                    {
                        "scenario_id": s.id,
                        "checks": serialize_check_set(s.check_set),
                        "witness": witness_bundle(w),
                    }
                    for s, w in with_witness
                ],
            }
            try:
                edits, _ = generate_validated(
                    "conflict_resolution",
                    payload,
                    self.judge,
                    _edit_list_validator(WORLD_KINDS),
                    self.repair_budget,
                )
            except (GiveUp, GenPortError) as exc:
                self._persist_json(round_no, "world_repair_error.json", {"error": str(exc)})
                edits = []
            for cmd in edits:
                try:
                    self.model = apply_edit(self.model, cmd, self.world_locks, self.schema, "automated")
                    applied_world.append(cmd.kind + ":" + (cmd.tool or cmd.name or ""))
                except EditRejected as exc:
                    applied_world.append(f"rejected({exc.kind}):{cmd.kind}")
            self._persist_json(round_no, "world_edits.json", {"applied": applied_world})

        # Re-evaluate conflicted scenarios against the repaired model, then
        # route residual conflicts to per-scenario check repair.
        still_conflicted: list[ScenarioArtifacts] = []
        for s, _ in conflicts:
            verdict, witness = self._forward(s, round_no, label_suffix="_postrepair")
            if verdict.status == "unsat":
                s.status.state = "forward_valid"
                s.status.record(round_no, "forward", "unsat", applied_world)
                continue
            applied_checks: list[str] = []
            if witness is not None:
                payload = {
                    "scenario_id": s.id,
                    "world_model": print_canonical(self.model),
                    "checks": serialize_check_set(s.check_set),
                    "witness": witness_bundle(witness),
                }
                try:
                    edits, _ = generate_validated(
                        "fix_repair",
                        payload,
                        self.judge,
                        _edit_list_validator(CHECK_KINDS + INIT_KINDS),
                        self.repair_budget,
                    )
                    s.suggestions = [e.to_json() for e in edits]
                except (GiveUp, GenPortError) as exc:
                    self._persist_json(round_no, f"check_repair_error_{s.id}.json", {"error": str(exc)})
                    edits = []
                for cmd in edits:
                    try:
                        if cmd.kind in INIT_KINDS:
                            s.init = apply_edit(s.init, cmd, s.locks, self.schema, "automated", model=self.model)
                        else:
                            s.check_set = apply_edit(s.check_set, cmd, s.locks, self.schema, "automated")
                        applied_checks.append(cmd.kind + ":" + (cmd.check_id or ""))
                    except EditRejected as exc:
                        applied_checks.append(f"rejected({exc.kind}):{cmd.kind}")
            s.status.record(round_no, "check_repair", "applied" if applied_checks else "none", applied_checks)
            still_conflicted.append(s)
        return still_conflicted

    def _backward_audit(self, s: ScenarioArtifacts) -> None:
        """Flag each check whose negation is world-compatible with the rest;
        the judge decides removal, replacement, or keep. The scenario passes
        when every remaining check is unflagged, kept, or human-locked."""
        rounds_left = len(s.check_set.checks) + 2
        while rounds_left > 0:
            rounds_left -= 1
            we, ce = _compile(self.model, self.schema, self.h, s)
            edited = False
            for check in list(s.check_set.checks):
                if check.id in s.status.kept_checks or s.locks.is_locked("check", check.id):
                    continue
                script = emit_backward_query(we, ce, check.id)
                verdict = self._solve(script, s.status.round, f"bwd_{s.id}_{check.id}")
                s.status.record(s.status.round, f"backward:{check.id}", verdict.status, [])
                if verdict.status == "unsat":
                    continue
                if verdict.status == "unknown":
                    s.status.state = "awaiting_human"
                    return
                witness = extract_witness(verdict, we.manifest)
                s.last_witness = witness_bundle(witness)
                payload = {
                    "scenario_id": s.id,
                    "check_id": check.id,
                    "checks": serialize_check_set(s.check_set),
                    "world_model": print_canonical(self.model),
                    "witness": witness_bundle(witness),
                }
                try:
                    decision, _ = generate_validated(
                        "locus_reassessment", payload, self.judge, _keep_remove_validator, self.repair_budget
                    )
                except (GiveUp, GenPortError):
                    s.status.state = "awaiting_human"
                    return
                if decision["action"] == "keep":
                    s.status.kept_checks.append(check.id)
                    s.status.record(s.status.round, f"backward:{check.id}", "kept", [])
                    continue
                kind = "remove_check" if decision["action"] == "remove" else "replace_check"
                cmd = EditCommand(
                    target="check_set",
                    kind=kind,
                    check_id=check.id,
                    check_text=decision.get("check_text"),
                    rationale=decision.get("rationale", ""),
                )
                try:
                    s.check_set = apply_edit(s.check_set, cmd, s.locks, self.schema, "automated")
                    s.status.record(s.status.round, f"backward:{check.id}", decision["action"], [kind])
                    edited = True
                    break  # recompile and re-audit from scratch
                except EditRejected:
                    s.status.kept_checks.append(check.id)  # locked or invalid proposal: keep as-is
            if edited:
                continue
            # Every check came back unsat, was judge-kept, or is human-locked.
            s.status.state = "backward_valid"
            s.status.record(s.status.round, "backward", "clear", [])
            s.status.state = "validated"
            return
        s.status.state = "awaiting_human"


def validate_sample(
    model: WorldModel,
    schema: ToolSchema,
    scenarios: list[ScenarioArtifacts],
    budget: int,
    h: int,
    solver: SolverConfig,
    judge,
    sample_id: str = "sample",
    world_locks: LockTable | None = None,
    run_dir: str | Path | None = None,
    repair_budget: int = 5,
) -> tuple[WorldModel, dict[str, ValidationStatus]]:
    """Run the full edit-and-validate loop for one sample's scenarios.
    Returns the (possibly repaired) model and per-scenario statuses; scenario
    artifacts are updated in place."""
    engine = SampleValidator(
        model, schema, scenarios, h, solver, judge, sample_id, world_locks, run_dir, repair_budget
    )
    statuses = engine.run(budget)
    return engine.model, statuses


def revalidate_scenario(
    model: WorldModel,
    schema: ToolSchema,
    scenario: ScenarioArtifacts,
    h: int,
    solver: SolverConfig,
) -> ValidationStatus:
    """Solver-only re-validation after a human edit: the forward query must be
    unsat and every backward query unsat unless the check is kept or locked."""
    we, ce = _compile(model, schema, h, scenario)
    focus = mentioned_tools(scenario.check_set)
    fwd = run_solver(emit_forward_query(we, ce, focus), timeout=solver.timeout, command=solver.command)
    scenario.status.record(scenario.status.round, "revalidate:forward", fwd.status, [])
    if fwd.status != "unsat":
        if fwd.status == "sat":
            scenario.last_witness = witness_bundle(extract_witness(fwd, we.manifest))
        scenario.status.state = "awaiting_human"
        return scenario.status
    for check in scenario.check_set.checks:
        if check.id in scenario.status.kept_checks or scenario.locks.is_locked("check", check.id):
            continue
        bwd = run_solver(emit_backward_query(we, ce, check.id), timeout=solver.timeout, command=solver.command)
        scenario.status.record(scenario.status.round, f"revalidate:backward:{check.id}", bwd.status, [])
        if bwd.status != "unsat":
            scenario.status.state = "awaiting_human"
            return scenario.status
    scenario.status.state = "validated"
    return scenario.status
