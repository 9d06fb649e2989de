from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from tracebench.checks import parse_check_set, serialize_node
from tracebench.dsl import print_expr
from tracebench.edits import EditCommand, EditRejected, LockTable, apply_edit

from conftest import PROCUREMENT_GOLDEN, make_procurement_schema
from tracebench.dsl import parse_model, type_check

CHECKS_TEXT = """\
CALL check_inventory()
CALL assign_warehouse_picker(item_id="HWM2741", quantity=1)
NO-CALL create_purchase_order()
CALL check_inventory() PRECEDES CALL assign_warehouse_picker()
"""

_TOOLS = ["check_inventory", "check_legacy_portal", "assign_warehouse_picker", "create_purchase_order"]
_CHECK_IDS = ["check_000", "check_001", "check_002", "check_003", "ghost"]
_EXPRS = ["(= po_created false)", "(= in_stock true)", "(= nonexistent true)", "(= legacy_checked false)"]
_CHECK_TEXTS = [
    "CALL check_legacy_portal()",
    "NO-CALL create_purchase_order() AFTER CALL check_inventory()",
    "CALL bogus_tool()",
]


def _random_command(rng: random.Random) -> EditCommand:
    kind = rng.choice(
        [
            "add_pre_clause",
            "remove_pre_clause",
            "add_post_clause",
            "remove_post_clause",
            "add_state_var",
            "add_check",
            "remove_check",
            "replace_check",
        ]
    )
    if kind in ("add_pre_clause", "add_post_clause"):
        return EditCommand("world_model", kind, tool=rng.choice(_TOOLS), expr=rng.choice(_EXPRS))
    if kind in ("remove_pre_clause", "remove_post_clause"):
        return EditCommand("world_model", kind, tool=rng.choice(_TOOLS), index=rng.randint(0, 3))
    if kind == "add_state_var":
        return EditCommand("world_model", kind, name=f"extra_{rng.randint(0, 3)}", var_type="Bool")
    if kind == "add_check":
        return EditCommand("check_set", kind, check_text=rng.choice(_CHECK_TEXTS))
    if kind == "remove_check":
        return EditCommand("check_set", kind, check_id=rng.choice(_CHECK_IDS))
    return EditCommand("check_set", kind, check_id=rng.choice(_CHECK_IDS), check_text=rng.choice(_CHECK_TEXTS))


def _transition_snapshot(model, tool):
    t = model.transition_for(tool)
    if t is None:
        return None
    return (
        tuple(print_expr(c) for c in t.pre),
        tuple(print_expr(c) for c in t.post),
    )


def _check_snapshot(cs, check_id):
    c = cs.get(check_id)
    return None if c is None else serialize_node(c.node)


@given(st.integers(0, 999))
@settings(max_examples=25, deadline=None)
def test_adversarial_automated_edits_never_touch_locks(seed):
    rng = random.Random(seed)
    schema = make_procurement_schema()
    model = type_check(parse_model(PROCUREMENT_GOLDEN), schema)
    checks = parse_check_set(CHECKS_TEXT, schema)
    locks = LockTable()
    locked_tools = rng.sample(_TOOLS, k=rng.randint(0, 2))
    locked_checks = rng.sample(checks.ids(), k=rng.randint(0, 2))
    for tool in locked_tools:
        locks.lock("transition", tool)
    for cid in locked_checks:
        locks.lock("check", cid)

    frozen_transitions = {t: _transition_snapshot(model, t) for t in locked_tools}
    frozen_checks = {c: _check_snapshot(checks, c) for c in locked_checks}

    committed = 0
    for _ in range(120):
        cmd = _random_command(rng)
        try:
            if cmd.target == "world_model":
                model = apply_edit(model, cmd, locks, schema, provenance="automated")
            else:
                checks = apply_edit(checks, cmd, locks, schema, provenance="automated")
            committed += 1
        except EditRejected as exc:
            lock_key = (
                ("transition", cmd.tool) if cmd.target == "world_model" and cmd.kind != "add_state_var" else ("check", cmd.check_id)
            )
            if exc.kind == "lock":
                assert locks.is_locked(*lock_key)
        # locked regions stay byte-identical throughout
        for tool, snap in frozen_transitions.items():
            assert _transition_snapshot(model, tool) == snap, f"locked transition {tool} changed"
        for cid, snap in frozen_checks.items():
            assert _check_snapshot(checks, cid) == snap, f"locked check {cid} changed"
    # sanity: the adversarial stream does commit edits to unlocked regions
    if len(locked_tools) + len(locked_checks) < 4:
        assert committed > 0


def test_human_edit_then_automated_edit_sequence_end_to_end():
    schema = make_procurement_schema()
    model = type_check(parse_model(PROCUREMENT_GOLDEN), schema)
    locks = LockTable()
    human = EditCommand("world_model", "add_pre_clause", tool="create_purchase_order", expr="(= po_created false)")
    model = apply_edit(model, human, locks, schema, provenance="human")
    snap = _transition_snapshot(model, "create_purchase_order")
    blocked = 0
    for expr in _EXPRS[:2]:
        try:
            model = apply_edit(
                model,
                EditCommand("world_model", "add_pre_clause", tool="create_purchase_order", expr=expr),
                locks,
                schema,
                provenance="automated",
            )
        except EditRejected as exc:
            assert exc.kind == "lock"
            blocked += 1
    assert blocked == 2
    assert _transition_snapshot(model, "create_purchase_order") == snap
