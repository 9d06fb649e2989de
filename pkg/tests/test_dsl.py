from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from tracebench.dsl import (
    BOOL,
    EnumType,
    Literal,
    Op,
    ParseError,
    Transition,
    TypeErrorList,
    VarRef,
    WorldModel,
    modified_vars,
    parse_model,
    print_canonical,
    type_check,
)
from tracebench.schema import Tool, ToolSchema

from conftest import PROCUREMENT_FRAGMENT


def test_parse_fragment_shape(procurement_schema):
    m = parse_model(PROCUREMENT_FRAGMENT)
    assert list(m.state_vars) == ["in_stock", "legacy_checked", "picker_assigned", "po_created"]
    assert m.tool_order() == [
        "check_inventory",
        "check_legacy_portal",
        "assign_warehouse_picker",
        "create_purchase_order",
    ]
    assert not m.constants


def test_parse_empty_model():
    m = parse_model("(model)")
    assert not m.state_vars and not m.transitions and not m.constants


def test_parse_error_at_end_of_input():
    with pytest.raises(ParseError) as exc:
        parse_model("(model (var x")
    assert ")" in exc.value.expected
    assert exc.value.offset == len("(model (var x")


@pytest.mark.parametrize(
    "text",
    [
        "(model))",
        "(model (frob x Bool))",
        "(model (var x (Enum)))",
        "(model (var x Bogus))",
        '(model (var x (Enum "A" "A")))',
        "(model (var x Bool) (var x Bool))",
        "(model (const c Int (+ 1 2)))",
        "(model (var x Bool) (transition t (params) (pre (= x",
    ],
)
def test_parse_rejections(text):
    with pytest.raises(ParseError):
        parse_model(text)


def test_comments_stripped():
    m = parse_model("(model ; trailing words (var y Bool)\n  (var x Bool))")
    assert list(m.state_vars) == ["x"]


def test_modified_vars_fragment(fragment_model):
    by_tool = {t.tool_name: t for t in fragment_model.transitions}
    assert modified_vars(by_tool["assign_warehouse_picker"]) == {"picker_assigned"}
    assert modified_vars(by_tool["check_legacy_portal"]) == {"legacy_checked"}
    assert modified_vars(by_tool["check_inventory"]) == {"in_stock"}
    assert modified_vars(Transition("t", (), (), ())) == set()


def test_modified_vars_subset_of_state(fragment_model):
    for t in fragment_model.transitions:
        assert modified_vars(t) <= set(fragment_model.state_vars)


def test_roundtrip_fragment(procurement_schema):
    m = parse_model(PROCUREMENT_FRAGMENT)
    printed = print_canonical(m)
    again = parse_model(printed)
    assert again == m
    assert print_canonical(again) == printed


def test_empty_model_prints_canonically():
    assert print_canonical(parse_model("(model)")) == "(model)\n"


def test_typecheck_rejects_non_bool_clause(procurement_schema):
    text = '(model (var booking_status (Enum "NONE" "CONFIRMED")) (transition check_inventory (params) (pre booking_status "NONE") (post)))'
    with pytest.raises(TypeErrorList) as exc:
        type_check(parse_model(text), procurement_schema)
    msgs = [str(e) for e in exc.value.errors]
    assert len([m for m in msgs if "must be Bool" in m]) == 2


def test_typecheck_vacuous_model(procurement_schema):
    m = type_check(parse_model("(model (var flag Bool))"), procurement_schema)
    assert m.checked


def test_typecheck_enum_literal_outside_domain(procurement_schema):
    text = '(model (var pay (Enum "PAID" "UNPAID")) (transition check_inventory (params) (pre (= pay "MAYBE")) (post)))'
    with pytest.raises(TypeErrorList) as exc:
        type_check(parse_model(text), procurement_schema)
    assert any("outside the enum domain" in str(e) for e in exc.value.errors)


def test_typecheck_catches_unknown_tool_and_unbound_param(procurement_schema):
    text = "(model (var x Bool) (transition mystery_tool (params) (pre) (post)))"
    with pytest.raises(TypeErrorList) as exc:
        type_check(parse_model(text), procurement_schema)
    assert any("unknown tool" in str(e) for e in exc.value.errors)

    text = "(model (var x Bool) (transition check_inventory (params) (pre (= x (param itm))) (post)))"
    with pytest.raises(TypeErrorList) as exc:
        type_check(parse_model(text), procurement_schema)
    assert any("does not name a bound parameter" in str(e) for e in exc.value.errors)


def test_typecheck_next_only_in_post(procurement_schema):
    text = "(model (var x Bool) (transition check_inventory (params) (pre (= (next x) true)) (post)))"
    with pytest.raises(TypeErrorList) as exc:
        type_check(parse_model(text), procurement_schema)
    assert any("only allowed in postconditions" in str(e) for e in exc.value.errors)


def test_typecheck_const_value_mismatch(procurement_schema):
    with pytest.raises(TypeErrorList):
        type_check(parse_model('(model (const c Int "nope"))'), procurement_schema)


def test_typecheck_duplicate_transition(procurement_schema):
    text = (
        "(model (var x Bool)"
        " (transition check_inventory (params) (pre) (post))"
        " (transition check_inventory (params) (pre) (post)))"
    )
    with pytest.raises(TypeErrorList) as exc:
        type_check(parse_model(text), procurement_schema)
    assert any("duplicate transition" in str(e) for e in exc.value.errors)


def test_typecheck_record_array(procurement_schema):
    text = """
    (model
      (var profile (Record (age Int) (tags (Array String))))
      (transition check_inventory
        (params (item_name itm))
        (pre (contains (field profile tags) (param itm))
             (> (field profile age) 18))
        (post)))
    """
    m = type_check(parse_model(text), procurement_schema)
    assert m.checked


# ---------------------------------------------------------------------------
# Generated-model properties


_ident = st.from_regex(r"[a-z][a-z0-9_]{0,6}", fullmatch=True).filter(
    lambda s: s not in ("true", "false", "model", "var", "const", "pre", "post", "not", "and", "or")
)


@st.composite
def _models(draw) -> tuple[WorldModel, ToolSchema]:
    n_vars = draw(st.integers(1, 3))
    names = draw(st.lists(_ident, min_size=n_vars, max_size=n_vars, unique=True))
    state_vars = {}
    for name in names:
        if draw(st.booleans()):
            state_vars[name] = BOOL
        else:
            vals = draw(st.lists(st.sampled_from(["A", "B", "C", "D"]), min_size=1, max_size=3, unique=True))
            state_vars[name] = EnumType(tuple(vals))
    tools = {}
    transitions = []
    for k in range(draw(st.integers(0, 2))):
        tool = f"tool_{k}"
        tools[tool] = Tool(tool, (), "read")
        var = draw(st.sampled_from(names))
        vt = state_vars[var]
        if vt == BOOL:
            pre = (Op("=", (VarRef(var), Literal.of(draw(st.booleans())))),)
        else:
            pre = (Op("=", (VarRef(var), Literal.of(draw(st.sampled_from(list(vt.values)))))),)
        transitions.append(Transition(tool, (), pre, ()))
    return WorldModel({}, state_vars, transitions), ToolSchema(tools)


@given(_models())
@settings(max_examples=60, deadline=None)
def test_roundtrip_generated_models(mw):
    model, schema = mw
    type_check(model, schema)
    printed = print_canonical(model)
    reparsed = parse_model(printed)
    assert reparsed == model
    assert print_canonical(reparsed) == printed


# ---------------------------------------------------------------------------
# Mutation fuzz: grammar violations are always rejected, never crash


def _mutate(text: str, rng: random.Random) -> str:
    ops = ["drop", "dup", "insert", "swap", "garbage"]
    op = rng.choice(ops)
    if not text:
        return "("
    i = rng.randrange(len(text))
    if op == "drop":
        return text[:i] + text[i + 1 :]
    if op == "dup":
        return text[:i] + text[i] + text[i:]
    if op == "insert":
        return text[:i] + rng.choice('()"xz9;. ') + text[i:]
    if op == "swap":
        j = rng.randrange(len(text))
        lo, hi = min(i, j), max(i, j)
        if lo == hi:
            return text
        return text[:lo] + text[hi] + text[lo + 1 : hi] + text[lo] + text[hi + 1 :]
    return text[:i] + rng.choice(["(var", "))", '"', "Enum", "(pre"]) + text[i:]


def test_mutation_fuzz_never_silently_accepts(procurement_schema):
    from tracebench.refsolver import Session
    from tracebench.smtc import compile_world, emit_world_query
    from tracebench.valuation import InitialValuation

    rng = random.Random(20240811)
    corpus = 0
    accepted = 0
    for _ in range(10_000):
        mutant = PROCUREMENT_FRAGMENT
        for _ in range(rng.randint(1, 3)):
            mutant = _mutate(mutant, rng)
        corpus += 1
        try:
            model = parse_model(mutant)
        except ParseError:
            continue
        try:
            type_check(model, procurement_schema)
        except TypeErrorList:
            continue
        # Accepted: must be a genuinely valid model, evidenced by a clean
        # round trip through the canonical printer, a second type check, and
        # a sort-error-free SMT compilation (typing soundness).
        accepted += 1
        printed = print_canonical(model)
        again = parse_model(printed)
        assert again == model
        type_check(again, procurement_schema)
        if accepted <= 50:
            we = compile_world(model, procurement_schema, 1, InitialValuation())
            Session(emit_world_query(we).text)  # builds every term; sort errors would raise
    assert corpus == 10_000
    assert accepted > 0  # the corpus does exercise the acceptance path
