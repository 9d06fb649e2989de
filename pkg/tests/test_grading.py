from __future__ import annotations

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from tracebench.checks import parse_check_set
from tracebench.grading import (
    AttemptMatrix,
    GradingError,
    category_histogram,
    eval_check,
    grade_attempt,
    grade_trace,
    is_premature,
    pass_metrics,
    premature_write_rate,
)
from tracebench.trace import Attempt, ExecutionTrace

from fuzzgen import make_checkset_and_trace

CASE1 = """\
CALL check_inventory(item_name="Dell UltraSharp U2723QE")
CALL assign_warehouse_picker(item_id="HWM2741", quantity=1)
CALL check_inventory() PRECEDES CALL assign_warehouse_picker()
NO-CALL create_purchase_order()
"""

COMPLIANT = ExecutionTrace.of(
    ("check_inventory", {"item_name": "Dell UltraSharp U2723QE"}),
    ("assign_warehouse_picker", {"item_id": "HWM2741", "quantity": 1}),
)


def test_case1_compliant_trace_passes(procurement_schema):
    cs = parse_check_set(CASE1, procurement_schema)
    report = grade_trace(cs, COMPLIANT, procurement_schema)
    assert report.passed
    assert all(v.passed for v in report.verdicts)
    assert not report.premature_write


def test_case1_purchase_order_fails_forbidden(procurement_schema):
    cs = parse_check_set(CASE1, procurement_schema)
    steps = [(s.tool, s.args) for s in COMPLIANT.steps]
    steps.append(("create_purchase_order", {"item_id": "HWM2741", "quantity": 1}))
    report = grade_trace(cs, ExecutionTrace.of(*steps), procurement_schema)
    assert not report.passed
    failing = [v for v in report.verdicts if not v.passed]
    assert len(failing) == 1
    assert failing[0].category == "forbidden_call"
    assert failing[0].witness_indices == (2,)


def test_follows_fails_on_empty_trace(procurement_schema):
    cs = parse_check_set("CALL create_purchase_order() FOLLOWS CALL check_legacy_portal()", procurement_schema)
    verdict = eval_check(cs.checks[0], ExecutionTrace())
    assert not verdict.passed
    assert verdict.category == "missing_anchor"


def test_vacuity_after_before_pass_empty(procurement_schema):
    cs = parse_check_set(
        "CALL check_inventory() AFTER CALL check_legacy_portal()\n"
        "NO-CALL create_purchase_order() BEFORE CALL check_inventory()\n",
        procurement_schema,
    )
    for check in cs.checks:
        assert eval_check(check, ExecutionTrace()).passed


def test_argument_matching_is_type_aware(procurement_schema):
    cs = parse_check_set("CALL assign_warehouse_picker(quantity=1)", procurement_schema)
    ok = ExecutionTrace.of(("assign_warehouse_picker", {"item_id": "X", "quantity": 1}))
    stringy = ExecutionTrace.of(("assign_warehouse_picker", {"item_id": "X", "quantity": "1"}))
    missing = ExecutionTrace.of(("assign_warehouse_picker", {"item_id": "X"}))
    assert eval_check(cs.checks[0], ok).passed
    assert not eval_check(cs.checks[0], stringy).passed
    assert not eval_check(cs.checks[0], missing).passed


def test_classification_precedence(procurement_schema):
    follows = parse_check_set(
        "CALL create_purchase_order() FOLLOWS CALL check_legacy_portal()", procurement_schema
    ).checks[0]
    # anchor missing outranks call missing
    trace_no_anchor = ExecutionTrace.of(("create_purchase_order", {"item_id": "A", "quantity": 1}))
    assert eval_check(follows, trace_no_anchor).category == "missing_anchor"
    # call missing with anchor present
    trace_no_call = ExecutionTrace.of(("check_legacy_portal", {"item_id": "A"}))
    assert eval_check(follows, trace_no_call).category == "missing_required_call"
    # both present, wrong order
    trace_misordered = ExecutionTrace.of(
        ("create_purchase_order", {"item_id": "A", "quantity": 1}),
        ("check_legacy_portal", {"item_id": "A"}),
    )
    assert eval_check(follows, trace_misordered).category == "ordering_violation"

    precedes = parse_check_set(
        "CALL check_inventory() PRECEDES CALL assign_warehouse_picker()", procurement_schema
    ).checks[0]
    misordered = ExecutionTrace.of(
        ("assign_warehouse_picker", {"item_id": "B", "quantity": 2}),
        ("check_inventory", {"item_name": "thing"}),
    )
    assert eval_check(precedes, misordered).category == "ordering_violation"

    no_call_after = parse_check_set(
        "NO-CALL create_purchase_order() AFTER CALL check_inventory()", procurement_schema
    ).checks[0]
    violating = ExecutionTrace.of(
        ("check_inventory", {"item_name": "x"}),
        ("create_purchase_order", {"item_id": "y", "quantity": 1}),
    )
    assert eval_check(no_call_after, violating).category == "ordering_violation"

    or_check = parse_check_set(
        "CALL check_inventory() OR CALL check_legacy_portal()", procurement_schema
    ).checks[0]
    assert eval_check(or_check, ExecutionTrace()).category == "compound_or"


def test_every_failure_gets_exactly_one_category(procurement_schema):
    for seed in range(60):
        cs, trace, _h = make_checkset_and_trace(
            seed, procurement_schema, list(procurement_schema.tools)
        )
        report = grade_trace(cs, trace, procurement_schema)
        for v in report.verdicts:
            assert v.passed == (v.category is None)
        hist = category_histogram([report])
        assert sum(hist.values()) == len([v for v in report.verdicts if not v.passed])


# ---------------------------------------------------------------------------
# Pass metrics: brute-force oracle first, formulas must agree exactly


def brute_force_metrics(n: int, alpha: int, k: int) -> tuple[Fraction, Fraction]:
    """Enumerate all C(n, k) attempt subsets of a case with alpha successes:
    pass@k = share of subsets with >= 1 success, pass^k = share with all k."""
    outcomes = [True] * alpha + [False] * (n - alpha)
    subsets = list(itertools.combinations(range(n), k))
    at_least_one = sum(1 for s in subsets if any(outcomes[i] for i in s))
    all_k = sum(1 for s in subsets if all(outcomes[i] for i in s))
    return Fraction(at_least_one, len(subsets)), Fraction(all_k, len(subsets))


def test_metrics_match_brute_force_exhaustively():
    for n in range(1, 9):
        for alpha in range(0, n + 1):
            for k in range(1, n + 1):
                matrix = AttemptMatrix.from_dict(n, {"case": alpha})
                p1, pk, phat = pass_metrics(matrix, k)
                bk, bhat = brute_force_metrics(n, alpha, k)
                assert p1 == Fraction(alpha, n)
                assert pk == bk, (n, alpha, k)
                assert phat == bhat, (n, alpha, k)


def test_metric_spot_values():
    matrix = AttemptMatrix.from_dict(5, {"case": 3})
    p1, p2, phat2 = pass_metrics(matrix, 2)
    assert p1 == Fraction(3, 5)
    assert p2 == Fraction(9, 10)
    assert phat2 == Fraction(3, 10)
    full = AttemptMatrix.from_dict(5, {"case": 5})
    assert pass_metrics(full, 5) == (Fraction(1), Fraction(1), Fraction(1))
    none = AttemptMatrix.from_dict(5, {"case": 0})
    _, pk, phat = pass_metrics(none, 3)
    assert pk == 0 and phat == 0


def test_metric_errors():
    with pytest.raises(GradingError):
        pass_metrics(AttemptMatrix.from_dict(3, {"c": 1}), 4)
    with pytest.raises(GradingError):
        pass_metrics(AttemptMatrix.from_dict(3, {}), 1)
    with pytest.raises(ValueError):
        AttemptMatrix.from_dict(3, {"c": 5})


@given(
    st.integers(1, 8).flatmap(
        lambda n: st.tuples(
            st.just(n),
            st.lists(st.integers(0, n), min_size=1, max_size=6),
            st.integers(1, n),
        )
    )
)
@settings(max_examples=120, deadline=None)
def test_metric_bounds_property(params):
    n, alphas, k = params
    matrix = AttemptMatrix.from_dict(n, {f"c{i}": a for i, a in enumerate(alphas)})
    p1, pk, phat = pass_metrics(matrix, k)
    assert 0 <= phat <= p1 <= pk <= 1


# ---------------------------------------------------------------------------
# Premature writes


def test_premature_examples(procurement_schema):
    read_first = ExecutionTrace.of(
        ("check_inventory", {"item_name": "x"}),
        ("assign_warehouse_picker", {"item_id": "y", "quantity": 1}),
    )
    write_first = ExecutionTrace.of(("assign_warehouse_picker", {"item_id": "y", "quantity": 1}))
    assert not is_premature(read_first, procurement_schema)
    assert is_premature(write_first, procurement_schema)
    assert not is_premature(ExecutionTrace(), procurement_schema)
    rate = premature_write_rate([read_first, write_first, ExecutionTrace()], procurement_schema)
    assert rate == Fraction(1, 3)


def test_premature_unclassified_tool_errors(procurement_schema):
    with pytest.raises(GradingError):
        is_premature(ExecutionTrace.of(("unknown_tool", {})), procurement_schema)


def test_crashed_attempt(procurement_schema):
    cs = parse_check_set(CASE1, procurement_schema)
    report = grade_attempt(cs, Attempt("case", None), procurement_schema)
    assert report.crashed and not report.passed
    assert report.premature_write is None


# ---------------------------------------------------------------------------
# Solver equivalence: grade pass == pinned-trace satisfiability


@pytest.mark.parametrize("seed", range(30))
def test_eval_matches_pinned_satisfiability(procurement_schema, golden_model, seed):
    from tracebench.refsolver import Session
    from tracebench.smtc import compile_checks, compile_world, emit_pinned_check_query
    from tracebench.valuation import InitialValuation

    tools = [t.tool_name for t in golden_model.transitions]
    cs, trace, h = make_checkset_and_trace(seed, procurement_schema, tools)
    we = compile_world(golden_model, procurement_schema, h, InitialValuation())
    ce = compile_checks(cs, we, procurement_schema)
    script = emit_pinned_check_query(we, ce, procurement_schema, trace)
    status, _ = Session(script.text).check([])
    assert status in ("sat", "unsat")
    graded = grade_trace(cs, trace, procurement_schema)
    assert (status == "sat") == graded.passed, f"seed {seed}: smt={status} eval={graded.passed}"
