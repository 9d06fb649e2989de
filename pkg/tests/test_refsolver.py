from __future__ import annotations

import subprocess

import pytest

from tracebench.refsolver import Session, SolverInputError, solve_text


def test_empty_assertions_sat():
    assert solve_text("(check-sat)")[0] == "sat"


def test_contradiction_unsat():
    assert solve_text("(declare-const p Bool)(assert (and p (not p)))(check-sat)")[0] == "unsat"


def test_bounded_int_enumeration():
    status, model = solve_text(
        "(declare-const t Int)(assert (and (<= 0 t) (<= t 4)))(assert (not (= t 0)))(assert (< t 2))(check-sat)"
    )
    assert status == "sat" and model["t"] == 1
    status, _ = solve_text(
        "(declare-const t Int)(assert (and (<= 0 t) (<= t 1)))(assert (not (= t 0)))(assert (not (= t 1)))(check-sat)"
    )
    assert status == "unsat"


def test_string_equality_fragment():
    status, model = solve_text(
        '(declare-const a String)(declare-const b String)'
        '(assert (not (= a b)))(assert (not (= a "x")))(assert (not (= b "x")))(check-sat)'
    )
    assert status == "sat"
    assert model["a"] != model["b"] and model["a"] != "x" and model["b"] != "x"
    assert solve_text('(declare-const a String)(assert (= a "p"))(assert (= a "q"))(check-sat)')[0] == "unsat"


def test_real_intervals():
    status, model = solve_text("(declare-const x Real)(assert (< 1.0 x))(assert (< x 2.0))(check-sat)")
    assert status == "sat" and 1 < model["x"] < 2


def test_ite_and_distinct():
    status, model = solve_text(
        "(declare-const a Int)(declare-const b Int)"
        "(assert (and (<= 0 a) (<= a 1)))(assert (and (<= 0 b) (<= b 1)))"
        "(assert (distinct a b))(assert (= (ite (= a 0) 7 9) 7))(check-sat)"
    )
    assert status == "sat" and model["a"] == 0 and model["b"] == 1


def test_implication_chains_propagate():
    text = (
        "(declare-const t0 Int)(assert (and (<= 0 t0) (<= t0 1)))"
        "(declare-const p0 Bool)(declare-const p1 Bool)"
        "(assert (=> (= t0 0) p1))(assert (=> (= t0 1) (not p1)))"
        "(assert (not p1))(assert (= p0 p1))(check-sat)"
    )
    status, model = solve_text(text)
    assert status == "sat" and model["t0"] == 1 and model["p1"] is False


def test_unknown_on_inexact_exhaustion():
    # nonlinear coupling outside the covered fragment must not claim unsat
    status, _ = solve_text("(declare-const x Int)(assert (= (* x x) 10))(check-sat)")
    assert status == "unknown"


def test_unsupported_commands_error():
    with pytest.raises(SolverInputError):
        solve_text("(define-sort Pair () Int)")
    with pytest.raises(SolverInputError):
        solve_text("(declare-const x (Array Int Int))(check-sat)")


def test_session_reuse_isolated():
    session = Session("(declare-const p Bool)(declare-const q Bool)(assert (or p q))")
    assert session.check(["(not p)"])[0] == "sat"
    assert session.check(["(not p)", "(not q)"])[0] == "unsat"
    # base assertions intact after the unsat call
    status, model = session.check(["p"])
    assert status == "sat" and model["p"] is True


def test_cli_subprocess_roundtrip():
    script = (
        "(set-option :produce-models true)\n(set-logic ALL)\n"
        '(declare-const s String)(declare-const n Int)\n'
        '(assert (= s "hello world"))(assert (and (<= 0 n) (<= n 3)))(assert (> n 2))\n'
        "(check-sat)\n(get-model)\n"
    )
    proc = subprocess.run(["tracebench-solve"], input=script, capture_output=True, text=True)
    assert proc.returncode == 0
    out = proc.stdout.splitlines()
    assert out[0] == "sat"
    body = "\n".join(out[1:])
    assert '(define-fun s () String "hello world")' in body
    assert "(define-fun n () Int 3)" in body


def test_model_value_formats():
    status, model = solve_text(
        "(declare-const x Int)(assert (= x (- 0 5)))(check-sat)"
    )
    assert status == "sat" and model["x"] == -5
