"""Solver-free grading of execution traces against check sets, the failure
taxonomy, and the aggregate pass metrics.

This is the deterministic twin of the SMT check encoding: grade pass must
coincide with pinned-trace satisfiability, a property the test suite enforces
on fuzz-generated pairs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .checks import After, Atom, Before, Check, CheckAtom, CheckNode, CheckSet, Follows, OrNode, Precedes
from .schema import ToolSchema
from .trace import Attempt, ExecutionTrace

CATEGORIES = (
    "missing_required_call",
    "missing_anchor",
    "forbidden_call",
    "ordering_violation",
    "compound_or",
)


class GradingError(Exception):
    pass


def _values_equal(a, b) -> bool:
    """Type-aware argument equality: 1 != "1", booleans only equal booleans,
    numeric comparison is exact."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, str) or isinstance(b, str):
        return isinstance(a, str) and isinstance(b, str) and a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return Fraction(a) == Fraction(b)
    return a == b


def step_matches(step, atom: CheckAtom) -> bool:
    """Bound arguments must all agree; unbound ones are wildcards. A bound
    argument missing from the step is a mismatch."""
    if step.tool != atom.tool:
        return False
    for name, value in atom.args.items():
        if name not in step.args or not _values_equal(step.args[name], value):
            return False
    return True


def match_indices(trace: ExecutionTrace, atom: CheckAtom) -> list[int]:
    return [i for i, step in enumerate(trace.steps) if step_matches(step, atom)]


@dataclass(frozen=True)
class CheckVerdict:
    check_id: str
    passed: bool
    category: str | None = None  # present iff failed
    witness_indices: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.passed and self.category is not None:
            raise ValueError("passing verdicts carry no failure category")
        if not self.passed and self.category not in CATEGORIES:
            raise ValueError(f"failing verdicts need a category, got {self.category!r}")


def _node_passes(node: CheckNode, trace: ExecutionTrace) -> tuple[bool, tuple[int, ...]]:
    if isinstance(node, Atom):
        hits = match_indices(trace, node.atom)
        if node.atom.polarity == "call":
            return (len(hits) > 0, tuple(hits[:1]))
        return (len(hits) == 0, tuple(hits))
    if isinstance(node, OrNode):
        left_ok, left_w = _node_passes(node.left, trace)
        if left_ok:
            return True, left_w
        return _node_passes(node.right, trace)
    if isinstance(node, After):
        anchors = match_indices(trace, node.anchor)
        offenders = []
        for j in match_indices(trace, node.target):
            has_before = any(i < j for i in anchors)
            wanted = node.target.polarity == "call"
            if has_before != wanted:
                offenders.append(j)
        return (not offenders, tuple(offenders))
    if isinstance(node, Before):
        anchors = match_indices(trace, node.anchor)
        offenders = []
        for j in match_indices(trace, node.target):
            has_after = any(i > j for i in anchors)
            wanted = node.target.polarity == "call"
            if has_after != wanted:
                offenders.append(j)
        return (not offenders, tuple(offenders))
    if isinstance(node, Follows):
        anchors = match_indices(trace, node.anchor)
        calls = match_indices(trace, node.call)
        for i in anchors:
            later = [j for j in calls if j > i]
            if later:
                return True, (i, later[0])
        return False, ()
    if isinstance(node, Precedes):
        calls = match_indices(trace, node.call)
        anchors = match_indices(trace, node.anchor)
        for i in calls:
            later = [j for j in anchors if j > i]
            if later:
                return True, (i, later[0])
        return False, ()
    raise GradingError(f"unsupported check node {node!r}")


def classify_failure(node: CheckNode, trace: ExecutionTrace) -> str:
    """Failure category for a check that failed on the trace. Precedence for
    ordering clauses: a missing anchor outranks a missing required call, which
    outranks a pure ordering violation."""
    if isinstance(node, Atom):
        return "missing_required_call" if node.atom.polarity == "call" else "forbidden_call"
    if isinstance(node, OrNode):
        return "compound_or"
    if isinstance(node, (After, Before)):
        if not match_indices(trace, node.anchor):
            return "missing_anchor"
        return "ordering_violation"
    if isinstance(node, (Follows, Precedes)):
        if not match_indices(trace, node.anchor):
            return "missing_anchor"
        if not match_indices(trace, node.call):
            return "missing_required_call"
        return "ordering_violation"
    raise GradingError(f"unsupported check node {node!r}")


def eval_check(check: Check, trace: ExecutionTrace) -> CheckVerdict:
    passed, witness = _node_passes(check.node, trace)
    if passed:
        return CheckVerdict(check.id, True, None, witness)
    return CheckVerdict(check.id, False, classify_failure(check.node, trace), witness)


@dataclass(frozen=True)
class GradeReport:
    verdicts: tuple[CheckVerdict, ...]
    passed: bool
    trace_length: int
    premature_write: bool | None  # None for crashed attempts
    crashed: bool = False

    @property
    def failure_categories(self) -> list[str]:
        return [v.category for v in self.verdicts if not v.passed]


def is_premature(trace: ExecutionTrace, schema: ToolSchema) -> bool:
    """True iff the first read-or-write-classified call is write-classified.
    An empty trace is not premature: no write occurs."""
    for step in trace.steps:
        if step.tool not in schema.tools:
            raise GradingError(f"tool {step.tool!r} has no read/write classification")
        return schema.style_of(step.tool) == "write"
    return False


def grade_trace(cs: CheckSet, trace: ExecutionTrace, schema: ToolSchema) -> GradeReport:
    verdicts = tuple(eval_check(c, trace) for c in cs.checks)
    return GradeReport(
        verdicts=verdicts,
        passed=all(v.passed for v in verdicts),
        trace_length=len(trace),
        premature_write=is_premature(trace, schema),
    )


def grade_attempt(cs: CheckSet, attempt: Attempt, schema: ToolSchema) -> GradeReport:
    """Crashed attempts (no parseable trace) grade as an overall fail with the
    crashed flag set and stay out of premature-write statistics."""
    if attempt.crashed:
        verdicts = tuple(eval_check(c, ExecutionTrace()) for c in cs.checks)
        return GradeReport(verdicts, False, 0, None, crashed=True)
    return grade_trace(cs, attempt.trace, schema)


# ---------------------------------------------------------------------------
# Aggregate metrics


@dataclass(frozen=True)
class AttemptMatrix:
    n: int  # attempts per case
    successes: tuple[tuple[str, int], ...]  # (case id, successful attempts)

    def __post_init__(self) -> None:
        for case_id, alpha in self.successes:
            if not 0 <= alpha <= self.n:
                raise ValueError(f"case {case_id!r}: {alpha} successes out of {self.n}")

    @staticmethod
    def from_dict(n: int, by_case: dict[str, int]) -> "AttemptMatrix":
        return AttemptMatrix(n, tuple(sorted(by_case.items())))


def pass_metrics(matrix: AttemptMatrix, k: int) -> tuple[Fraction, Fraction, Fraction]:
    """(pass@1, pass@k, pass^k) as exact rationals.

    pass@1 averages per-case success rates; pass@k uses the unbiased
    at-least-one estimator 1 - C(n-a, k)/C(n, k); pass^k uses the all-k
    estimator C(a, k)/C(n, k). Binomials over invalid ranges are zero.
    """
    n = matrix.n
    if not matrix.successes:
        raise GradingError("empty attempt matrix")
    if k > n or k < 1:
        raise GradingError(f"k={k} out of range for n={n}")
    total_1 = Fraction(0)
    total_k = Fraction(0)
    total_all = Fraction(0)
    denom = math.comb(n, k)
    for _, alpha in matrix.successes:
        total_1 += Fraction(alpha, n)
        total_k += 1 - Fraction(math.comb(n - alpha, k), denom)
        total_all += Fraction(math.comb(alpha, k), denom)
    count = len(matrix.successes)
    return total_1 / count, total_k / count, total_all / count


def premature_write_rate(traces: list[ExecutionTrace], schema: ToolSchema) -> Fraction:
    """Fraction of attempts whose first classified call is write-style.
    Callers exclude crashed attempts before calling."""
    if not traces:
        return Fraction(0)
    premature = sum(1 for t in traces if is_premature(t, schema))
    return Fraction(premature, len(traces))


def category_histogram(reports: list[GradeReport]) -> dict[str, int]:
    hist = {c: 0 for c in CATEGORIES}
    for r in reports:
        for cat in r.failure_categories:
            hist[cat] += 1
    return hist
