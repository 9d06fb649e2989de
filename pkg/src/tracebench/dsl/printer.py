"""Canonical, whitespace-normalized printing of world models.

The printed form is the on-disk persistence format for resumable runs; it is
deterministic, and parse(print(m)) is structurally the identity.
"""
from __future__ import annotations

from .nodes import (
    ArrayType,
    Contains,
    DslType,
    EnumType,
    Expr,
    FieldAccess,
    Literal,
    NextRef,
    Op,
    ParamRef,
    RecordType,
    Transition,
    VarRef,
    WorldModel,
)


def escape_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def format_real(v: float) -> str:
    """Plain decimal rendering; the grammar has no scientific notation."""
    if v == int(v) and abs(v) < 1e15:
        return f"{int(v)}.0"
    text = repr(v)
    if "e" in text or "E" in text:
        text = f"{v:.17f}".rstrip("0")
        if text.endswith("."):
            text += "0"
    return text


def print_literal(lit: Literal) -> str:
    if lit.lit_kind == "bool":
        return "true" if lit.value else "false"
    if lit.lit_kind == "string":
        return escape_string(str(lit.value))
    if lit.lit_kind == "real":
        return format_real(float(lit.value))
    return str(lit.value)


def print_type(t: DslType) -> str:
    if isinstance(t, EnumType):
        return "(Enum " + " ".join(escape_string(v) for v in t.values) + ")"
    if isinstance(t, RecordType):
        return "(Record " + " ".join(f"({n} {print_type(ft)})" for n, ft in t.fields) + ")"
    if isinstance(t, ArrayType):
        return f"(Array {print_type(t.element)})"
    return t.kind


def print_expr(e: Expr) -> str:
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, ParamRef):
        return f"(param {e.name})"
    if isinstance(e, NextRef):
        return f"(next {e.name})"
    if isinstance(e, Literal):
        return print_literal(e)
    if isinstance(e, Op):
        return "(" + e.symbol + " " + " ".join(print_expr(a) for a in e.args) + ")"
    if isinstance(e, FieldAccess):
        return f"(field {print_expr(e.record)} {e.field_name})"
    if isinstance(e, Contains):
        return f"(contains {print_expr(e.array)} {print_expr(e.element)})"
    raise TypeError(f"unprintable expression {e!r}")


def _print_transition(t: Transition, indent: str) -> str:
    lines = [f"{indent}(transition {t.tool_name}"]
    binds = " ".join(f"({p} {local})" for p, local in t.param_binds)
    lines.append(f"{indent}  (params{' ' + binds if binds else ''})")
    for kind, clauses in (("pre", t.pre), ("post", t.post)):
        if not clauses:
            lines.append(f"{indent}  ({kind})")
        else:
            lines.append(f"{indent}  ({kind}")
            for c in clauses:
                lines.append(f"{indent}    {print_expr(c)}")
            lines.append(f"{indent}  )")
    lines.append(f"{indent})")
    return "\n".join(lines)


def print_canonical(m: WorldModel) -> str:
    if not m.constants and not m.state_vars and not m.transitions:
        return "(model)\n"
    lines = ["(model"]
    for name, (ctype, value) in m.constants.items():
        lines.append(f"  (const {name} {print_type(ctype)} {print_literal(value)})")
    for name, vtype in m.state_vars.items():
        lines.append(f"  (var {name} {print_type(vtype)})")
    for t in m.transitions:
        lines.append(_print_transition(t, "  "))
    lines.append(")")
    return "\n".join(lines) + "\n"
