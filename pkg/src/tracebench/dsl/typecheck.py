"""Type checker for parsed world models.

Annotates every expression with its inferred type and enforces the structural
rules: Bool-typed top-level clauses, resolved names, schema-consistent
parameter binds, one transition per tool, and enum literals confined to their
matching domains.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

if TYPE_CHECKING:  # structural use only; the schema module imports dsl.nodes
    from ..schema import ToolSchema

from .nodes import (
    ArrayType,
    BOOL,
    BoolType,
    Contains,
    DslType,
    EnumType,
    Expr,
    FieldAccess,
    INT,
    Literal,
    NextRef,
    Op,
    ParamRef,
    REAL,
    RealType,
    RecordType,
    STRING,
    Transition,
    VarRef,
    WorldModel,
)


@dataclass
class TypeError_(Exception):
    message: str
    transition: str | None = None
    clause: str | None = None  # "pre" or "post"
    index: int | None = None
    expected: str | None = None
    actual: str | None = None

    def __str__(self) -> str:
        loc = ""
        if self.transition:
            loc = f" [{self.transition}"
            if self.clause is not None:
                loc += f" {self.clause}[{self.index}]"
            loc += "]"
        extra = ""
        if self.expected or self.actual:
            extra = f" (expected {self.expected}, got {self.actual})"
        return self.message + loc + extra


@dataclass
class TypeErrorList(Exception):
    errors: list[TypeError_] = field(default_factory=list)

    def __str__(self) -> str:
        return "; ".join(str(e) for e in self.errors)


def _type_name(t: DslType | None) -> str:
    if t is None:
        return "?"
    if isinstance(t, EnumType):
        return "Enum(" + ", ".join(t.values) + ")"
    if isinstance(t, RecordType):
        return "Record"
    if isinstance(t, ArrayType):
        return "Array(" + _type_name(t.element) + ")"
    return t.kind


def _literal_type(lit: Literal) -> DslType:
    return {"int": INT, "real": REAL, "bool": BOOL, "string": STRING}[lit.lit_kind]


def _comparable(a: DslType, b: DslType, a_expr: Expr, b_expr: Expr) -> bool:
    """Equality comparability. Enum values compare against string literals of
    their own domain only; numerics compare across Int/Real."""
    if a.is_numeric() and b.is_numeric():
        return True
    if isinstance(a, EnumType) and isinstance(b_expr, Literal) and b_expr.lit_kind == "string":
        return b_expr.value in a.values
    if isinstance(b, EnumType) and isinstance(a_expr, Literal) and a_expr.lit_kind == "string":
        return a_expr.value in b.values
    return a == b


class _Checker:
    def __init__(self, model: WorldModel, schema: ToolSchema) -> None:
        self.model = model
        self.schema = schema
        self.errors: list[TypeError_] = []
        self.transition: str | None = None
        self.clause: str | None = None
        self.index: int | None = None
        self.locals: dict[str, DslType] = {}

    def err(self, message: str, expected: str | None = None, actual: str | None = None) -> None:
        self.errors.append(
            TypeError_(message, self.transition, self.clause, self.index, expected, actual)
        )

    # -- expression typing ---------------------------------------------------

    def infer(self, e: Expr) -> DslType | None:
        t = self._infer(e)
        e.inferred_type = t
        return t

    def _infer(self, e: Expr) -> DslType | None:
        if isinstance(e, Literal):
            return _literal_type(e)
        if isinstance(e, VarRef):
            if e.name in self.model.state_vars:
                return self.model.state_vars[e.name]
            if e.name in self.model.constants:
                return self.model.constants[e.name][0]
            self.err(f"unbound identifier {e.name!r}")
            return None
        if isinstance(e, NextRef):
            if self.clause != "post":
                self.err(f"(next {e.name}) is only allowed in postconditions")
            if e.name in self.model.state_vars:
                return self.model.state_vars[e.name]
            self.err(f"(next {e.name}) does not name a state variable")
            return None
        if isinstance(e, ParamRef):
            if e.name in self.locals:
                return self.locals[e.name]
            self.err(f"(param {e.name}) does not name a bound parameter")
            return None
        if isinstance(e, FieldAccess):
            rt = self.infer(e.record)
            if rt is None:
                return None
            if not isinstance(rt, RecordType):
                self.err("field access on non-record", expected="Record", actual=_type_name(rt))
                return None
            ft = rt.field_type(e.field_name)
            if ft is None:
                self.err(f"record has no field {e.field_name!r}")
                return None
            return ft
        if isinstance(e, Contains):
            at = self.infer(e.array)
            et = self.infer(e.element)
            if at is None or et is None:
                return BOOL
            if not isinstance(at, ArrayType):
                self.err("contains on non-array", expected="Array", actual=_type_name(at))
                return BOOL
            if not _comparable(at.element, et, e.array, e.element):
                self.err(
                    "array element type mismatch",
                    expected=_type_name(at.element),
                    actual=_type_name(et),
                )
            return BOOL
        if isinstance(e, Op):
            return self._infer_op(e)
        self.err(f"unsupported expression node {type(e).__name__}")
        return None

    def _infer_op(self, e: Op) -> DslType | None:
        sym = e.symbol
        arg_types = [self.infer(a) for a in e.args]
        if sym in ("and", "or"):
            if len(e.args) < 2:
                self.err(f"{sym} needs at least two operands")
            for t in arg_types:
                if t is not None and not isinstance(t, BoolType):
                    self.err(f"{sym} operand must be Bool", expected="Bool", actual=_type_name(t))
            return BOOL
        if sym == "not":
            if len(e.args) != 1:
                self.err("not takes exactly one operand")
            for t in arg_types:
                if t is not None and not isinstance(t, BoolType):
                    self.err("not operand must be Bool", expected="Bool", actual=_type_name(t))
            return BOOL
        if sym == "=>":
            if len(e.args) != 2:
                self.err("=> takes exactly two operands")
            for t in arg_types:
                if t is not None and not isinstance(t, BoolType):
                    self.err("=> operand must be Bool", expected="Bool", actual=_type_name(t))
            return BOOL
        if sym == "=":
            if len(e.args) != 2:
                self.err("= takes exactly two operands")
                return BOOL
            a, b = arg_types
            if a is not None and b is not None and not _comparable(a, b, e.args[0], e.args[1]):
                if isinstance(a, EnumType) and isinstance(e.args[1], Literal):
                    self.err(
                        f"literal {e.args[1].value!r} is outside the enum domain",
                        expected=_type_name(a),
                        actual=repr(e.args[1].value),
                    )
                elif isinstance(b, EnumType) and isinstance(e.args[0], Literal):
                    self.err(
                        f"literal {e.args[0].value!r} is outside the enum domain",
                        expected=_type_name(b),
                        actual=repr(e.args[0].value),
                    )
                else:
                    self.err("= operands are not comparable", expected=_type_name(a), actual=_type_name(b))
            return BOOL
        if sym in ("<", "<=", ">", ">="):
            if len(e.args) != 2:
                self.err(f"{sym} takes exactly two operands")
            for t in arg_types:
                if t is not None and not t.is_numeric():
                    self.err(f"{sym} operand must be numeric", expected="Int or Real", actual=_type_name(t))
            return BOOL
        if sym in ("+", "-", "*"):
            if len(e.args) < (1 if sym == "-" else 2):
                self.err(f"{sym} needs more operands")
            out: DslType = INT
            for t in arg_types:
                if t is None:
                    continue
                if not t.is_numeric():
                    self.err(f"{sym} operand must be numeric", expected="Int or Real", actual=_type_name(t))
                elif isinstance(t, RealType):
                    out = REAL
            return out
        if sym == "/":
            if len(e.args) != 2:
                self.err("/ takes exactly two operands")
            for t in arg_types:
                if t is not None and not t.is_numeric():
                    self.err("/ operand must be numeric", expected="Int or Real", actual=_type_name(t))
            return REAL  # division is real division; ints coerce
        self.err(f"unknown operator {sym!r}")
        return None

    # -- model-level checks --------------------------------------------------

    def check_transition(self, t: Transition) -> None:
        self.transition = t.tool_name
        tool = self.schema.tools.get(t.tool_name)
        if tool is None:
            self.err(f"unknown tool {t.tool_name!r}")
        self.locals = {}
        seen_locals: set[str] = set()
        for tool_param, local in t.param_binds:
            if local in seen_locals:
                self.err(f"duplicate local name {local!r}")
            seen_locals.add(local)
            if tool is not None:
                ptype = tool.param_type(tool_param)
                if ptype is None:
                    self.err(f"tool {t.tool_name!r} has no parameter {tool_param!r}")
                else:
                    self.locals[local] = ptype
        for kind, clauses in (("pre", t.pre), ("post", t.post)):
            self.clause = kind
            for i, clause in enumerate(clauses):
                self.index = i
                ct = self.infer(clause)
                if ct is not None and not isinstance(ct, BoolType):
                    self.err("top-level clause must be Bool", expected="Bool", actual=_type_name(ct))
        self.clause = None
        self.index = None
        self.transition = None

    def run(self) -> None:
        m = self.model
        for name, (ctype, value) in m.constants.items():
            vt = _literal_type(value)
            if isinstance(ctype, EnumType):
                if value.lit_kind != "string" or value.value not in ctype.values:
                    self.err(f"constant {name!r} value outside enum domain", expected=_type_name(ctype), actual=repr(value.value))
            elif isinstance(ctype, (RecordType, ArrayType)):
                self.err(f"constant {name!r} cannot have a composite type")
            elif isinstance(ctype, RealType):
                if not vt.is_numeric():
                    self.err(f"constant {name!r} value type mismatch", expected="Real", actual=_type_name(vt))
            elif vt != ctype:
                self.err(f"constant {name!r} value type mismatch", expected=_type_name(ctype), actual=_type_name(vt))
        seen_tools: set[str] = set()
        for t in m.transitions:
            if t.tool_name in seen_tools:
                self.err(f"duplicate transition for tool {t.tool_name!r}")
            seen_tools.add(t.tool_name)
        for t in m.transitions:
            self.check_transition(t)


def type_check(model: WorldModel, schema: ToolSchema) -> WorldModel:
    """Validate ``model`` against ``schema``. Returns the model (annotated,
    ``checked`` set) or raises TypeErrorList with one entry per violation."""
    checker = _Checker(model, schema)
    checker.run()
    if checker.errors:
        raise TypeErrorList(checker.errors)
    model.checked = True
    return model
