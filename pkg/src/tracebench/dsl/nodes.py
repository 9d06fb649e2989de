"""AST node and type definitions for the world-model DSL."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

# ---------------------------------------------------------------------------
# Types


class DslType:
    """Base class for DSL types. Concrete kinds are the subclasses below."""

    kind: str = "?"

    def is_numeric(self) -> bool:
        return self.kind in ("Int", "Real")


@dataclass(frozen=True)
class IntType(DslType):
    kind: str = field(default="Int", init=False)


@dataclass(frozen=True)
class RealType(DslType):
    kind: str = field(default="Real", init=False)


@dataclass(frozen=True)
class BoolType(DslType):
    kind: str = field(default="Bool", init=False)


@dataclass(frozen=True)
class StringType(DslType):
    kind: str = field(default="String", init=False)


@dataclass(frozen=True)
class EnumType(DslType):
    values: tuple[str, ...]
    kind: str = field(default="Enum", init=False)

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("enum type needs at least one value")
        if len(set(self.values)) != len(self.values):
            raise ValueError("duplicate enum values: %r" % (self.values,))

    def index_of(self, value: str) -> int:
        return self.values.index(value)


@dataclass(frozen=True)
class RecordType(DslType):
    fields: tuple[tuple[str, DslType], ...]
    kind: str = field(default="Record", init=False)

    def __post_init__(self) -> None:
        names = [n for n, _ in self.fields]
        if len(set(names)) != len(names):
            raise ValueError("duplicate record fields: %r" % (names,))

    def field_type(self, name: str) -> DslType | None:
        for n, t in self.fields:
            if n == name:
                return t
        return None


@dataclass(frozen=True)
class ArrayType(DslType):
    element: DslType
    kind: str = field(default="Array", init=False)


INT = IntType()
REAL = RealType()
BOOL = BoolType()
STRING = StringType()

OPERATORS = ("+", "-", "*", "/", "=", "<", "<=", ">", ">=", "and", "or", "not", "=>")

RESERVED_HEADS = frozenset(
    {
        "model",
        "const",
        "var",
        "transition",
        "params",
        "pre",
        "post",
        "Enum",
        "Record",
        "Array",
        "param",
        "next",
        "field",
        "contains",
    }
) | frozenset(OPERATORS)


# ---------------------------------------------------------------------------
# Expressions
#
# ``inferred_type`` is filled in by the type checker and excluded from
# structural equality so parse(print(ast)) round-trips compare clean.


@dataclass(eq=True)
class Expr:
    inferred_type: DslType | None = field(default=None, compare=False, init=False, repr=False)


@dataclass(eq=True)
class VarRef(Expr):
    name: str


@dataclass(eq=True)
class ParamRef(Expr):
    name: str


@dataclass(eq=True)
class NextRef(Expr):
    name: str


LiteralValue = Union[int, float, bool, str]


@dataclass(eq=True)
class Literal(Expr):
    value: LiteralValue
    # bool is an int subclass in Python; keep the lexical kind explicit.
    lit_kind: str = "int"  # one of int, real, bool, string

    @staticmethod
    def of(value: LiteralValue) -> "Literal":
        if isinstance(value, bool):
            return Literal(value, "bool")
        if isinstance(value, int):
            return Literal(value, "int")
        if isinstance(value, float):
            return Literal(value, "real")
        return Literal(value, "string")


@dataclass(eq=True)
class Op(Expr):
    symbol: str
    args: tuple[Expr, ...]


@dataclass(eq=True)
class FieldAccess(Expr):
    record: Expr
    field_name: str


@dataclass(eq=True)
class Contains(Expr):
    array: Expr
    element: Expr


# ---------------------------------------------------------------------------
# Model structure


@dataclass(eq=True)
class Transition:
    tool_name: str
    param_binds: tuple[tuple[str, str], ...]  # (tool parameter name, local name)
    pre: tuple[Expr, ...]
    post: tuple[Expr, ...]

    def local_for_param(self, tool_param: str) -> str | None:
        for p, local in self.param_binds:
            if p == tool_param:
                return local
        return None

    def param_for_local(self, local: str) -> str | None:
        for p, loc in self.param_binds:
            if loc == local:
                return p
        return None


@dataclass(eq=True)
class WorldModel:
    """Parsed world model. ``type_check`` validates and annotates it in place
    of a separate typed representation; ``checked`` records that it passed."""

    constants: dict[str, tuple[DslType, Literal]]
    state_vars: dict[str, DslType]
    transitions: list[Transition]
    version: int = 0
    checked: bool = field(default=False, compare=False)

    def transition_for(self, tool: str) -> Transition | None:
        for t in self.transitions:
            if t.tool_name == tool:
                return t
        return None

    def tool_order(self) -> list[str]:
        return [t.tool_name for t in self.transitions]


def modified_vars(t: Transition) -> set[str]:
    """State variables written by ``t``: exactly those under a next-state
    reference in its postconditions. Everything else is carried forward."""
    out: set[str] = set()

    def walk(e: Expr) -> None:
        if isinstance(e, NextRef):
            out.add(e.name)
        elif isinstance(e, Op):
            for a in e.args:
                walk(a)
        elif isinstance(e, FieldAccess):
            walk(e.record)
        elif isinstance(e, Contains):
            walk(e.array)
            walk(e.element)

    for clause in t.post:
        walk(clause)
    return out
