from .nodes import (  # noqa: F401
    ArrayType,
    BOOL,
    BoolType,
    Contains,
    DslType,
    EnumType,
    Expr,
    FieldAccess,
    INT,
    IntType,
    Literal,
    NextRef,
    Op,
    OPERATORS,
    ParamRef,
    REAL,
    RealType,
    RecordType,
    STRING,
    StringType,
    Transition,
    VarRef,
    WorldModel,
    modified_vars,
)
from .parser import ParseError, parse_expr, parse_model, parse_type, tokenize, _read_sexp  # noqa: F401
from .printer import escape_string, format_real, print_canonical, print_expr, print_literal, print_type  # noqa: F401
from .typecheck import TypeErrorList, TypeError_, type_check  # noqa: F401


def parse_expr_text(text: str):
    """Parse a single expression from DSL text (used by the typed edit language)."""
    toks = tokenize(text)
    sexp, pos = _read_sexp(toks, 0)
    if toks[pos].kind != "eof":
        raise ParseError("trailing input after expression", toks[pos].offset, ("end of input",), toks[pos].text)
    return parse_expr(sexp)
