"""S-expression parser for the world-model DSL.

Lexical rules:
  * comments run from ``;`` to end of line,
  * string literals are double-quoted with backslash escapes for quote and
    backslash only,
  * numerals start with a digit; a ``.`` makes them Real, otherwise Int,
  * ``true``/``false`` are Bool literals (case-sensitive),
  * any other run of non-whitespace, non-paren, non-quote characters that does
    not start with a digit is an identifier.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .nodes import (
    ArrayType,
    BOOL,
    Contains,
    DslType,
    EnumType,
    Expr,
    FieldAccess,
    INT,
    Literal,
    NextRef,
    Op,
    OPERATORS,
    ParamRef,
    REAL,
    RecordType,
    STRING,
    Transition,
    VarRef,
    WorldModel,
)


@dataclass
class ParseError(Exception):
    message: str
    offset: int
    expected: tuple[str, ...] = ()
    lexeme: str = ""

    def __str__(self) -> str:
        parts = [f"{self.message} at byte {self.offset}"]
        if self.lexeme:
            parts.append(f"near {self.lexeme!r}")
        if self.expected:
            parts.append("expected one of: " + ", ".join(self.expected))
        return "; ".join(parts)


@dataclass
class Token:
    kind: str  # lparen rparen ident int real bool string eof
    text: str
    value: object
    offset: int


_DELIMS = frozenset('()";') | frozenset(" \t\r\n")


def tokenize(text: str) -> list[Token]:
    toks: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in " \t\r\n":
            i += 1
            continue
        if c == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == "(":
            toks.append(Token("lparen", "(", None, i))
            i += 1
            continue
        if c == ")":
            toks.append(Token("rparen", ")", None, i))
            i += 1
            continue
        if c == '"':
            start = i
            i += 1
            out: list[str] = []
            while True:
                if i >= n:
                    raise ParseError("unterminated string literal", start, ('"',))
                ch = text[i]
                if ch == "\\":
                    if i + 1 >= n or text[i + 1] not in '"\\':
                        raise ParseError("bad string escape", i, ('\\"', "\\\\"))
                    out.append(text[i + 1])
                    i += 2
                elif ch == '"':
                    i += 1
                    break
                else:
                    out.append(ch)
                    i += 1
            toks.append(Token("string", text[start:i], "".join(out), start))
            continue
        # atom: run up to a delimiter
        start = i
        while i < n and text[i] not in _DELIMS:
            i += 1
        word = text[start:i]
        if word[0].isdigit():
            body = word
            if body.count(".") > 1 or body.strip("0123456789."):
                raise ParseError("malformed numeral", start, ("numeral",), word)
            if "." in body:
                if body.endswith(".") or body.startswith("."):
                    raise ParseError("malformed numeral", start, ("numeral",), word)
                toks.append(Token("real", word, float(body), start))
            else:
                toks.append(Token("int", word, int(body), start))
        elif word == "true":
            toks.append(Token("bool", word, True, start))
        elif word == "false":
            toks.append(Token("bool", word, False, start))
        else:
            toks.append(Token("ident", word, word, start))
    toks.append(Token("eof", "", None, n))
    return toks


@dataclass
class _Sexp:
    # Either an atom token or a list of _Sexp with the opening paren offset.
    token: Token | None = None
    items: list["_Sexp"] = field(default_factory=list)
    offset: int = 0

    @property
    def is_atom(self) -> bool:
        return self.token is not None

    def head(self) -> str | None:
        if self.items and self.items[0].is_atom and self.items[0].token.kind == "ident":
            return self.items[0].token.value  # type: ignore[return-value]
        return None


def _read_sexp(toks: list[Token], pos: int) -> tuple[_Sexp, int]:
    t = toks[pos]
    if t.kind == "lparen":
        items: list[_Sexp] = []
        pos += 1
        while True:
            nxt = toks[pos]
            if nxt.kind == "rparen":
                return _Sexp(items=items, offset=t.offset), pos + 1
            if nxt.kind == "eof":
                raise ParseError("unbalanced parentheses", nxt.offset, (")",))
            item, pos = _read_sexp(toks, pos)
            items.append(item)
    if t.kind == "rparen":
        raise ParseError("unexpected )", t.offset, ("(", "atom"))
    if t.kind == "eof":
        raise ParseError("unexpected end of input", t.offset, ("(", "atom"))
    return _Sexp(token=t, offset=t.offset), pos + 1


def _expect_ident(s: _Sexp, what: str) -> str:
    if not s.is_atom or s.token.kind != "ident":
        raise ParseError(f"expected {what}", s.offset, ("identifier",), _lexeme(s))
    return s.token.value  # type: ignore[return-value]


def _lexeme(s: _Sexp) -> str:
    return s.token.text if s.is_atom else "("


def parse_type(s: _Sexp) -> DslType:
    if s.is_atom:
        name = _expect_ident(s, "type")
        prim = {"Int": INT, "Real": REAL, "Bool": BOOL, "String": STRING}.get(name)
        if prim is None:
            raise ParseError("unknown type", s.offset, ("Int", "Real", "Bool", "String"), name)
        return prim
    head = s.head()
    if head == "Enum":
        values: list[str] = []
        for item in s.items[1:]:
            if not item.is_atom or item.token.kind != "string":
                raise ParseError("enum values must be string literals", item.offset, ('"..."',), _lexeme(item))
            values.append(item.token.value)  # type: ignore[arg-type]
        if not values:
            raise ParseError("empty enum", s.offset, ('"..."',))
        try:
            return EnumType(tuple(values))
        except ValueError as exc:
            raise ParseError(str(exc), s.offset) from None
    if head == "Record":
        fields: list[tuple[str, DslType]] = []
        for item in s.items[1:]:
            if item.is_atom or len(item.items) != 2:
                raise ParseError("record field must be (name type)", item.offset, ("(name type)",), _lexeme(item))
            fields.append((_expect_ident(item.items[0], "field name"), parse_type(item.items[1])))
        if not fields:
            raise ParseError("empty record", s.offset, ("(name type)",))
        try:
            return RecordType(tuple(fields))
        except ValueError as exc:
            raise ParseError(str(exc), s.offset) from None
    if head == "Array":
        if len(s.items) != 2:
            raise ParseError("array takes one element type", s.offset, ("(Array type)",))
        return ArrayType(parse_type(s.items[1]))
    raise ParseError("malformed type expression", s.offset, ("Enum", "Record", "Array"), head or "(")


def parse_expr(s: _Sexp) -> Expr:
    if s.is_atom:
        t = s.token
        if t.kind == "ident":
            return VarRef(t.value)  # bare identifier sugar for state var / constant
        if t.kind == "int":
            return Literal(t.value, "int")
        if t.kind == "real":
            return Literal(t.value, "real")
        if t.kind == "bool":
            return Literal(t.value, "bool")
        if t.kind == "string":
            return Literal(t.value, "string")
        raise ParseError("unexpected token in expression", s.offset, (), t.text)
    if not s.items:
        raise ParseError("empty expression", s.offset, ("operator",))
    head = s.head()
    if head == "param":
        if len(s.items) != 2:
            raise ParseError("param takes one name", s.offset, ("(param name)",))
        return ParamRef(_expect_ident(s.items[1], "parameter name"))
    if head == "next":
        if len(s.items) != 2:
            raise ParseError("next takes one name", s.offset, ("(next name)",))
        return NextRef(_expect_ident(s.items[1], "state variable name"))
    if head == "field":
        if len(s.items) != 3:
            raise ParseError("field takes expr and name", s.offset, ("(field expr name)",))
        return FieldAccess(parse_expr(s.items[1]), _expect_ident(s.items[2], "field name"))
    if head == "contains":
        if len(s.items) != 3:
            raise ParseError("contains takes two exprs", s.offset, ("(contains array element)",))
        return Contains(parse_expr(s.items[1]), parse_expr(s.items[2]))
    if head in OPERATORS:
        args = tuple(parse_expr(item) for item in s.items[1:])
        if not args:
            raise ParseError("operator needs operands", s.offset, ("expr",), head)
        return Op(head, args)
    raise ParseError("unknown expression head", s.offset, ("param", "next", "field", "contains") + OPERATORS, head or _lexeme(s.items[0]))


def _parse_transition(s: _Sexp) -> Transition:
    if len(s.items) < 5:
        raise ParseError(
            "transition needs name, params, pre, post", s.offset, ("(transition name (params ...) (pre ...) (post ...))",)
        )
    name = _expect_ident(s.items[1], "tool name")
    sections = s.items[2:]
    if len(sections) != 3:
        raise ParseError("transition has exactly params/pre/post sections", s.offset, ("(params ...)", "(pre ...)", "(post ...)"))
    expected = ["params", "pre", "post"]
    parsed: dict[str, _Sexp] = {}
    for sec, want in zip(sections, expected):
        if sec.is_atom or sec.head() != want:
            raise ParseError(f"expected ({want} ...)", sec.offset, (want,), _lexeme(sec))
        parsed[want] = sec
    binds: list[tuple[str, str]] = []
    for b in parsed["params"].items[1:]:
        if b.is_atom or len(b.items) != 2:
            raise ParseError("param bind must be (tool_param local)", b.offset, ("(tool_param local)",), _lexeme(b))
        binds.append((_expect_ident(b.items[0], "tool parameter"), _expect_ident(b.items[1], "local name")))
    pre = tuple(parse_expr(e) for e in parsed["pre"].items[1:])
    post = tuple(parse_expr(e) for e in parsed["post"].items[1:])
    return Transition(name, tuple(binds), pre, post)


def parse_model(text: str) -> WorldModel:
    """Parse DSL source into an (untyped) world model AST.

    Raises ParseError with a byte offset, the expected-token set, and the
    offending lexeme on any grammar violation.
    """
    toks = tokenize(text)
    sexp, pos = _read_sexp(toks, 0)
    trailing = toks[pos]
    if trailing.kind != "eof":
        raise ParseError("trailing input after model", trailing.offset, ("end of input",), trailing.text)
    if sexp.is_atom or sexp.head() != "model":
        raise ParseError("expected (model ...)", sexp.offset, ("model",), _lexeme(sexp))

    constants: dict[str, tuple[DslType, Literal]] = {}
    state_vars: dict[str, DslType] = {}
    transitions: list[Transition] = []
    for clause in sexp.items[1:]:
        if clause.is_atom:
            raise ParseError("model clause must be a list", clause.offset, ("const", "var", "transition"), _lexeme(clause))
        head = clause.head()
        if head == "const":
            if len(clause.items) != 4:
                raise ParseError("const needs name, type, value", clause.offset, ("(const name type value)",))
            name = _expect_ident(clause.items[1], "constant name")
            ctype = parse_type(clause.items[2])
            value = parse_expr(clause.items[3])
            if not isinstance(value, Literal):
                raise ParseError("const value must be a literal", clause.items[3].offset, ("literal",), _lexeme(clause.items[3]))
            if name in constants or name in state_vars:
                raise ParseError(f"duplicate declaration of {name}", clause.offset)
            constants[name] = (ctype, value)
        elif head == "var":
            if len(clause.items) != 3:
                raise ParseError("var needs name and type", clause.offset, ("(var name type)",))
            name = _expect_ident(clause.items[1], "variable name")
            if name in constants or name in state_vars:
                raise ParseError(f"duplicate declaration of {name}", clause.offset)
            state_vars[name] = parse_type(clause.items[2])
        elif head == "transition":
            transitions.append(_parse_transition(clause))
        else:
            raise ParseError("unknown model clause", clause.offset, ("const", "var", "transition"), head or _lexeme(clause.items[0] if clause.items else clause))
    return WorldModel(constants=constants, state_vars=state_vars, transitions=transitions)
