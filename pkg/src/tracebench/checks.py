"""Check grammar: parse, validate, and canonically serialize trace-level checks.

Surface syntax, one check per line (ids optional, assigned check_NNN in order):

    check_000: CALL check_inventory(item_name="Cisco Catalyst 9300")
    check_001: NO-CALL create_purchase_order()
    check_002: CALL a() OR CALL b()
    check_003: CALL create_purchase_order() FOLLOWS CALL check_legacy_portal()
    check_004: NO-CALL x() AFTER CALL y()

A bare tool name (with or without parentheses) is sugar for a CALL atom.
Missing arguments are wildcards; the atom matches any call to the tool whose
bound arguments all agree.

OR chains have no surface parentheses, so they parse right-associatively and
serialization flattens them; disjunction trees round-trip up to that
(semantics-preserving) associativity normalization.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Union

from .schema import ToolSchema
from .dsl.nodes import ArrayType, BoolType, EnumType, IntType, RealType, RecordType, StringType
from .dsl.printer import escape_string, format_real

ArgValue = Union[bool, int, float, str]


class CheckParseError(Exception):
    def __init__(self, message: str, line_no: int | None = None) -> None:
        self.line_no = line_no
        prefix = f"line {line_no}: " if line_no is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class ArgMap:
    bindings: tuple[tuple[str, ArgValue], ...] = ()

    @staticmethod
    def of(**kwargs: ArgValue) -> "ArgMap":
        return ArgMap(tuple(sorted(kwargs.items())))

    @staticmethod
    def from_dict(d: dict[str, ArgValue]) -> "ArgMap":
        return ArgMap(tuple(sorted(d.items())))

    def as_dict(self) -> dict[str, ArgValue]:
        return dict(self.bindings)

    def __bool__(self) -> bool:
        return bool(self.bindings)

    def items(self) -> Iterator[tuple[str, ArgValue]]:
        return iter(self.bindings)


@dataclass(frozen=True)
class CheckAtom:
    polarity: str  # "call" or "no_call"
    tool: str
    args: ArgMap = field(default_factory=ArgMap)


@dataclass(frozen=True)
class Atom:
    atom: CheckAtom


@dataclass(frozen=True)
class OrNode:
    left: "CheckNode"
    right: "CheckNode"


@dataclass(frozen=True)
class After:
    target: CheckAtom
    anchor: CheckAtom


@dataclass(frozen=True)
class Before:
    target: CheckAtom
    anchor: CheckAtom


@dataclass(frozen=True)
class Follows:
    call: CheckAtom
    anchor: CheckAtom


@dataclass(frozen=True)
class Precedes:
    call: CheckAtom
    anchor: CheckAtom


CheckNode = Union[Atom, OrNode, After, Before, Follows, Precedes]


@dataclass(frozen=True)
class Check:
    id: str
    node: CheckNode


@dataclass(frozen=True)
class CheckSet:
    checks: tuple[Check, ...] = ()
    version: int = 0

    def ids(self) -> list[str]:
        return [c.id for c in self.checks]

    def get(self, check_id: str) -> Check | None:
        for c in self.checks:
            if c.id == check_id:
                return c
        return None


def atoms_of(node: CheckNode) -> Iterator[CheckAtom]:
    if isinstance(node, Atom):
        yield node.atom
    elif isinstance(node, OrNode):
        yield from atoms_of(node.left)
        yield from atoms_of(node.right)
    elif isinstance(node, (After, Before)):
        yield node.target
        yield node.anchor
    elif isinstance(node, (Follows, Precedes)):
        yield node.call
        yield node.anchor


def mentioned_tools(cs: CheckSet) -> set[str]:
    """Tools explicitly named anywhere in the check set (targets and anchors);
    this is the focus set of the forward conflict query."""
    out: set[str] = set()
    for check in cs.checks:
        for atom in atoms_of(check.node):
            out.add(atom.tool)
    return out


# ---------------------------------------------------------------------------
# Parsing

_ID_RE = re.compile(r"^(?P<id>[A-Za-z_][\w\-]*)\s*:\s*(?P<rest>.*)$")
_TEMPORAL = ("FOLLOWS", "PRECEDES", "AFTER", "BEFORE")
_TOOL_RE = re.compile(r"[A-Za-z_][\w\-]*")


class _LineParser:
    def __init__(self, text: str, line_no: int, schema: ToolSchema) -> None:
        self.text = text
        self.pos = 0
        self.line_no = line_no
        self.schema = schema

    def error(self, msg: str) -> CheckParseError:
        return CheckParseError(msg, self.line_no)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek_keyword(self) -> str | None:
        self.skip_ws()
        for kw in ("NO-CALL", "CALL", "OR") + _TEMPORAL:
            if self.text.startswith(kw, self.pos):
                end = self.pos + len(kw)
                if end >= len(self.text) or not (self.text[end].isalnum() or self.text[end] in "_-"):
                    return kw
        return None

    def take_keyword(self, kw: str) -> None:
        self.skip_ws()
        if self.peek_keyword() != kw:
            raise self.error(f"expected {kw}")
        self.pos += len(kw)

    def parse_atom(self, default_polarity: str = "call") -> CheckAtom:
        kw = self.peek_keyword()
        polarity = default_polarity
        if kw == "CALL":
            self.take_keyword("CALL")
            polarity = "call"
        elif kw == "NO-CALL":
            self.take_keyword("NO-CALL")
            polarity = "no_call"
        elif kw is not None:
            raise self.error(f"expected an atom, found {kw}")
        self.skip_ws()
        m = _TOOL_RE.match(self.text, self.pos)
        if not m:
            raise self.error("expected a tool name")
        tool = m.group(0)
        self.pos = m.end()
        args = ArgMap()
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "(":
            args = self.parse_args(tool)
        return self.validate_atom(CheckAtom(polarity, tool, args))

    def parse_args(self, tool: str) -> ArgMap:
        assert self.text[self.pos] == "("
        self.pos += 1
        bindings: dict[str, ArgValue] = {}
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == ")":
            self.pos += 1
            return ArgMap()
        while True:
            self.skip_ws()
            m = _TOOL_RE.match(self.text, self.pos)
            if not m:
                raise self.error("expected a parameter name")
            name = m.group(0)
            self.pos = m.end()
            self.skip_ws()
            if self.pos >= len(self.text) or self.text[self.pos] != "=":
                raise self.error(f"expected = after parameter {name!r}")
            self.pos += 1
            value = self.parse_value(tool, name)
            if name in bindings:
                raise self.error(f"duplicate argument {name!r}")
            bindings[name] = value
            self.skip_ws()
            if self.pos < len(self.text) and self.text[self.pos] == ",":
                self.pos += 1
                continue
            if self.pos < len(self.text) and self.text[self.pos] == ")":
                self.pos += 1
                return ArgMap.from_dict(bindings)
            raise self.error("expected , or ) in argument list")

    def parse_value(self, tool: str, param: str) -> ArgValue:
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == '"':
            # quoted string with \" and \\ escapes
            out: list[str] = []
            i = self.pos + 1
            while True:
                if i >= len(self.text):
                    raise self.error("unterminated string value")
                c = self.text[i]
                if c == "\\" and i + 1 < len(self.text) and self.text[i + 1] in '"\\':
                    out.append(self.text[i + 1])
                    i += 2
                elif c == '"':
                    i += 1
                    break
                else:
                    out.append(c)
                    i += 1
            self.pos = i
            return self.coerce(tool, param, "".join(out), quoted=True)
        # unquoted: runs to the next comma/close-paren at depth 0, trimmed
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in ",)":
            self.pos += 1
        raw = self.text[start : self.pos].strip()
        if not raw:
            return self.coerce(tool, param, "", quoted=True)  # explicit empty binding
        return self.coerce(tool, param, raw, quoted=False)

    def coerce(self, tool: str, param: str, raw: str, quoted: bool) -> ArgValue:
        """Schema-directed typing of argument values. Quoted text is String;
        unquoted numerals and true/false resolve against the declared type."""
        t = self.schema.tools[tool].param_type(param) if tool in self.schema.tools else None
        if t is None:
            # Validation of the tool/param happens in validate_atom; parse leniently.
            return raw if quoted else _lex_value(raw)
        if isinstance(t, StringType):
            return raw
        if isinstance(t, EnumType):
            if raw not in t.values:
                raise self.error(f"{tool}.{param}: {raw!r} is outside the enum domain")
            return raw
        if quoted:
            raise self.error(f"{tool}.{param}: quoted string where {t.kind} expected")
        if isinstance(t, BoolType):
            if raw == "true":
                return True
            if raw == "false":
                return False
            raise self.error(f"{tool}.{param}: expected true/false, found {raw!r}")
        if isinstance(t, IntType):
            try:
                return int(raw)
            except ValueError:
                raise self.error(f"{tool}.{param}: expected an integer, found {raw!r}") from None
        if isinstance(t, RealType):
            try:
                return float(raw)
            except ValueError:
                raise self.error(f"{tool}.{param}: expected a number, found {raw!r}") from None
        if isinstance(t, (ArrayType, RecordType)):
            raise self.error(f"{tool}.{param}: composite-typed parameters cannot be pinned")
        raise self.error(f"{tool}.{param}: unsupported parameter type")

    def validate_atom(self, atom: CheckAtom) -> CheckAtom:
        if atom.tool not in self.schema.tools:
            raise self.error(f"unknown tool {atom.tool!r}")
        tool = self.schema.tools[atom.tool]
        for name, _ in atom.args.items():
            if tool.param_type(name) is None:
                raise self.error(f"tool {atom.tool!r} has no parameter {name!r}")
        return atom

    def parse_check_node(self) -> CheckNode:
        first = self.parse_atom()
        kw = self.peek_keyword()
        if kw in _TEMPORAL:
            self.take_keyword(kw)
            anchor = self.parse_atom()
            if anchor.polarity != "call":
                raise self.error(f"{kw} anchor must be a CALL atom")
            if not self.at_end():
                raise self.error("trailing input after temporal check")
            if kw == "FOLLOWS":
                if first.polarity != "call":
                    raise self.error("FOLLOWS requires call polarity")
                return Follows(first, anchor)
            if kw == "PRECEDES":
                if first.polarity != "call":
                    raise self.error("PRECEDES requires call polarity")
                return Precedes(first, anchor)
            if kw == "AFTER":
                return After(first, anchor)
            return Before(first, anchor)
        if kw == "OR":
            operands = [first]
            while self.peek_keyword() == "OR":
                self.take_keyword("OR")
                nxt = self.parse_atom()
                operands.append(nxt)
            if not self.at_end():
                raise self.error("trailing input after disjunction")
            node: CheckNode = Atom(operands[-1])
            for atom in reversed(operands[:-1]):
                node = OrNode(Atom(atom), node)
            return node
        if not self.at_end():
            raise self.error("trailing input after atom")
        return Atom(first)


_KEYWORDS = frozenset({"CALL", "NO-CALL", "OR", "AFTER", "BEFORE", "FOLLOWS", "PRECEDES"})


def parse_check_line(text: str, schema: ToolSchema, line_no: int | None = None) -> tuple[str | None, CheckNode]:
    """Parse one check line; returns (explicit id or None, node)."""
    text = text.strip()
    explicit_id: str | None = None
    m = _ID_RE.match(text)
    if m and m.group("id") not in _KEYWORDS:
        explicit_id = m.group("id")
        text = m.group("rest")
    parser = _LineParser(text, line_no or 0, schema)
    node = parser.parse_check_node()
    return explicit_id, node


def parse_check_set(text: str, schema: ToolSchema) -> CheckSet:
    """Parse a serialized check set (one check per line, # comments allowed)."""
    checks: list[Check] = []
    used_ids: set[str] = set()
    auto = 0
    for line_no, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        explicit_id, node = parse_check_line(stripped, schema, line_no)
        if explicit_id is None:
            while f"check_{auto:03d}" in used_ids:
                auto += 1
            explicit_id = f"check_{auto:03d}"
            auto += 1
        if explicit_id in used_ids:
            raise CheckParseError(f"duplicate check id {explicit_id!r}", line_no)
        used_ids.add(explicit_id)
        checks.append(Check(explicit_id, node))
    return CheckSet(tuple(checks))


# ---------------------------------------------------------------------------
# Serialization


def format_value(v: ArgValue) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return format_real(v)
    return escape_string(v)


def serialize_atom(atom: CheckAtom) -> str:
    kw = "CALL" if atom.polarity == "call" else "NO-CALL"
    args = ", ".join(f"{k}={format_value(v)}" for k, v in atom.args.items())
    return f"{kw} {atom.tool}({args})"


def serialize_node(node: CheckNode) -> str:
    if isinstance(node, Atom):
        return serialize_atom(node.atom)
    if isinstance(node, OrNode):
        return serialize_node(node.left) + " OR " + serialize_node(node.right)
    if isinstance(node, After):
        return serialize_atom(node.target) + " AFTER " + serialize_atom(node.anchor)
    if isinstance(node, Before):
        return serialize_atom(node.target) + " BEFORE " + serialize_atom(node.anchor)
    if isinstance(node, Follows):
        return serialize_atom(node.call) + " FOLLOWS " + serialize_atom(node.anchor)
    if isinstance(node, Precedes):
        return serialize_atom(node.call) + " PRECEDES " + serialize_atom(node.anchor)
    raise TypeError(f"unserializable node {node!r}")


def serialize_check_set(cs: CheckSet) -> str:
    return "".join(f"{c.id}: {serialize_node(c.node)}\n" for c in cs.checks)


def _lex_value(raw: str) -> ArgValue:
    if raw == "true":
        return True
    if raw == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def validate_check_set(cs: CheckSet, schema: ToolSchema) -> None:
    """Structural validation for check sets built programmatically (edits)."""
    seen: set[str] = set()
    for check in cs.checks:
        if check.id in seen:
            raise CheckParseError(f"duplicate check id {check.id!r}")
        seen.add(check.id)
        node = check.node
        if isinstance(node, (Follows, Precedes)):
            if node.call.polarity != "call" or node.anchor.polarity != "call":
                raise CheckParseError(f"{check.id}: follows/precedes operands must be call atoms")
        if isinstance(node, (After, Before)) and node.anchor.polarity != "call":
            raise CheckParseError(f"{check.id}: anchor must be a call atom")
        _validate_or_shape(node, check.id)
        for atom in atoms_of(node):
            if atom.tool not in schema.tools:
                raise CheckParseError(f"{check.id}: unknown tool {atom.tool!r}")
            tool = schema.tools[atom.tool]
            for name, _ in atom.args.items():
                if tool.param_type(name) is None:
                    raise CheckParseError(f"{check.id}: tool {atom.tool!r} has no parameter {name!r}")


def _validate_or_shape(node: CheckNode, check_id: str) -> None:
    if isinstance(node, OrNode):
        for side in (node.left, node.right):
            if not isinstance(side, (Atom, OrNode)):
                raise CheckParseError(f"{check_id}: OR nests only atoms or other ORs")
            _validate_or_shape(side, check_id)
