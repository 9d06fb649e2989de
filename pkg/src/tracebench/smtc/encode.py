"""Bounded SMT compilation of typed world models.

For horizon h the encoder introduces, per step i in [0, h): an Int tool-index
variable (index |T| is the no-op), a Bool activity flag, and argument
variables for every scalar parameter of every transition tool; plus a state
vector per boundary b in [0, h]. Structural clauses pin constants, bound enum
domains, define activity, enforce the contiguous active prefix and the no-op
carry. Each transition contributes per-step implications for its
preconditions, postconditions, and the frame axiom over unmodified variables.

Composite state is flattened: record variables become one solver variable per
scalar field path; array variables become membership booleans over the finite
literal universe observed in the model, initial valuation, and checks
(`contains` compiles to lookups or disjunctions over that universe).
Everything is emitted as deterministic SMT-LIB 2 text with a symbol manifest
for witness decoding.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..dsl.nodes import (
    ArrayType,
    BoolType,
    Contains,
    DslType,
    EnumType,
    Expr,
    FieldAccess,
    IntType,
    Literal,
    NextRef,
    Op,
    ParamRef,
    RealType,
    RecordType,
    StringType,
    Transition,
    VarRef,
    WorldModel,
    modified_vars,
)
from ..schema import ToolSchema
from ..valuation import InitialValuation, validate_valuation

ArgValue = bool | int | float | str


class EncodeError(Exception):
    pass


# ---------------------------------------------------------------------------
# SMT-LIB term helpers


def s_and(terms: list[str]) -> str:
    if not terms:
        return "true"
    if len(terms) == 1:
        return terms[0]
    return "(and " + " ".join(terms) + ")"


def s_or(terms: list[str]) -> str:
    if not terms:
        return "false"
    if len(terms) == 1:
        return terms[0]
    return "(or " + " ".join(terms) + ")"


def s_not(t: str) -> str:
    return f"(not {t})"


def s_imp(a: str, b: str) -> str:
    return f"(=> {a} {b})"


def s_eq(a: str, b: str) -> str:
    return f"(= {a} {b})"


def smt_string(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def smt_int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def smt_real(v: float) -> str:
    if v < 0:
        return f"(- {smt_real(-v)})"
    if v == int(v) and abs(v) < 1e15:
        return f"{int(v)}.0"
    text = repr(v)
    if "e" in text or "E" in text:
        text = f"{v:.17f}".rstrip("0")
        if text.endswith("."):
            text += "0"
    return text


_SYMBOL_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_.-")


def sanitize(name: str) -> str:
    out = []
    for ch in name:
        out.append(ch if ch in _SYMBOL_OK else f"_x{ord(ch):02x}")
    return "".join(out)


# ---------------------------------------------------------------------------
# Scalar slots: composite state flattens to (path, scalar type) pairs


def scalar_sort(t: DslType) -> str:
    if isinstance(t, BoolType):
        return "Bool"
    if isinstance(t, IntType) or isinstance(t, EnumType):
        return "Int"
    if isinstance(t, RealType):
        return "Real"
    if isinstance(t, StringType):
        return "String"
    raise EncodeError(f"no scalar sort for {t!r}")


@dataclass(frozen=True)
class Slot:
    path: str  # "" for scalars, ".field" chains, ".field[k]" for membership
    type: DslType  # scalar type of the slot (membership slots are Bool)
    member_literal: ArgValue | None = None  # set for array membership slots


def _flatten(t: DslType, path: str, universe_for) -> list[Slot]:
    if isinstance(t, RecordType):
        out: list[Slot] = []
        for fname, ftype in t.fields:
            out.extend(_flatten(ftype, f"{path}.{fname}", universe_for))
        return out
    if isinstance(t, ArrayType):
        elem = t.element
        if isinstance(elem, (RecordType, ArrayType)):
            raise EncodeError("arrays of composite elements are outside the encoding scope")
        out = []
        for k, lit in enumerate(universe_for(path, elem)):
            out.append(Slot(f"{path}[{k}]", BoolType(), lit))
        return out
    return [Slot(path, t)]


# ---------------------------------------------------------------------------
# Manifest


@dataclass
class Manifest:
    horizon: int
    tools: list[str]  # transition order; index len(tools) is the no-op
    symbols: dict[str, dict] = field(default_factory=dict)
    enums: dict[str, list[str]] = field(default_factory=dict)  # enum key -> values
    interning: dict[str, int] | None = None

    @property
    def noop_index(self) -> int:
        return len(self.tools)

    def tool_index(self, tool: str) -> int:
        try:
            return self.tools.index(tool)
        except ValueError:
            raise EncodeError(f"tool {tool!r} has no transition in the compiled model") from None

    def to_json(self) -> dict:
        return {
            "horizon": self.horizon,
            "tools": self.tools,
            "symbols": self.symbols,
            "enums": self.enums,
            "interning": self.interning,
        }

    @staticmethod
    def from_json(data: dict) -> "Manifest":
        return Manifest(
            horizon=data["horizon"],
            tools=list(data["tools"]),
            symbols=dict(data["symbols"]),
            enums={k: list(v) for k, v in data["enums"].items()},
            interning=dict(data["interning"]) if data.get("interning") else None,
        )


@dataclass
class WorldEncoding:
    horizon: int
    decls: list[str]
    structural: list[str]
    initial: list[str]
    pre: dict[str, list[str]]  # tool -> per-step precondition implications
    post_and_frame: dict[str, list[str]]  # tool -> per-step post + frame implications
    manifest: Manifest
    model_version: int = 0
    _arg_slots: dict[str, list[tuple[str, DslType]]] = field(default_factory=dict)
    _state_slots: dict[str, list[Slot]] = field(default_factory=dict)

    # Symbol accessors -----------------------------------------------------

    def t_sym(self, i: int) -> str:
        return f"t_{i}"

    def act_sym(self, i: int) -> str:
        return f"act_{i}"

    def state_sym(self, b: int, var: str, path: str = "") -> str:
        return f"st{b}_{sanitize(var)}{sanitize(path)}"

    def arg_sym(self, i: int, tool: str, param: str) -> str:
        return f"arg{i}_{sanitize(tool)}_{sanitize(param)}"

    def const_sym(self, name: str) -> str:
        return f"cst_{sanitize(name)}"

    def arg_params(self, tool: str) -> list[tuple[str, DslType]]:
        return self._arg_slots.get(tool, [])

    def state_slots(self, var: str) -> list[Slot]:
        return self._state_slots[var]


def lower_value(value: ArgValue, t: DslType, interning: dict[str, int] | None = None) -> str:
    """Encode a concrete value at the given declared type."""
    if isinstance(t, EnumType):
        if not isinstance(value, str) or value not in t.values:
            raise EncodeError(f"enum value {value!r} outside domain {t.values}")
        return str(t.index_of(value))
    if isinstance(t, BoolType):
        return "true" if value else "false"
    if isinstance(t, IntType):
        if isinstance(value, bool) or not isinstance(value, int):
            raise EncodeError(f"expected Int value, got {value!r}")
        return smt_int(value)
    if isinstance(t, RealType):
        return smt_real(float(value))
    if isinstance(t, StringType):
        if not isinstance(value, str):
            raise EncodeError(f"expected String value, got {value!r}")
        if interning is not None:
            if value not in interning:
                raise EncodeError(f"string {value!r} missing from the interning table")
            return str(interning[value])
        return smt_string(value)
    raise EncodeError(f"cannot lower a value of type {t!r}")


# ---------------------------------------------------------------------------
# Expression compilation


@dataclass
class _Ctx:
    enc: WorldEncoding
    model: WorldModel
    schema: ToolSchema
    step: int
    transition: Transition | None

    def boundary(self, is_next: bool) -> int:
        return self.step + 1 if is_next else self.step


@dataclass
class _Composite:
    """Handle for a record/array-typed subexpression rooted at a state var."""

    var: str
    boundary: int
    path: str
    type: DslType


def _encode_expr(e: Expr, ctx: _Ctx):
    """Returns an SMT term string for scalar expressions or a _Composite."""
    enc = ctx.enc
    if isinstance(e, Literal):
        interning = enc.manifest.interning
        if e.lit_kind == "string":
            # Enum lowering happens in the comparison that consumes this
            # literal; a bare string literal lands here only at String type.
            if interning is not None:
                if e.value not in interning:
                    raise EncodeError(f"string {e.value!r} missing from the interning table")
                return str(interning[e.value])
            return smt_string(str(e.value))
        if e.lit_kind == "bool":
            return "true" if e.value else "false"
        if e.lit_kind == "real":
            return smt_real(float(e.value))
        return smt_int(int(e.value))
    if isinstance(e, VarRef):
        if e.name in ctx.model.constants:
            return enc.const_sym(e.name)
        t = ctx.model.state_vars[e.name]
        if isinstance(t, (RecordType, ArrayType)):
            return _Composite(e.name, ctx.boundary(False), "", t)
        return enc.state_sym(ctx.boundary(False), e.name)
    if isinstance(e, NextRef):
        t = ctx.model.state_vars[e.name]
        if isinstance(t, (RecordType, ArrayType)):
            return _Composite(e.name, ctx.boundary(True), "", t)
        return enc.state_sym(ctx.boundary(True), e.name)
    if isinstance(e, ParamRef):
        tr = ctx.transition
        if tr is None:
            raise EncodeError("parameter reference outside a transition")
        tool_param = tr.param_for_local(e.name)
        if tool_param is None:
            raise EncodeError(f"local {e.name!r} is not bound in transition {tr.tool_name!r}")
        ptype = ctx.schema.tools[tr.tool_name].param_type(tool_param)
        if isinstance(ptype, (RecordType, ArrayType)):
            raise EncodeError(f"composite-typed parameter {tool_param!r} is outside the encoding scope")
        return enc.arg_sym(ctx.step, tr.tool_name, tool_param)
    if isinstance(e, FieldAccess):
        base = _encode_expr(e.record, ctx)
        if not isinstance(base, _Composite) or not isinstance(base.type, RecordType):
            raise EncodeError("field access must be rooted at a record state variable")
        ftype = base.type.field_type(e.field_name)
        path = f"{base.path}.{e.field_name}"
        if isinstance(ftype, (RecordType, ArrayType)):
            return _Composite(base.var, base.boundary, path, ftype)
        return enc.state_sym(base.boundary, base.var, path)
    if isinstance(e, Contains):
        return _encode_contains(e, ctx)
    if isinstance(e, Op):
        return _encode_op(e, ctx)
    raise EncodeError(f"unsupported expression {e!r}")


def _membership_slots(comp: _Composite, ctx: _Ctx) -> list[Slot]:
    return [
        s
        for s in ctx.enc.state_slots(comp.var)
        if s.member_literal is not None and s.path.startswith(comp.path + "[")
    ]


def _encode_contains(e: Contains, ctx: _Ctx) -> str:
    arr = _encode_expr(e.array, ctx)
    if not isinstance(arr, _Composite) or not isinstance(arr.type, ArrayType):
        raise EncodeError("contains must be rooted at an array state variable")
    slots = _membership_slots(arr, ctx)
    elem = e.element
    if isinstance(elem, Literal):
        for s in slots:
            if s.member_literal == elem.value and type(s.member_literal) is type(elem.value):
                return ctx.enc.state_sym(arr.boundary, arr.var, s.path)
        return "false"  # literal outside the observed universe: never a member
    elem_term = _encode_expr(elem, ctx)
    if isinstance(elem_term, _Composite):
        raise EncodeError("contains element must be scalar")
    disjuncts = []
    elem_type = arr.type.element
    for s in slots:
        lit = lower_value(s.member_literal, elem_type, ctx.enc.manifest.interning)
        mem = ctx.enc.state_sym(arr.boundary, arr.var, s.path)
        disjuncts.append(s_and([s_eq(elem_term, lit), mem]))
    return s_or(disjuncts)


def _numeric(term: str, t: DslType | None, want_real: bool) -> str:
    if want_real and isinstance(t, IntType):
        return f"(to_real {term})"
    return term


def _encode_op(e: Op, ctx: _Ctx) -> str:
    sym = e.symbol
    if sym == "=":
        return _encode_equality(e.args[0], e.args[1], ctx)
    if sym in ("and", "or", "not", "=>"):
        parts = [_encode_expr(a, ctx) for a in e.args]
        if any(isinstance(p, _Composite) for p in parts):
            raise EncodeError(f"{sym} over composite operands")
        if sym == "not":
            return s_not(parts[0])
        if sym == "=>":
            return s_imp(parts[0], parts[1])
        return "(" + sym + " " + " ".join(parts) + ")"
    if sym in ("<", "<=", ">", ">=", "+", "-", "*", "/"):
        types = [a.inferred_type for a in e.args]
        want_real = sym == "/" or any(isinstance(t, RealType) for t in types)
        parts = []
        for a, t in zip(e.args, types):
            p = _encode_expr(a, ctx)
            if isinstance(p, _Composite):
                raise EncodeError(f"{sym} over composite operands")
            parts.append(_numeric(p, t, want_real))
        return "(" + sym + " " + " ".join(parts) + ")"
    raise EncodeError(f"unknown operator {sym!r}")


def _enum_domain_of(e: Expr) -> EnumType | None:
    t = e.inferred_type
    return t if isinstance(t, EnumType) else None


def _encode_equality(a: Expr, b: Expr, ctx: _Ctx) -> str:
    # Enum-vs-string-literal comparisons lower the literal to its
    # declaration-order index.
    ea = _enum_domain_of(a)
    eb = _enum_domain_of(b)
    if ea is not None and isinstance(b, Literal) and b.lit_kind == "string":
        lhs = _encode_expr(a, ctx)
        return s_eq(lhs, str(ea.index_of(str(b.value))))
    if eb is not None and isinstance(a, Literal) and a.lit_kind == "string":
        rhs = _encode_expr(b, ctx)
        return s_eq(rhs, str(eb.index_of(str(a.value))))
    pa = _encode_expr(a, ctx)
    pb = _encode_expr(b, ctx)
    if isinstance(pa, _Composite) or isinstance(pb, _Composite):
        return _composite_equality(pa, pb, ctx)
    ta, tb = a.inferred_type, b.inferred_type
    want_real = isinstance(ta, RealType) or isinstance(tb, RealType)
    return s_eq(_numeric(pa, ta, want_real), _numeric(pb, tb, want_real))


def _composite_equality(pa, pb, ctx: _Ctx) -> str:
    if not (isinstance(pa, _Composite) and isinstance(pb, _Composite)):
        raise EncodeError("composite compared against scalar")
    if pa.var != pb.var or pa.path != pb.path:
        raise EncodeError("composite equality is supported only between boundaries of one variable")
    conj = []
    prefix = pa.path
    for s in ctx.enc.state_slots(pa.var):
        if s.path == prefix or s.path.startswith(prefix + ".") or s.path.startswith(prefix + "["):
            conj.append(
                s_eq(
                    ctx.enc.state_sym(pa.boundary, pa.var, s.path),
                    ctx.enc.state_sym(pb.boundary, pb.var, s.path),
                )
            )
    return s_and(conj)


# ---------------------------------------------------------------------------
# World compilation


def _collect_literals(model: WorldModel, init: InitialValuation, extra: tuple[ArgValue, ...]) -> list[ArgValue]:
    found: list[ArgValue] = []

    def walk(e: Expr) -> None:
        if isinstance(e, Literal):
            found.append(e.value)
        elif isinstance(e, Op):
            for a in e.args:
                walk(a)
        elif isinstance(e, FieldAccess):
            walk(e.record)
        elif isinstance(e, Contains):
            walk(e.array)
            walk(e.element)

    for t in model.transitions:
        for clause in t.pre + t.post:
            walk(clause)
    for _, value in init.bindings:
        found.append(value)
    found.extend(extra)
    return found


def compile_world(
    model: WorldModel,
    schema: ToolSchema,
    h: int,
    init: InitialValuation,
    extra_literals: tuple[ArgValue, ...] = (),
    intern_strings: bool = False,
) -> WorldEncoding:
    """Compile a type-checked model into its bounded encoding at horizon h.

    Output is byte-identical for identical inputs. ``extra_literals`` feeds
    the array-membership universe (callers pass the check set's argument
    values); ``intern_strings`` switches String sorts to interned integers for
    solvers without string support.
    """
    if not model.checked:
        raise EncodeError("model must be type-checked before compilation")
    if h < 1:
        raise EncodeError("horizon must be at least 1")
    for t in model.transitions:
        if t.tool_name not in schema.tools:
            raise EncodeError(f"transition tool {t.tool_name!r} missing from schema")
    validate_valuation(init, model)

    tools = model.tool_order()
    noop = len(tools)
    manifest = Manifest(horizon=h, tools=list(tools))

    interning: dict[str, int] | None = None
    all_literals = _collect_literals(model, init, extra_literals)
    if intern_strings:
        strings = sorted({v for v in all_literals if isinstance(v, str)})
        interning = {s: k for k, s in enumerate(strings)}
        manifest.interning = interning

    enc = WorldEncoding(
        horizon=h,
        decls=[],
        structural=[],
        initial=[],
        pre={t: [] for t in tools},
        post_and_frame={t: [] for t in tools},
        manifest=manifest,
        model_version=model.version,
    )

    def universe_for(path: str, elem: DslType) -> list[ArgValue]:
        if isinstance(elem, EnumType):
            return list(elem.values)
        if isinstance(elem, StringType):
            return sorted({v for v in all_literals if isinstance(v, str)})
        if isinstance(elem, IntType):
            return sorted({v for v in all_literals if isinstance(v, int) and not isinstance(v, bool)})
        if isinstance(elem, RealType):
            return sorted({float(v) for v in all_literals if isinstance(v, (int, float)) and not isinstance(v, bool)})
        if isinstance(elem, BoolType):
            return [False, True]
        raise EncodeError(f"unsupported array element type {elem!r}")

    # Slot layout per state variable (deterministic: declaration order).
    for var, vtype in model.state_vars.items():
        enc._state_slots[var] = _flatten(vtype, "", universe_for)

    # Argument slots per transition tool: scalar schema parameters only.
    for tool in tools:
        slots: list[tuple[str, DslType]] = []
        for p in schema.tools[tool].params:
            if not isinstance(p.type, (RecordType, ArrayType)):
                slots.append((p.name, p.type))
        enc._arg_slots[tool] = slots

    def declare(sym: str, sort: str, meta: dict) -> None:
        if sym in manifest.symbols:
            raise EncodeError(f"symbol collision: {sym}")
        manifest.symbols[sym] = meta
        enc.decls.append(f"(declare-const {sym} {sort})")

    def slot_sort(t: DslType) -> str:
        if isinstance(t, StringType) and interning is not None:
            return "Int"
        return scalar_sort(t)

    # Constants ------------------------------------------------------------
    for name, (ctype, value) in model.constants.items():
        sym = enc.const_sym(name)
        declare(sym, slot_sort(ctype), {"kind": "const", "name": name, "type": ctype.kind})
        if isinstance(ctype, EnumType):
            manifest.enums[f"const:{name}"] = list(ctype.values)
        enc.structural.append(s_eq(sym, lower_value(value.value, ctype, interning)))

    # Boundaries and steps, interleaved in execution order. Declaration
    # order doubles as the search order for solvers that honor it, so state
    # at boundary b precedes step b which precedes boundary b+1.
    def declare_boundary(b: int) -> None:
        for var in model.state_vars:
            for slot in enc.state_slots(var):
                sym = enc.state_sym(b, var, slot.path)
                meta = {"kind": "state", "boundary": b, "name": var, "path": slot.path, "type": slot.type.kind}
                if slot.member_literal is not None:
                    meta["member_literal"] = slot.member_literal
                declare(sym, slot_sort(slot.type), meta)
                if isinstance(slot.type, EnumType):
                    manifest.enums[f"state:{var}{slot.path}"] = list(slot.type.values)
                    enc.structural.append(s_and([f"(<= 0 {sym})", f"(<= {sym} {len(slot.type.values) - 1})"]))

    declare_boundary(0)
    for i in range(h):
        t_sym, act = enc.t_sym(i), enc.act_sym(i)
        declare(t_sym, "Int", {"kind": "tool_index", "step": i})
        declare(act, "Bool", {"kind": "active", "step": i})
        enc.structural.append(s_and([f"(<= 0 {t_sym})", f"(<= {t_sym} {noop})"]))
        enc.structural.append(s_eq(act, s_not(s_eq(t_sym, str(noop)))))
        for tool in tools:
            for pname, ptype in enc.arg_params(tool):
                sym = enc.arg_sym(i, tool, pname)
                declare(sym, slot_sort(ptype), {"kind": "arg", "step": i, "tool": tool, "param": pname, "type": ptype.kind})
                if isinstance(ptype, EnumType):
                    manifest.enums[f"arg:{tool}:{pname}"] = list(ptype.values)
                    enc.structural.append(s_and([f"(<= 0 {sym})", f"(<= {sym} {len(ptype.values) - 1})"]))
        declare_boundary(i + 1)

    # Contiguous active prefix and no-op carry ------------------------------
    for i in range(h - 1):
        enc.structural.append(s_imp(s_not(enc.act_sym(i)), s_not(enc.act_sym(i + 1))))
    all_state_syms = [
        (var, slot) for var, vtype in model.state_vars.items() for slot in enc.state_slots(var)
    ]
    for i in range(h):
        carry = s_and(
            [s_eq(enc.state_sym(i + 1, var, slot.path), enc.state_sym(i, var, slot.path)) for var, slot in all_state_syms]
        )
        enc.structural.append(s_imp(s_eq(enc.t_sym(i), str(noop)), carry))

    # Transition clauses -----------------------------------------------------
    for k, tr in enumerate(model.transitions):
        mods = modified_vars(tr)
        for i in range(h):
            ctx = _Ctx(enc, model, schema, i, tr)
            guard = s_eq(enc.t_sym(i), str(k))
            if tr.pre:
                body = s_and([_as_scalar(_encode_expr(c, ctx)) for c in tr.pre])
                enc.pre[tr.tool_name].append(s_imp(guard, body))
            if tr.post:
                body = s_and([_as_scalar(_encode_expr(c, ctx)) for c in tr.post])
                enc.post_and_frame[tr.tool_name].append(s_imp(guard, body))
            frame = [
                s_eq(enc.state_sym(i + 1, var, slot.path), enc.state_sym(i, var, slot.path))
                for var, slot in all_state_syms
                if var not in mods
            ]
            if frame:
                enc.post_and_frame[tr.tool_name].append(s_imp(guard, s_and(frame)))

    # Initial pinning --------------------------------------------------------
    for name, value in init.bindings:
        t = model.state_vars[name]
        enc.initial.append(s_eq(enc.state_sym(0, name), lower_value(value, t, interning)))

    return enc


def _as_scalar(term) -> str:
    if isinstance(term, _Composite):
        raise EncodeError("top-level clause compiled to a composite value")
    return term


def encode_check_value(value: ArgValue, ptype: DslType, manifest: Manifest) -> str:
    """Lower a check/trace argument value at its schema parameter type."""
    return lower_value(value, ptype, manifest.interning)
