"""Seeded generator of tiny finite-domain world models for oracle equivalence
fuzzing: Bool/Enum state variables, up to three tools with Bool/Enum
arguments, and determinate-to-conditional pre/post clauses."""
from __future__ import annotations

import itertools
import random

from tracebench.dsl.nodes import (
    BOOL,
    BoolType,
    EnumType,
    Literal,
    NextRef,
    Op,
    ParamRef,
    Transition,
    VarRef,
    WorldModel,
)
from tracebench.dsl.typecheck import type_check
from tracebench.schema import Tool, ToolParam, ToolSchema
from tracebench.valuation import InitialValuation

_ENUM_POOLS = [("A", "B"), ("A", "B", "C"), ("LOW", "HIGH")]


def _rand_literal(rng: random.Random, t):
    if isinstance(t, BoolType):
        return Literal.of(rng.choice([True, False]))
    return Literal.of(rng.choice(list(t.values)))


def _value_expr(rng: random.Random, t, var_names, state_vars, locals_of_type):
    """A literal, a same-typed state variable, or a same-typed parameter."""
    choices = ["lit"]
    same_type_vars = [v for v in var_names if state_vars[v] == t]
    if same_type_vars:
        choices.append("var")
    if locals_of_type.get(_tkey(t)):
        choices.append("param")
    pick = rng.choice(choices)
    if pick == "var":
        return VarRef(rng.choice(same_type_vars))
    if pick == "param":
        return ParamRef(rng.choice(locals_of_type[_tkey(t)]))
    return _rand_literal(rng, t)


def _tkey(t):
    return ("bool",) if isinstance(t, BoolType) else ("enum",) + tuple(t.values)


def make_model(seed: int, max_vars: int = 3, max_tools: int = 3, max_args: int = 2):
    """Returns (model, schema, init, arg_domains, h)."""
    rng = random.Random(seed)
    n_vars = rng.randint(1, max_vars)
    state_vars = {}
    for i in range(n_vars):
        name = f"v{i}"
        if rng.random() < 0.55:
            state_vars[name] = BOOL
        else:
            state_vars[name] = EnumType(rng.choice(_ENUM_POOLS))
    var_names = list(state_vars)

    n_tools = rng.randint(1, max_tools)
    tools = {}
    transitions = []
    arg_domains: dict[str, list[dict]] = {}
    for k in range(n_tools):
        tool = f"tool_{k}"
        n_args = rng.randint(0, max_args)
        params = []
        for a in range(n_args):
            ptype = BOOL if rng.random() < 0.6 else EnumType(("X", "Y"))
            params.append(ToolParam(f"p{a}", ptype))
        tools[tool] = Tool(tool, tuple(params), rng.choice(["read", "write"]))
        binds = tuple((p.name, f"l{j}") for j, p in enumerate(params))
        locals_of_type: dict[tuple, list[str]] = {}
        for p, (pname, local) in zip(params, binds):
            locals_of_type.setdefault(_tkey(p.type), []).append(local)

        pre = []
        for _ in range(rng.randint(0, 2)):
            var = rng.choice(var_names)
            t = state_vars[var]
            rhs = _value_expr(rng, t, var_names, state_vars, locals_of_type)
            clause = Op("=", (VarRef(var), rhs))
            if rng.random() < 0.25:
                clause = Op("not", (clause,))
            if rng.random() < 0.2:
                var2 = rng.choice(var_names)
                other = Op("=", (VarRef(var2), _rand_literal(rng, state_vars[var2])))
                clause = Op("or", (clause, other))
            pre.append(clause)

        post = []
        written = rng.sample(var_names, k=min(len(var_names), rng.randint(0, 2)))
        for var in written:
            t = state_vars[var]
            rhs = _value_expr(rng, t, var_names, state_vars, locals_of_type)
            clause = Op("=", (NextRef(var), rhs))
            if rng.random() < 0.2:
                guard_var = rng.choice(var_names)
                guard = Op("=", (VarRef(guard_var), _rand_literal(rng, state_vars[guard_var])))
                clause = Op("=>", (guard, clause))
            post.append(clause)

        transitions.append(Transition(tool, binds, tuple(pre), tuple(post)))

        combos = []
        domains = [[True, False] if isinstance(p.type, BoolType) else list(p.type.values) for p in params]
        for combo in itertools.product(*domains):
            combos.append({p.name: v for p, v in zip(params, combo)})
        arg_domains[tool] = combos or [{}]

    model = WorldModel({}, state_vars, transitions)
    schema = ToolSchema(tools)
    type_check(model, schema)

    pin_count = rng.randint(0, n_vars)
    pinned = {}
    for var in rng.sample(var_names, k=pin_count):
        t = state_vars[var]
        pinned[var] = rng.choice([True, False]) if isinstance(t, BoolType) else rng.choice(list(t.values))
    init = InitialValuation.from_dict(pinned)

    step_choices = sum(len(v) for v in arg_domains.values())
    h = 4
    while h > 1 and sum(step_choices**l for l in range(1, h + 1)) > 380:
        h -= 1
    return model, schema, init, arg_domains, h


# ---------------------------------------------------------------------------
# Check-set / trace pairs for the grading-vs-SMT equivalence suite


def make_checkset_and_trace(seed: int, schema: ToolSchema, tools: list[str], max_h: int = 6):
    """Returns (CheckSet, ExecutionTrace, h) with |trace| <= h <= max_h.
    Traces carry complete argument maps for every called tool."""
    from tracebench.checks import (
        After,
        ArgMap,
        Atom,
        Before,
        Check,
        CheckAtom,
        CheckSet,
        Follows,
        OrNode,
        Precedes,
    )
    from tracebench.trace import ExecutionTrace

    rng = random.Random(seed ^ 0x5EED)
    value_pools = {"bool": [True, False], "enum": ["X", "Y"], "int": [0, 1, 2], "string": ["alpha", "beta"]}

    def pool_for(ptype):
        if isinstance(ptype, BoolType):
            return value_pools["bool"]
        if isinstance(ptype, EnumType):
            return list(ptype.values)
        kind = ptype.kind
        if kind == "Int":
            return value_pools["int"]
        if kind == "Real":
            return [0.5, 1.0]
        return value_pools["string"]

    def rand_atom(polarity_choices=("call", "no_call")) -> CheckAtom:
        tool = rng.choice(tools)
        params = schema.tools[tool].params
        bound = {}
        for p in params:
            if rng.random() < 0.5:
                bound[p.name] = rng.choice(pool_for(p.type))
        return CheckAtom(rng.choice(polarity_choices), tool, ArgMap.from_dict(bound))

    def rand_node():
        kind = rng.choice(["atom", "atom", "or", "after", "before", "follows", "precedes"])
        if kind == "atom":
            return Atom(rand_atom())
        if kind == "or":
            node = Atom(rand_atom())
            for _ in range(rng.randint(1, 2)):
                node = OrNode(Atom(rand_atom()), node)
            return node
        if kind == "after":
            return After(rand_atom(), rand_atom(("call",)))
        if kind == "before":
            return Before(rand_atom(), rand_atom(("call",)))
        if kind == "follows":
            return Follows(rand_atom(("call",)), rand_atom(("call",)))
        return Precedes(rand_atom(("call",)), rand_atom(("call",)))

    checks = tuple(Check(f"check_{i:03d}", rand_node()) for i in range(rng.randint(1, 4)))
    h = rng.randint(1, max_h)
    length = rng.randint(0, h)
    steps = []
    for _ in range(length):
        tool = rng.choice(tools)
        args = {p.name: rng.choice(pool_for(p.type)) for p in schema.tools[tool].params}
        steps.append((tool, args))
    return CheckSet(checks), ExecutionTrace.of(*steps), h
