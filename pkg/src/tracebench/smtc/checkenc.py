"""Check-set compilation over a world encoding's step variables.

The shared building block is the per-step matching predicate: step i matches
atom (tool, args) when it is active, its tool index selects the tool, and
every bound argument variable equals the pinned value. All temporal forms
expand to finite conjunctions/disjunctions over step indices.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..checks import After, Atom, Before, Check, CheckAtom, CheckNode, CheckSet, Follows, OrNode, Precedes
from ..schema import ToolSchema
from .encode import EncodeError, WorldEncoding, encode_check_value, s_and, s_eq, s_imp, s_not, s_or


class CheckCompileError(Exception):
    """A check references a tool without a transition (or an unencodable
    argument); callers route this to the syntactic repair loop."""


@dataclass
class CheckEncoding:
    formulas: dict[str, str] = field(default_factory=dict)  # check id -> formula

    def conjunction(self) -> str:
        return s_and(list(self.formulas.values()))


def match_predicate(we: WorldEncoding, schema: ToolSchema, atom: CheckAtom, i: int) -> str:
    try:
        idx = we.manifest.tool_index(atom.tool)
    except EncodeError as exc:
        raise CheckCompileError(str(exc)) from None
    conj = [we.act_sym(i), s_eq(we.t_sym(i), str(idx))]
    tool = schema.tools[atom.tool]
    for pname, value in atom.args.items():
        ptype = tool.param_type(pname)
        if ptype is None:
            raise CheckCompileError(f"tool {atom.tool!r} has no parameter {pname!r}")
        if (pname, ptype) not in we.arg_params(atom.tool):
            raise CheckCompileError(f"parameter {atom.tool}.{pname} has no argument variable")
        try:
            lowered = encode_check_value(value, ptype, we.manifest)
        except EncodeError as exc:
            raise CheckCompileError(str(exc)) from None
        conj.append(s_eq(we.arg_sym(i, atom.tool, pname), lowered))
    return s_and(conj)


def _steps(we: WorldEncoding) -> range:
    return range(we.horizon)


def compile_node(node: CheckNode, we: WorldEncoding, schema: ToolSchema) -> str:
    if isinstance(node, Atom):
        hits = [match_predicate(we, schema, node.atom, i) for i in _steps(we)]
        if node.atom.polarity == "call":
            return s_or(hits)
        return s_not(s_or(hits))
    if isinstance(node, OrNode):
        return s_or([compile_node(node.left, we, schema), compile_node(node.right, we, schema)])
    if isinstance(node, After):
        # target at j needs an anchor strictly before j; no-call targets must
        # never match after an anchor.
        clauses = []
        for j in _steps(we):
            anchors = s_or([match_predicate(we, schema, node.anchor, i) for i in range(j)])
            tgt = match_predicate(we, schema, node.target, j)
            if node.target.polarity == "call":
                clauses.append(s_imp(tgt, anchors))
            else:
                clauses.append(s_imp(tgt, s_not(anchors)))
        return s_and(clauses)
    if isinstance(node, Before):
        clauses = []
        for j in _steps(we):
            anchors = s_or([match_predicate(we, schema, node.anchor, i) for i in range(j + 1, we.horizon)])
            tgt = match_predicate(we, schema, node.target, j)
            if node.target.polarity == "call":
                clauses.append(s_imp(tgt, anchors))
            else:
                clauses.append(s_imp(tgt, s_not(anchors)))
        return s_and(clauses)
    if isinstance(node, Follows):
        pairs = [
            s_and([match_predicate(we, schema, node.anchor, i), match_predicate(we, schema, node.call, j)])
            for i in _steps(we)
            for j in _steps(we)
            if i < j
        ]
        return s_or(pairs)
    if isinstance(node, Precedes):
        pairs = [
            s_and([match_predicate(we, schema, node.call, i), match_predicate(we, schema, node.anchor, j)])
            for i in _steps(we)
            for j in _steps(we)
            if i < j
        ]
        return s_or(pairs)
    raise CheckCompileError(f"unsupported check node {node!r}")


def compile_checks(cs: CheckSet, we: WorldEncoding, schema: ToolSchema) -> CheckEncoding:
    """Compile each check to one formula over the world encoding's symbols.
    The conjunction of all formulas is the bounded check-set encoding."""
    out = CheckEncoding()
    for check in cs.checks:
        out.formulas[check.id] = compile_node(check.node, we, schema)
    return out
