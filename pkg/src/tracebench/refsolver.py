"""Reference SMT solver for the quantifier-free fragment this package emits.

Consumes SMT-LIB 2 scripts (stdin or a file) and prints ``sat``/``unsat``/
``unknown`` plus a model block, so it is drop-in compatible with how the
conflict engine drives z3. Supported sorts: Bool, Int, Real, String.
Supported terms: and/or/not/=>/ite, =, distinct, <, <=, >, >=, +, -, *, /,
to_real, numerals, decimals, string literals.

Decision procedure: backtracking search over variable assignments with
three-valued constraint evaluation and dependency-directed variable
selection. Finite domains come from asserted range bounds (the encoder emits
them for tool indices and enums); unbounded Int/Real/String variables search
over an active domain built from the constants they are compared against,
interval representatives, and enough fresh values for variable-variable
equalities. ``sat`` answers are always sound (the model is checked by
evaluation); ``unsat`` is reported only when every variable's domain is
exact for the atoms it occurs in, otherwise the solver answers ``unknown``.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from fractions import Fraction


class SolverInputError(Exception):
    pass


UNKNOWN = object()  # three-valued evaluation sentinel

# ---------------------------------------------------------------------------
# Script reading


def _tokenize(text: str) -> list[str]:
    toks: list[str] = []
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
        if c in "()":
            toks.append(c)
            i += 1
            continue
        if c == '"':
            j = i + 1
            out = []
            while True:
                if j >= n:
                    raise SolverInputError("unterminated string literal")
                if text[j] == '"':
                    if j + 1 < n and text[j + 1] == '"':  # doubled quote escape
                        out.append('"')
                        j += 2
                        continue
                    j += 1
                    break
                out.append(text[j])
                j += 1
            toks.append('"' + "".join(out))  # leading quote marks a string token
            i = j
            continue
        if c == "|":
            j = text.index("|", i + 1)
            toks.append(text[i + 1 : j])
            i = j + 1
            continue
        j = i
        while j < n and text[j] not in ' \t\r\n();"':
            j += 1
        toks.append(text[i:j])
        i = j
    return toks


def _parse_sexprs(toks: list[str]):
    pos = 0

    def read():
        nonlocal pos
        tok = toks[pos]
        pos += 1
        if tok == "(":
            items = []
            while toks[pos] != ")":
                items.append(read())
            pos += 1
            return items
        if tok == ")":
            raise SolverInputError("unbalanced )")
        return tok

    out = []
    while pos < len(toks):
        out.append(read())
    return out


def _parse_value_token(tok: str):
    if tok.startswith('"'):
        return tok[1:]
    if tok == "true":
        return True
    if tok == "false":
        return False
    neg = False
    body = tok
    if body and body[0] == "-" and len(body) > 1:
        neg, body = True, body[1:]
    if body.replace(".", "", 1).isdigit():
        val = Fraction(body) if "." in body else int(body)
        return -val if neg else val
    return None


# ---------------------------------------------------------------------------
# Terms


@dataclass
class Var:
    name: str
    sort: str
    index: int
    domain: list | None = None  # None until domains are built
    exact: bool = True  # whether exhausting the domain proves unsat
    occurs_arith: bool = False
    has_ordering: bool = False  # clean </<=/>/>= against a constant
    var_var_eq: bool = False  # clean =/distinct with another variable
    compare_consts: set = field(default_factory=set)
    bound_lo: object = None
    bound_hi: object = None
    eq_pinned: object = None


class _Term:
    __slots__ = ("op", "args", "var", "value")

    def __init__(self, op: str, args: tuple = (), var: Var | None = None, value=None):
        self.op = op
        self.args = args
        self.var = var
        self.value = value


def _num(v):
    return Fraction(v) if not isinstance(v, Fraction) else v


_ARITY = {
    "not": (1, 1),
    "=>": (2, 2),
    "ite": (3, 3),
    "<": (2, 2),
    "<=": (2, 2),
    ">": (2, 2),
    ">=": (2, 2),
    "/": (2, 2),
    "=": (2, None),
    "distinct": (2, None),
    "and": (1, None),
    "or": (1, None),
    "+": (1, None),
    "-": (1, None),
    "*": (1, None),
}


class Solver:
    def __init__(self) -> None:
        self.vars: dict[str, Var] = {}
        self.var_list: list[Var] = []
        self.asserts: list[_Term] = []
        self.logic: str | None = None
        self._nodes = 0
        self.node_cap = 4_000_000
        self._stuck = False
        self.last_status: str | None = None
        self.last_model: dict | None = None

    # -- input ---------------------------------------------------------------

    def load(self, text: str) -> list[str]:
        """Execute the script; returns the list of responses to print."""
        responses: list[str] = []
        last_result: str | None = None
        model: dict[str, object] | None = None
        for form in _parse_sexprs(_tokenize(text)):
            if not isinstance(form, list) or not form:
                raise SolverInputError(f"bad command {form!r}")
            head = form[0]
            if head in ("set-option", "set-info", "set-logic", "push", "pop", "reset", "echo"):
                continue
            if head in ("declare-const", "declare-fun"):
                name = form[1]
                if head == "declare-fun":
                    if form[2]:
                        raise SolverInputError("only 0-ary declare-fun is supported")
                    sort = form[3]
                else:
                    sort = form[2]
                if not isinstance(sort, str) or sort not in ("Bool", "Int", "Real", "String"):
                    raise SolverInputError(f"unsupported sort {sort!r}")
                if name in self.vars:
                    raise SolverInputError(f"duplicate declaration {name!r}")
                v = Var(name, sort, len(self.var_list))
                self.vars[name] = v
                self.var_list.append(v)
                continue
            if head == "assert":
                self.asserts.append(self._build(form[1], want="Bool"))
                continue
            if head == "check-sat":
                last_result, model = self.check()
                self.last_status, self.last_model = last_result, model
                responses.append(last_result)
                continue
            if head == "get-model":
                if last_result == "sat" and model is not None:
                    responses.append(self.format_model(model))
                else:
                    responses.append('(error "model is not available")')
                continue
            if head == "exit":
                break
            raise SolverInputError(f"unsupported command {head!r}")
        return responses

    def _build(self, form, want: str | None = None) -> _Term:
        if isinstance(form, str):
            val = _parse_value_token(form)
            if val is not None or form in ("true", "false"):
                if isinstance(val, bool):
                    return _Term("const", value=val)
                if isinstance(val, (int, Fraction)):
                    return _Term("const", value=val)
                return _Term("const", value=val)  # string
            if form.startswith('"'):
                return _Term("const", value=form[1:])
            v = self.vars.get(form)
            if v is None:
                raise SolverInputError(f"unknown symbol {form!r}")
            return _Term("var", var=v)
        if not form:
            raise SolverInputError("empty term")
        op = form[0]
        if op == "-" and len(form) == 2:
            inner = self._build(form[1])
            if inner.op == "const":
                return _Term("const", value=-_num(inner.value))
            return _Term("neg", (inner,))
        if op == "to_real":
            return self._build(form[1])
        args = tuple(self._build(a) for a in form[1:])
        if op in _ARITY:
            lo, hi = _ARITY[op]
            if len(args) < lo or (hi is not None and len(args) > hi):
                raise SolverInputError(f"bad arity for {op!r}: {len(args)}")
            term = _Term(op, args)
            if op in ("+", "-", "*", "/") and all(a.op == "const" for a in args):
                folded = self._eval(term, [], set())
                if folded is not UNKNOWN:
                    return _Term("const", value=folded)
            return term
        raise SolverInputError(f"unsupported operator {op!r}")

    # -- evaluation ------------------------------------------------------------

    def _eval(self, t: _Term, env: list, deps: set) -> object:
        op = t.op
        if op == "const":
            return t.value
        if op == "var":
            v = env[t.var.index]
            if v is None:
                deps.add(t.var.index)
                return UNKNOWN
            return v
        if op == "not":
            a = self._eval(t.args[0], env, deps)
            if a is UNKNOWN:
                return UNKNOWN
            return not a
        if op == "and":
            result = True
            for a in t.args:
                v = self._eval(a, env, deps)
                if v is False:
                    return False
                if v is UNKNOWN:
                    result = UNKNOWN
            return result
        if op == "or":
            result = False
            for a in t.args:
                v = self._eval(a, env, deps)
                if v is True:
                    return True
                if v is UNKNOWN:
                    result = UNKNOWN
            return result
        if op == "=>":
            a = self._eval(t.args[0], env, deps)
            if a is False:
                return True
            b = self._eval(t.args[1], env, deps)
            if b is True:
                return True
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            return b
        if op == "ite":
            c = self._eval(t.args[0], env, deps)
            if c is UNKNOWN:
                return UNKNOWN
            return self._eval(t.args[1 if c else 2], env, deps)
        if op in ("=", "distinct"):
            vals = [self._eval(a, env, deps) for a in t.args]
            if any(v is UNKNOWN for v in vals):
                return UNKNOWN
            norm = [_num(v) if isinstance(v, (int, Fraction)) and not isinstance(v, bool) else v for v in vals]
            if op == "=":
                return all(v == norm[0] for v in norm[1:])
            return len(set(map(_key, norm))) == len(norm)
        if op in ("<", "<=", ">", ">="):
            a = self._eval(t.args[0], env, deps)
            b = self._eval(t.args[1], env, deps)
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            a, b = _num(a), _num(b)
            return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
        if op in ("+", "-", "*"):
            vals = []
            for a in t.args:
                v = self._eval(a, env, deps)
                if v is UNKNOWN:
                    return UNKNOWN
                vals.append(_num(v))
            if op == "+":
                out = sum(vals)
            elif op == "*":
                out = Fraction(1)
                for v in vals:
                    out *= v
            else:
                out = vals[0] - sum(vals[1:])
            return out
        if op == "/":
            a = self._eval(t.args[0], env, deps)
            b = self._eval(t.args[1], env, deps)
            if a is UNKNOWN or b is UNKNOWN:
                return UNKNOWN
            b = _num(b)
            if b == 0:
                return UNKNOWN  # division by zero: uninterpreted
            return _num(a) / b
        if op == "neg":
            a = self._eval(t.args[0], env, deps)
            if a is UNKNOWN:
                return UNKNOWN
            return -_num(a)
        raise SolverInputError(f"cannot evaluate {op!r}")


    # -- domain construction ----------------------------------------------------

    def _scan_bounds(self) -> None:
        """Collect finite-range bounds from top-level conjunctive atoms and
        comparison constants / arithmetic coupling everywhere."""

        def top_atoms(t: _Term):
            if t.op == "and":
                for a in t.args:
                    yield from top_atoms(a)
            else:
                yield t

        for a in self.asserts:
            for atom in top_atoms(a):
                self._note_top_atom(atom)
        self._global_nums: set[Fraction] = set()
        for a in self.asserts:
            self._note_occurrences(a)
            self._collect_consts(a)

    def _collect_consts(self, t: _Term) -> None:
        if t.op == "const" and isinstance(t.value, (int, Fraction)) and not isinstance(t.value, bool):
            self._global_nums.add(_num(t.value))
        for a in t.args:
            self._collect_consts(a)

    def _note_top_atom(self, t: _Term) -> None:
        if t.op == "<=" and len(t.args) == 2:
            lhs, rhs = t.args
            if lhs.op == "const" and rhs.op == "var":
                v, c = rhs.var, _num(lhs.value)
                if v.bound_lo is None or c > v.bound_lo:
                    v.bound_lo = c
            elif lhs.op == "var" and rhs.op == "const":
                v, c = lhs.var, _num(rhs.value)
                if v.bound_hi is None or c < v.bound_hi:
                    v.bound_hi = c
        elif t.op == "=" and len(t.args) == 2:
            lhs, rhs = t.args
            if lhs.op == "var" and rhs.op == "const":
                lhs.var.eq_pinned = rhs.value
            elif rhs.op == "var" and lhs.op == "const":
                rhs.var.eq_pinned = lhs.value

    def _note_occurrences(self, t: _Term) -> None:
        if t.op in ("=", "distinct", "<", "<=", ">", ">="):
            vars_here = [a.var for a in t.args if a.op == "var"]
            consts = [a.value for a in t.args if a.op == "const"]
            clean = all(a.op in ("var", "const") for a in t.args)
            for v in vars_here:
                for c in consts:
                    v.compare_consts.add(c if isinstance(c, str) else _num(c))
                if not clean:
                    v.occurs_arith = True
                elif t.op in ("<", "<=", ">", ">="):
                    if len(vars_here) > 1:
                        v.occurs_arith = True  # var-vs-var ordering: no small-model guarantee
                    else:
                        v.has_ordering = True
                elif len(vars_here) > 1:
                    v.var_var_eq = True
            if not clean:
                for a in t.args:
                    self._mark_arith(a)
            return
        if t.op in ("+", "-", "*", "/", "neg"):
            self._mark_arith(t)
            return
        for a in t.args:
            self._note_occurrences(a)

    def _mark_arith(self, t: _Term) -> None:
        if t.op == "var":
            t.var.occurs_arith = True
        for a in t.args:
            self._mark_arith(a)

    def _build_domains(self) -> None:
        for v in self.var_list:
            if v.sort == "Bool":
                v.domain = [False, True]
                continue
            if v.eq_pinned is not None:
                # A top-level equality pins the variable; other assertions are
                # still evaluated, so conflicting pins fail during search.
                v.domain = [v.eq_pinned if v.sort == "String" else _num(v.eq_pinned)]
                continue
            if v.sort == "Int" and v.bound_lo is not None and v.bound_hi is not None:
                lo, hi = int(v.bound_lo), int(v.bound_hi)
                if hi - lo > 100_000:
                    raise SolverInputError(f"range of {v.name} too large")
                v.domain = [Fraction(k) for k in range(lo, hi + 1)]
                continue  # full enumeration: always exact
            if v.sort == "String":
                consts = sorted(c for c in v.compare_consts if isinstance(c, str))
                fresh = f"!fresh_{v.index}"
                while fresh in consts:
                    fresh += "_"
                v.domain = consts + [fresh]  # one fresh value per var, distinct across vars
                v.exact = not v.occurs_arith
                continue
            pool = {c for c in v.compare_consts if isinstance(c, Fraction)}
            if v.occurs_arith:
                pool |= self._global_nums  # widen the net for arithmetic coupling
            nums = sorted(pool)
            dom_set: list[Fraction] = []
            if v.sort == "Int":
                for c in nums:
                    ci = Fraction(int(c)) if c.denominator == 1 else Fraction(int(c))
                    dom_set.extend((ci - 1, ci, ci + 1))
                base = int(max(nums, default=Fraction(0))) + 2
                dom_set.append(Fraction(base + v.index))
            else:
                for c in nums:
                    dom_set.extend((c - 1, c, c + Fraction(1, 2), c + 1))
                dom_set.extend(Fraction(a + b, 2) for a, b in zip(nums, nums[1:]))
                base = int(max(nums, default=Fraction(0))) + 2
                dom_set.append(Fraction(base) + Fraction(v.index + 1, len(self.var_list) + 1))
            seen: set[Fraction] = set()
            dom: list[Fraction] = []
            for x in sorted(dom_set):
                if x not in seen:
                    seen.add(x)
                    dom.append(x)
            v.domain = dom
            # Exact for constant-only comparisons (interval representatives)
            # and for pure equality patterns (one fresh value per variable);
            # mixing interval confinement with var-var equality loses the
            # small-model guarantee, as does any arithmetic coupling.
            v.exact = not v.occurs_arith and not (v.has_ordering and v.var_var_eq)

    # -- search -----------------------------------------------------------------

    def reset_var_state(self) -> None:
        for v in self.var_list:
            v.domain = None
            v.exact = True
            v.occurs_arith = False
            v.has_ordering = False
            v.var_var_eq = False
            v.compare_consts = set()
            v.bound_lo = None
            v.bound_hi = None
            v.eq_pinned = None

    def check(self) -> tuple[str, dict | None]:
        self.reset_var_state()
        self._scan_bounds()
        self._build_domains()
        env: list = [None] * len(self.var_list)
        status: list[object] = []
        dep_sets: list[set[int]] = []
        self._stuck = False
        for a in self.asserts:
            deps: set[int] = set()
            val = self._eval(a, env, deps)
            if val is False:
                return "unsat", None
            status.append(val)
            dep_sets.append(deps)
        self._nodes = 0
        approx = any(not v.exact for v in self.var_list)
        result = self._search(env, status, dep_sets)
        if result is not None:
            return "sat", result
        if self._nodes >= self.node_cap or approx or self._stuck:
            return "unknown", None
        return "unsat", None

    def _pick_var(self, env, status, dep_sets) -> int | None:
        """Unit rule first (a pending assertion with one free variable), then
        the free variable constrained by the most pending assertions."""
        counts: dict[int, int] = {}
        for k, s in enumerate(status):
            if s is not UNKNOWN:
                continue
            free = [ix for ix in dep_sets[k] if env[ix] is None]
            if not free:
                self._stuck = True  # undetermined but saturated (division by zero)
                return None
            if len(free) == 1:
                return free[0]
            for ix in free:
                counts[ix] = counts.get(ix, 0) + 1
        if not counts:
            return -1  # nothing pending
        return max(counts, key=lambda ix: (counts[ix], -ix))

    def _search(self, env, status, dep_sets):
        self._nodes += 1
        if self._nodes >= self.node_cap:
            return None
        ix = self._pick_var(env, status, dep_sets)
        if ix is None:
            return None
        if ix == -1:
            return self._complete_model(env)
        var = self.var_list[ix]
        watch = [k for k, s in enumerate(status) if s is UNKNOWN and ix in dep_sets[k]]
        saved = [(k, status[k], dep_sets[k]) for k in watch]
        for value in var.domain:
            env[ix] = value
            ok = True
            for k in watch:
                deps: set[int] = set()
                val = self._eval(self.asserts[k], env, deps)
                if val is False:
                    ok = False
                    status[k] = val
                    dep_sets[k] = deps
                    break
                status[k] = val
                dep_sets[k] = deps
            if ok:
                result = self._search(env, status, dep_sets)
                if result is not None:
                    return result
            for k, s, d in saved:
                status[k] = s
                dep_sets[k] = d
        env[ix] = None
        return None

    def _complete_model(self, env) -> dict:
        model = {}
        for v in self.var_list:
            val = env[v.index]
            if val is None:
                val = v.domain[0] if v.domain else _default_for(v.sort)
            model[v.name] = val
        return model

    # -- output -------------------------------------------------------------------

    def format_model(self, model: dict) -> str:
        lines = ["("]
        for v in self.var_list:
            val = model[v.name]
            lines.append(f"  (define-fun {v.name} () {v.sort} {_format_value(val, v.sort)})")
        lines.append(")")
        return "\n".join(lines)


def _key(v):
    if isinstance(v, bool):
        return ("b", v)
    if isinstance(v, (int, Fraction)):
        return ("n", _num(v))
    return ("s", v)


def _default_for(sort: str):
    return {"Bool": False, "Int": Fraction(0), "Real": Fraction(0), "String": ""}[sort]


def _format_value(val, sort: str) -> str:
    if sort == "Bool":
        return "true" if val else "false"
    if sort == "String":
        return '"' + str(val).replace('"', '""') + '"'
    f = _num(val)
    if sort == "Int":
        n = int(f)
        return str(n) if n >= 0 else f"(- {-n})"
    if f.denominator == 1:
        body = f"{f.numerator}.0" if f.numerator >= 0 else f"(- {-f.numerator}.0)"
        return body
    if f >= 0:
        return f"(/ {f.numerator}.0 {f.denominator}.0)"
    return f"(- (/ {-f.numerator}.0 {f.denominator}.0))"


class Session:
    """Parse a base script once, then run many checks with extra assertions
    (used for pinned-trace sweeps where the base encoding is shared)."""

    def __init__(self, base_text: str) -> None:
        self.solver = Solver()
        for form in _parse_sexprs(_tokenize(base_text)):
            if not isinstance(form, list) or not form:
                continue
            head = form[0]
            if head in ("declare-const", "declare-fun"):
                name = form[1]
                sort = form[3] if head == "declare-fun" else form[2]
                v = Var(name, sort, len(self.solver.var_list))
                self.solver.vars[name] = v
                self.solver.var_list.append(v)
            elif head == "assert":
                self.solver.asserts.append(self.solver._build(form[1]))
        self._base_len = len(self.solver.asserts)

    def check(self, extra_formulas: list[str]) -> tuple[str, dict | None]:
        s = self.solver
        try:
            for f in extra_formulas:
                forms = _parse_sexprs(_tokenize(f))
                for term in forms:
                    s.asserts.append(s._build(term))
            status, model = s.check()
        finally:
            del s.asserts[self._base_len :]
        if status == "sat" and model is not None:
            return status, decode_model(model, {v.name: v.sort for v in s.var_list})
        return status, None

    def check_raw(self, extra_formulas: list[str]) -> tuple[str, str | None]:
        """Like check but returns the printed model block (what the solver
        executable would write after get-model)."""
        s = self.solver
        try:
            for f in extra_formulas:
                for term in _parse_sexprs(_tokenize(f)):
                    s.asserts.append(s._build(term))
            status, model = s.check()
        finally:
            del s.asserts[self._base_len :]
        if status == "sat" and model is not None:
            return status, s.format_model(model)
        return status, None


def decode_model(model: dict, sorts: dict[str, str]) -> dict:
    out = {}
    for name, val in model.items():
        sort = sorts[name]
        if sort == "Int":
            out[name] = int(val)
        elif sort == "Real":
            out[name] = _num(val)
        else:
            out[name] = val
    return out


def solve_text(text: str) -> tuple[str, dict | None]:
    """Library entry point: returns (status, model dict or None). Model values
    are Python bool/int/Fraction/str keyed by symbol."""
    s = Solver()
    s.load(text)
    status = s.last_status or "unknown"
    model = None
    if status == "sat" and s.last_model is not None:
        model = decode_model(s.last_model, {v.name: v.sort for v in s.var_list})
    return status, model


def main(argv: list[str] | None = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if args and args[0] not in ("-",):
        text = open(args[0], "r", encoding="utf-8").read()
    else:
        text = sys.stdin.read()
    try:
        solver = Solver()
        responses = solver.load(text)
    except SolverInputError as exc:
        print(f'(error "{exc}")')
        return 1
    for r in responses:
        print(r)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
