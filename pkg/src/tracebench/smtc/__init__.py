from .encode import (  # noqa: F401
    EncodeError,
    Manifest,
    WorldEncoding,
    compile_world,
    encode_check_value,
    s_and,
    s_eq,
    s_imp,
    s_not,
    s_or,
)
from .checkenc import CheckCompileError, CheckEncoding, compile_checks, match_predicate  # noqa: F401
from .queries import (  # noqa: F401
    SolverScript,
    emit_backward_query,
    emit_forward_query,
    emit_pinned_check_query,
    emit_pinned_world_query,
    emit_world_query,
    forward_query_for,
    pin_state,
    pin_trace,
    world_formulas,
)
