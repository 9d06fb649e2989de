"""Initial valuations: concrete bindings for state variables at step 0."""
from __future__ import annotations

from dataclasses import dataclass

from .dsl.nodes import ArrayType, BoolType, EnumType, IntType, RealType, RecordType, StringType, WorldModel

ArgValue = bool | int | float | str


class ValuationError(Exception):
    pass


@dataclass(frozen=True)
class InitialValuation:
    bindings: tuple[tuple[str, ArgValue], ...] = ()
    version: int = 0

    @staticmethod
    def of(**kwargs: ArgValue) -> "InitialValuation":
        return InitialValuation(tuple(sorted(kwargs.items())))

    @staticmethod
    def from_dict(d: dict[str, ArgValue], version: int = 0) -> "InitialValuation":
        return InitialValuation(tuple(sorted(d.items())), version)

    def as_dict(self) -> dict[str, ArgValue]:
        return dict(self.bindings)


def validate_valuation(init: InitialValuation, model: WorldModel) -> None:
    """Every bound name must be a declared state variable with an in-domain,
    type-correct scalar value."""
    for name, value in init.bindings:
        if name not in model.state_vars:
            raise ValuationError(f"initial binding {name!r} is not a declared state variable")
        t = model.state_vars[name]
        if isinstance(t, (ArrayType, RecordType)):
            raise ValuationError(f"initial binding {name!r}: composite variables cannot be pinned")
        if isinstance(t, EnumType):
            if not isinstance(value, str) or value not in t.values:
                raise ValuationError(f"initial binding {name!r}: {value!r} outside enum domain")
        elif isinstance(t, BoolType):
            if not isinstance(value, bool):
                raise ValuationError(f"initial binding {name!r}: expected a Bool, got {value!r}")
        elif isinstance(t, IntType):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValuationError(f"initial binding {name!r}: expected an Int, got {value!r}")
        elif isinstance(t, RealType):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValuationError(f"initial binding {name!r}: expected a Real, got {value!r}")
        elif isinstance(t, StringType):
            if not isinstance(value, str):
                raise ValuationError(f"initial binding {name!r}: expected a String, got {value!r}")
