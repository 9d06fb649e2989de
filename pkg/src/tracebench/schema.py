"""Tool schema: tool signatures plus the read/write style classification."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .dsl.nodes import (
    ArrayType,
    BOOL,
    DslType,
    EnumType,
    INT,
    REAL,
    RecordType,
    STRING,
)

_PRIMITIVES = {"Int": INT, "Real": REAL, "Bool": BOOL, "String": STRING}


def type_from_json(spec: object) -> DslType:
    if isinstance(spec, str):
        if spec not in _PRIMITIVES:
            raise ValueError(f"unknown primitive type {spec!r}")
        return _PRIMITIVES[spec]
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "enum":
            return EnumType(tuple(spec["values"]))
        if kind == "array":
            return ArrayType(type_from_json(spec["element"]))
        if kind == "record":
            return RecordType(tuple((k, type_from_json(v)) for k, v in spec["fields"].items()))
    raise ValueError(f"malformed type spec {spec!r}")


def type_to_json(t: DslType) -> object:
    if isinstance(t, EnumType):
        return {"kind": "enum", "values": list(t.values)}
    if isinstance(t, ArrayType):
        return {"kind": "array", "element": type_to_json(t.element)}
    if isinstance(t, RecordType):
        return {"kind": "record", "fields": {n: type_to_json(ft) for n, ft in t.fields}}
    return t.kind


@dataclass(frozen=True)
class ToolParam:
    name: str
    type: DslType
    required: bool = True


@dataclass
class Tool:
    name: str
    params: tuple[ToolParam, ...]
    style: str  # "read" or "write"

    def param_type(self, name: str) -> DslType | None:
        for p in self.params:
            if p.name == name:
                return p.type
        return None


@dataclass
class ToolSchema:
    tools: dict[str, Tool] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, tool in self.tools.items():
            if name != tool.name:
                raise ValueError(f"tool key {name!r} does not match tool name {tool.name!r}")
            if tool.style not in ("read", "write"):
                raise ValueError(f"tool {name!r} style must be read or write")
            pnames = [p.name for p in tool.params]
            if len(set(pnames)) != len(pnames):
                raise ValueError(f"tool {name!r} has duplicate parameters")

    def style_of(self, tool: str) -> str:
        return self.tools[tool].style

    @staticmethod
    def from_json(data: dict) -> "ToolSchema":
        tools: dict[str, Tool] = {}
        for t in data["tools"]:
            params = tuple(
                ToolParam(p["name"], type_from_json(p["type"]), bool(p.get("required", True)))
                for p in t.get("params", [])
            )
            name = t["name"]
            if name in tools:
                raise ValueError(f"duplicate tool {name!r}")
            tools[name] = Tool(name=name, params=params, style=t["style"])
        return ToolSchema(tools)

    def to_json(self) -> dict:
        return {
            "tools": [
                {
                    "name": t.name,
                    "style": t.style,
                    "params": [
                        {"name": p.name, "type": type_to_json(p.type), "required": p.required}
                        for p in t.params
                    ],
                }
                for t in self.tools.values()
            ]
        }

    @staticmethod
    def load(path: str | Path) -> "ToolSchema":
        return ToolSchema.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
