#!/usr/bin/env python3
"""Re-record the committed generator fixtures for the procurement demo.

The scripted generator below is the deterministic stand-in for a live model:
it reads each stage request and produces rule-based responses for the demo
manual, including one deliberately missing postcondition (repaired by the
batched world-model resolution), one missing ordering check (repaired by the
per-scenario check resolution), and one scenario whose proposals keep getting
rejected so it lands in the human review queue.

Usage: python3 scripts/record_fixtures.py [--keep-run]
"""
from __future__ import annotations

import argparse
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from tracebench.genport import RecordingAdapter, StageRequest, StageResponse  # noqa: E402
from tracebench.pipeline.config import load_config  # noqa: E402
from tracebench.pipeline.runner import run_pipeline  # noqa: E402

INVENTORY_POST = "(= (next inventory_checked) true)"

TOOL_TEMPLATES = {
    "check_inventory": {
        "params": [("item_name", "itm")],
        "pre": [],
        "post": ["(= (next in_stock) in_stock)"],  # inventory_checked post is the planted gap
        "vars": [("in_stock", "Bool"), ("inventory_checked", "Bool")],
    },
    "check_legacy_portal": {
        "params": [("item_id", "itm")],
        "pre": ["(= in_stock false)"],
        "post": ["(= (next legacy_checked) true)"],
        "vars": [("in_stock", "Bool"), ("legacy_checked", "Bool")],
    },
    "assign_warehouse_picker": {
        "params": [("item_id", "itm"), ("quantity", "qty")],
        "pre": ["(= in_stock true)", "(= inventory_checked true)", "(= picker_assigned false)"],
        "post": ["(= (next picker_assigned) true)"],
        "vars": [("in_stock", "Bool"), ("inventory_checked", "Bool"), ("picker_assigned", "Bool")],
    },
    "create_purchase_order": {
        "params": [("item_id", "itm"), ("quantity", "qty")],
        "pre": ["(= in_stock false)", "(= legacy_checked true)", "(= po_created false)"],
        "post": ["(= (next po_created) true)"],
        "vars": [("in_stock", "Bool"), ("legacy_checked", "Bool"), ("po_created", "Bool")],
    },
    "set_delivery_options": {
        "params": [("item_id", "itm"), ("is_residential", "res")],
        "pre": ["(= po_created true)", "(= delivery_set false)"],
        "post": ["(= (next delivery_set) true)"],
        "vars": [("po_created", "Bool"), ("delivery_set", "Bool")],
    },
}

VAR_ORDER = ["in_stock", "inventory_checked", "legacy_checked", "picker_assigned", "po_created", "delivery_set"]


def relevant_tools(text: str) -> list[str]:
    tools = []
    if "stock ledger" in text or "warehouse picker" in text:
        tools += ["check_inventory", "assign_warehouse_picker", "create_purchase_order"]
    if "refurbished-hardware portal" in text:
        tools += ["check_legacy_portal", "create_purchase_order"]
    if "delivery options" in text:
        tools += ["create_purchase_order", "set_delivery_options"]
    if not tools:
        tools = ["check_inventory"]
    seen = []
    for t in tools:
        if t not in seen:
            seen.append(t)
    return seen


def build_model_text(tools: list[str]) -> str:
    vars_needed: list[str] = []
    for tool in tools:
        for name, _ in TOOL_TEMPLATES[tool]["vars"]:
            if name not in vars_needed:
                vars_needed.append(name)
    vars_needed.sort(key=VAR_ORDER.index)
    lines = ["(model"]
    for name in vars_needed:
        lines.append(f"  (var {name} Bool)")
    for tool in tools:
        t = TOOL_TEMPLATES[tool]
        binds = " ".join(f"({p} {local})" for p, local in t["params"])
        lines.append(f"  (transition {tool}")
        lines.append(f"    (params {binds})")
        pre = t["pre"]
        if pre:
            lines.append("    (pre " + " ".join(pre) + ")")
        else:
            lines.append("    (pre)")
        post = [c for c in t["post"] if all(v in vars_needed for v in _vars_in(c))]
        lines.append("    (post " + " ".join(post) + "))" if post else "    (post))")
    lines.append(")")
    return "\n".join(lines)


def _vars_in(clause: str) -> list[str]:
    return [v for v in VAR_ORDER if v in clause]


def scenarios_for(tools: list[str], sample_id: str) -> list[dict]:
    if "assign_warehouse_picker" in tools:
        return [
            {
                "prompt": (
                    "Get 1 UltraView QHD monitor for Rosa Lindqvist at Dock 9, ticket TK-2207. "
                    "The stock ledger marks the item in stock: true. Nothing has happened on the "
                    "ticket yet: picker assigned false, purchase order created false, ledger "
                    "recheck logged false."
                ),
                "external": {"in_stock": True},
                "internal": {"picker_assigned": False, "po_created": False, "inventory_checked": False},
            },
            {
                "prompt": (
                    "Confirm stock level only for the AcoustiPad dampener, ticket TK-2208; the "
                    "ledger currently reads in stock: true."
                ),
                "external": {"in_stock": True},
                "internal": {},
            },
        ]
    if "set_delivery_options" in tools:
        return [
            {
                "prompt": (
                    "Arrange the incoming delivery for lab ticket LB-4410 to a residential "
                    "address. The ledger shows the item in stock: false, the refurbished portal "
                    "was already consulted: true, no purchase order exists yet: false, and no "
                    "delivery options are recorded: false."
                ),
                "external": {"in_stock": False},
                "internal": {"legacy_checked": True, "po_created": False, "delivery_set": False},
            },
            {
                "prompt": (
                    "Record delivery options for ticket LB-4411 going to a residential address; "
                    "its purchase order already exists: true and no delivery options are "
                    "recorded: false."
                ),
                "external": {},
                "internal": {"po_created": True, "delivery_set": False},
            },
        ]
    return [
        {
            "prompt": "Confirm stock level only for ticket TK-0000; ledger reads in stock: true.",
            "external": {"in_stock": True},
            "internal": {},
        }
    ]


def checks_for(prompt: str) -> str:
    if "UltraView" in prompt:
        # the ordering constraint is deliberately missing; the resolver adds it
        return (
            "CALL check_inventory()\n"
            "CALL assign_warehouse_picker()\n"
            "NO-CALL create_purchase_order()\n"
            "NO-CALL assign_warehouse_picker() AFTER CALL assign_warehouse_picker()\n"
        )
    if "Confirm stock level" in prompt:
        return "CALL check_inventory()\n"
    if "LB-4410" in prompt:
        # wrong polarity on the purchase-order check: delivery must follow the
        # PO, not forbid it; the automated resolver cannot fix the referent it
        # keeps proposing, so the scenario lands in the review queue
        return (
            "CALL set_delivery_options()\n"
            "NO-CALL create_purchase_order()\n"
            "NO-CALL set_delivery_options() AFTER CALL set_delivery_options()\n"
            "NO-CALL create_purchase_order() AFTER CALL create_purchase_order()\n"
        )
    if "LB-4411" in prompt:
        return (
            "CALL set_delivery_options()\n"
            "NO-CALL set_delivery_options() AFTER CALL set_delivery_options()\n"
        )
    return "CALL check_inventory()\n"


class ScriptedGenerator:
    """Rule-based responses for every stage of the demo pipeline."""

    def respond(self, req: StageRequest) -> StageResponse:
        stage, payload = req.stage, req.payload
        if stage == "document_extraction":
            leaves = [n for n in payload["nodes"]]
            standard = next((n["id"] for n in leaves if "Standard fulfillment" in " ".join(n["heading_path"])), None)
            lab = next((n["id"] for n in leaves if "Lab procurement" in " ".join(n["heading_path"])), None)
            delivery = next((n["id"] for n in leaves if "Delivery handling" in " ".join(n["heading_path"])), None)
            edges = []
            if standard and lab:
                edges.append({"from": lab, "to": standard, "kind": "explicit"})
            if lab and delivery:
                edges.append({"from": delivery, "to": lab, "kind": "implicit"})
            return StageResponse({"edges": edges}, "live")
        if stage == "tool_relevance":
            return StageResponse({"tools": relevant_tools(payload["text"])}, "live")
        if stage == "scenario_generation":
            return StageResponse(
                {"scenarios": scenarios_for(relevant_tools(payload["text"]), payload["sample_id"])}, "live"
            )
        if stage == "check_generation":
            return StageResponse({"checks": checks_for(payload["prompt"])}, "live")
        if stage == "smt_schema_prepass":
            tools = payload["tools"]
            names: list[str] = []
            for tool in tools:
                for name, _ in TOOL_TEMPLATES[tool]["vars"]:
                    if name not in names:
                        names.append(name)
            names.sort(key=VAR_ORDER.index)
            return StageResponse({"state_vars": [{"name": n, "type": "Bool"} for n in names]}, "live")
        if stage == "smt_full_pass":
            return StageResponse({"model": build_model_text(payload["tools"])}, "live")
        if stage == "conflict_resolution":
            model_text = payload["world_model"]
            if "inventory_checked" in model_text and INVENTORY_POST not in model_text:
                return StageResponse(
                    {
                        "edits": [
                            {
                                "target": "world_model",
                                "kind": "add_post_clause",
                                "tool": "check_inventory",
                                "expr": INVENTORY_POST,
                                "rationale": "the ledger lookup records that inventory was checked",
                            }
                        ]
                    },
                    "live",
                )
            return StageResponse({"edits": []}, "live")
        if stage == "fix_repair":
            checks_text = payload["checks"]
            if "assign_warehouse_picker" in checks_text and "PRECEDES" not in checks_text:
                return StageResponse(
                    {
                        "edits": [
                            {
                                "target": "check_set",
                                "kind": "add_check",
                                "check_text": "CALL check_inventory() PRECEDES CALL assign_warehouse_picker()",
                                "rationale": "the ledger lookup must come first",
                            }
                        ]
                    },
                    "live",
                )
            # wrong referent on purpose: this proposal is rejected every round
            return StageResponse(
                {"edits": [{"target": "check_set", "kind": "remove_check", "check_id": "check_999"}]},
                "live",
            )
        if stage == "locus_reassessment":
            return StageResponse({"action": "keep", "rationale": "the scenario explicitly demands this call"}, "live")
        if stage == "world_model_generation":
            return StageResponse({"model": build_model_text(payload.get("tools", ["check_inventory"]))}, "live")
        raise AssertionError(f"unhandled stage {stage}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--keep-run", action="store_true", help="keep the scratch run directory")
    args = parser.parse_args()

    fixture_dir = REPO / "assets" / "fixtures" / "procurement"
    if fixture_dir.exists():
        shutil.rmtree(fixture_dir)
    fixture_dir.mkdir(parents=True)

    cfg = load_config(REPO / "assets" / "procurement" / "config.yaml")
    scratch = Path(tempfile.mkdtemp(prefix="tracebench-record-"))
    cfg.run_dir_base = str(scratch)
    adapter = RecordingAdapter(ScriptedGenerator(), fixture_dir)
    state = run_pipeline(cfg, adapter=adapter)
    print(f"recorded fixtures for run with samples: {state.sample_ids}")
    print(f"fixture files: {len(list(fixture_dir.glob('*.json')))}")
    if not args.keep_run:
        shutil.rmtree(scratch, ignore_errors=True)
    else:
        print(f"run kept at {scratch}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
