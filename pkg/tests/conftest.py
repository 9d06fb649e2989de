from __future__ import annotations

import pytest

from tracebench.dsl import parse_model, type_check
from tracebench.schema import Tool, ToolParam, ToolSchema
from tracebench.schema import type_from_json

# Hardware-procurement fixture used across the suite. The "fragment" model is
# the minimal 4-variable form; the "golden" model adds the inventory-checked
# bookkeeping that the repair round exercises end to end.

PROCUREMENT_FRAGMENT = """\
(model
  (var in_stock        Bool)
  (var legacy_checked  Bool)
  (var picker_assigned Bool)
  (var po_created      Bool)

  (transition check_inventory
    (params (item_name itm))
    (pre)
    (post (= (next in_stock) in_stock)))

  (transition check_legacy_portal
    (params (item_id itm))
    (pre)
    (post (= (next legacy_checked) true)))

  (transition assign_warehouse_picker
    (params (item_id itm) (quantity qty))
    (pre  (= in_stock true))
    (post (= (next picker_assigned) true)))

  (transition create_purchase_order
    (params (item_id itm) (quantity qty))
    (pre  (= in_stock false)
          (= legacy_checked true))
    (post (= (next po_created) true))))
"""

PROCUREMENT_GOLDEN = """\
(model
  (var in_stock          Bool)
  (var inventory_checked Bool)
  (var legacy_checked    Bool)
  (var picker_assigned   Bool)
  (var po_created        Bool)

  (transition check_inventory
    (params (item_name itm))
    (pre)
    (post (= (next in_stock) in_stock)
          (= (next inventory_checked) true)))

  (transition check_legacy_portal
    (params (item_id itm))
    (pre  (= in_stock false))
    (post (= (next legacy_checked) true)))

  (transition assign_warehouse_picker
    (params (item_id itm) (quantity qty))
    (pre  (= in_stock true)
          (= inventory_checked true)
          (= picker_assigned false))
    (post (= (next picker_assigned) true)))

  (transition create_purchase_order
    (params (item_id itm) (quantity qty))
    (pre  (= in_stock false)
          (= legacy_checked true))
    (post (= (next po_created) true))))
"""


def make_procurement_schema() -> ToolSchema:
    S = type_from_json
    return ToolSchema(
        {
            "check_inventory": Tool(
                "check_inventory", (ToolParam("item_name", S("String")),), "read"
            ),
            "check_legacy_portal": Tool(
                "check_legacy_portal", (ToolParam("item_id", S("String")),), "read"
            ),
            "assign_warehouse_picker": Tool(
                "assign_warehouse_picker",
                (ToolParam("item_id", S("String")), ToolParam("quantity", S("Int"))),
                "write",
            ),
            "create_purchase_order": Tool(
                "create_purchase_order",
                (ToolParam("item_id", S("String")), ToolParam("quantity", S("Int"))),
                "write",
            ),
            "set_delivery_options": Tool(
                "set_delivery_options",
                (
                    ToolParam("item_id", S("String")),
                    ToolParam("is_residential", S("Bool"), required=False),
                ),
                "write",
            ),
        }
    )


@pytest.fixture(scope="session")
def procurement_schema() -> ToolSchema:
    return make_procurement_schema()


@pytest.fixture()
def fragment_model(procurement_schema):
    return type_check(parse_model(PROCUREMENT_FRAGMENT), procurement_schema)


@pytest.fixture()
def golden_model(procurement_schema):
    return type_check(parse_model(PROCUREMENT_GOLDEN), procurement_schema)
