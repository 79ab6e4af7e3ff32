"""Canonical JSON-shaped composition documents.

The canonical form is a single line of UTF-8 JSON with lexicographically
sorted keys and no insignificant whitespace. Decimal reals are written as
strings in plain positional notation. See ``docs/composition-format.md``.
"""

from __future__ import annotations

import json
from decimal import Decimal

from ..errors import CompositionSyntaxError, ModelError
from .datavalues import (
    TYPE_BY_RM_NAME,
    Boolean,
    CodedText,
    Count,
    DataValue,
    Date,
    DateTime,
    Proportion,
    Quantity,
    Text,
    format_decimal,
)
from .tree import Composition, InstanceNode, NodeKind

FORMAT_VERSION = 1

_encoder = json.JSONEncoder(ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def value_to_dict(v: DataValue) -> dict:
    t = type(v)
    if t is Quantity:
        d = {"_type": "DV_QUANTITY", "magnitude": format_decimal(v.magnitude), "units": v.units}
        if v.precision is not None:
            d["precision"] = v.precision
        return d
    if t is Count:
        return {"_type": "DV_COUNT", "magnitude": v.magnitude}
    if t is Boolean:
        return {"_type": "DV_BOOLEAN", "value": v.value}
    if t is Text:
        return {"_type": "DV_TEXT", "value": v.value}
    if t is CodedText:
        return {"_type": "DV_CODED_TEXT", "value": v.value, "terminology_id": v.terminology_id, "code": v.code}
    if t is Date:
        return {"_type": "DV_DATE", "value": v.value}
    if t is DateTime:
        return {"_type": "DV_DATE_TIME", "value": v.value}
    if t is Proportion:
        return {
            "_type": "DV_PROPORTION",
            "numerator": format_decimal(v.numerator),
            "denominator": format_decimal(v.denominator),
            "type": v.type.value,
        }
    raise ModelError(f"not a data value: {v!r}")


def node_to_dict(node: InstanceNode) -> dict:
    d = {"kind": node.kind.value, "name": node.name}
    if node.kind is NodeKind.ELEMENT:
        d["value"] = value_to_dict(node.value)
    else:
        d["items"] = [node_to_dict(c) for c in node.children]
    if node.archetype_id is not None:
        d["archetype_id"] = node.archetype_id
    return d


def composition_to_dict(c: Composition) -> dict:
    return {
        "_format": FORMAT_VERSION,
        "archetype_id": c.archetype_id,
        "kind": "COMPOSITION",
        "name": c.name,
        "content": [node_to_dict(e) for e in c.entries],
    }


def serialize_composition(c: Composition) -> str:
    """Render ``c`` as its canonical one-line document (no trailing newline)."""
    return _encoder.encode(composition_to_dict(c))


# -- parsing ---------------------------------------------------------------

_VALUE_KEYS = {
    "DV_QUANTITY": ({"magnitude", "units"}, {"precision"}),
    "DV_COUNT": ({"magnitude"}, set()),
    "DV_BOOLEAN": ({"value"}, set()),
    "DV_TEXT": ({"value"}, set()),
    "DV_CODED_TEXT": ({"value", "terminology_id", "code"}, set()),
    "DV_DATE": ({"value"}, set()),
    "DV_DATE_TIME": ({"value"}, set()),
    "DV_PROPORTION": ({"numerator", "denominator", "type"}, set()),
}


def _keys(obj, required: set, optional: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ModelError(f"{where}: expected an object")
    missing = required - obj.keys()
    if missing:
        raise ModelError(f"{where}: missing key(s) {', '.join(sorted(missing))}")
    unknown = obj.keys() - required - optional
    if unknown:
        raise ModelError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")


def _string(obj, key: str, where: str) -> str:
    v = obj[key]
    if not isinstance(v, str):
        raise ModelError(f"{where}.{key}: expected a string")
    return v


def value_from_dict(d, where: str = "value") -> DataValue:
    if not isinstance(d, dict) or "_type" not in d:
        raise ModelError(f"{where}: expected an object with a _type")
    rm = d["_type"]
    if rm not in TYPE_BY_RM_NAME:
        raise ModelError(f"{where}: unknown data value type {rm!r}")
    required, optional = _VALUE_KEYS[rm]
    _keys(d, required | {"_type"}, optional, where)
    try:
        if rm == "DV_QUANTITY":
            return Quantity(_string(d, "magnitude", where), d["units"], d.get("precision"))
        if rm == "DV_COUNT":
            return Count(d["magnitude"])
        if rm == "DV_BOOLEAN":
            return Boolean(d["value"])
        if rm == "DV_TEXT":
            return Text(d["value"])
        if rm == "DV_CODED_TEXT":
            return CodedText(d["value"], d["terminology_id"], d["code"])
        if rm == "DV_DATE":
            return Date(d["value"])
        if rm == "DV_DATE_TIME":
            return DateTime(d["value"])
        return Proportion(_string(d, "numerator", where), _string(d, "denominator", where), d["type"])
    except ModelError as exc:
        raise ModelError(f"{where}: {exc}") from None


def node_from_dict(d, where: str) -> InstanceNode:
    if not isinstance(d, dict):
        raise ModelError(f"{where}: expected an object")
    kind = d.get("kind")
    if kind == "ELEMENT":
        _keys(d, {"kind", "name", "value"}, {"archetype_id"}, where)
        return InstanceNode(NodeKind.ELEMENT, d["name"], value=value_from_dict(d["value"], f"{where}.value"),
                            archetype_id=d.get("archetype_id"))
    _keys(d, {"kind", "name", "items"}, {"archetype_id"}, where)
    items = d["items"]
    if not isinstance(items, list):
        raise ModelError(f"{where}.items: expected a list")
    children = tuple(node_from_dict(c, f"{where}.items[{i}]") for i, c in enumerate(items))
    try:
        return InstanceNode(kind, d["name"], children=children, archetype_id=d.get("archetype_id"))
    except ModelError as exc:
        raise ModelError(f"{where}: {exc}") from None


def composition_from_dict(d) -> Composition:
    _keys(d, {"_format", "archetype_id", "kind", "name", "content"}, set(), "document")
    if d["_format"] != FORMAT_VERSION or isinstance(d["_format"], bool):
        raise ModelError(f"document: unsupported _format {d['_format']!r}")
    if d["kind"] != "COMPOSITION":
        raise ModelError("document: root kind must be COMPOSITION")
    content = d["content"]
    if not isinstance(content, list):
        raise ModelError("document.content: expected a list")
    entries = tuple(node_from_dict(e, f"content[{i}]") for i, e in enumerate(content))
    return Composition(d["archetype_id"], d["name"], entries)


def _reject_constant(name: str):
    raise ValueError(f"non-standard JSON constant {name}")


def parse_composition(doc: str | bytes) -> Composition:
    """Parse a composition document.

    Accepts any JSON layout (whitespace and key order are not significant).

    Raises:
        CompositionSyntaxError: the text is not well-formed, with line/column.
        ModelError: well-formed text that violates a model invariant.
    """
    if isinstance(doc, (bytes, bytearray)):
        try:
            doc = doc.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CompositionSyntaxError(f"not valid UTF-8: {exc.reason}", line=1, column=exc.start + 1) from None
    try:
        data = json.loads(doc, parse_constant=_reject_constant, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise CompositionSyntaxError(exc.msg, line=exc.lineno, column=exc.colno) from None
    except ValueError as exc:
        raise CompositionSyntaxError(str(exc)) from None
    return composition_from_dict(data)
