"""Minimal openEHR reference-model kernel."""

from .compare import Comparison, compare_compositions, values_equal
from .datavalues import (
    RM_NAME_BY_KIND,
    TYPE_BY_KIND,
    VALUE_KINDS,
    Boolean,
    CodedText,
    Count,
    DataValue,
    Date,
    DateTime,
    Proportion,
    ProportionKind,
    Quantity,
    Text,
)
from .serialization import parse_composition, serialize_composition
from .tree import Composition, InstanceNode, NodeKind

__all__ = [
    "Boolean", "CodedText", "Comparison", "Composition", "Count", "DataValue", "Date",
    "DateTime", "InstanceNode", "NodeKind", "Proportion", "ProportionKind", "Quantity",
    "RM_NAME_BY_KIND", "TYPE_BY_KIND", "Text", "VALUE_KINDS", "compare_compositions",
    "parse_composition", "serialize_composition", "values_equal",
]
