"""Structural comparison of compositions."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from .datavalues import DataValue, Proportion, Quantity
from .tree import Composition, InstanceNode


@dataclass(frozen=True)
class Comparison:
    """Outcome of :func:`compare_compositions`; truthy when equal."""

    equal: bool
    path: str | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.equal


_EQUAL = Comparison(True)


def _rounded(d: Decimal, precision: int) -> Decimal:
    return d.quantize(Decimal(1).scaleb(-precision), rounding=ROUND_HALF_UP)


def values_equal(a: DataValue, b: DataValue) -> bool:
    if type(a) is not type(b):
        return False
    if isinstance(a, Quantity):
        if a.units != b.units or a.precision != b.precision:
            return False
        if a.precision is not None:
            return _rounded(a.magnitude, a.precision) == _rounded(b.magnitude, b.precision)
        return a.magnitude == b.magnitude
    if isinstance(a, Proportion):
        return a.type is b.type and a.numerator == b.numerator and a.denominator == b.denominator
    # Date/DateTime compare by text form: a zoneless date-time only equals the same zoneless form.
    return a == b


def _compare_nodes(a: InstanceNode, b: InstanceNode, path: str) -> Comparison:
    if a.kind is not b.kind:
        return Comparison(False, path, f"kind {a.kind.value} != {b.kind.value}")
    if a.name != b.name:
        return Comparison(False, path, f"name {a.name!r} != {b.name!r}")
    if a.archetype_id != b.archetype_id:
        return Comparison(False, path, f"archetype {a.archetype_id} != {b.archetype_id}")
    if a.value is not None or b.value is not None:
        if not values_equal(a.value, b.value):
            return Comparison(False, path, f"value {a.value!r} != {b.value!r}")
        return _EQUAL
    if len(a.children) != len(b.children):
        return Comparison(False, path, f"{len(a.children)} children != {len(b.children)}")
    for ca, cb in zip(a.children, b.children):
        r = _compare_nodes(ca, cb, f"{path}/{ca.name}")
        if not r:
            return r
    return _EQUAL


def compare_compositions(a: Composition, b: Composition) -> Comparison:
    """Compare two compositions structurally.

    Quantities that both declare the same precision compare after rounding
    half-up to that precision; quantities with different declared precision
    are unequal. Returns a :class:`Comparison` naming the first difference.
    """
    if a.archetype_id != b.archetype_id:
        return Comparison(False, "", f"archetype {a.archetype_id} != {b.archetype_id}")
    if a.name != b.name:
        return Comparison(False, "", f"name {a.name!r} != {b.name!r}")
    if len(a.entries) != len(b.entries):
        return Comparison(False, "", f"{len(a.entries)} entries != {len(b.entries)}")
    for ea, eb in zip(a.entries, b.entries):
        r = _compare_nodes(ea, eb, ea.archetype_id or ea.name)
        if not r:
            return r
    return _EQUAL
