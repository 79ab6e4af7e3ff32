"""The eight openEHR data-value kinds used by the DATASUS archetype set.

Every value is an immutable dataclass that checks its invariants at
construction. Numeric reals are held as :class:`decimal.Decimal` so that a
serialized magnitude reads back exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from datetime import date, datetime
from decimal import Decimal
from typing import ClassVar, Union

from ..errors import ModelError

_PLAIN_DECIMAL = re.compile(r"-?[0-9]+(\.[0-9]+)?\Z")


def to_decimal(value, what: str = "value") -> Decimal:
    """Coerce ``value`` to a finite Decimal.

    Floats go through ``repr`` so ``70.1`` becomes ``Decimal('70.1')`` rather
    than its binary expansion.
    """
    if isinstance(value, bool):
        raise ModelError(f"{what}: booleans are not numbers")
    if isinstance(value, Decimal):
        d = value
    elif isinstance(value, int):
        d = Decimal(value)
    elif isinstance(value, float):
        d = Decimal(repr(value))
    elif isinstance(value, str):
        if not _PLAIN_DECIMAL.match(value):
            raise ModelError(f"{what}: {value!r} is not a plain decimal number")
        d = Decimal(value)
    else:
        raise ModelError(f"{what}: expected a number, got {type(value).__name__}")
    if not d.is_finite():
        raise ModelError(f"{what}: must be finite")
    return d


def format_decimal(d: Decimal) -> str:
    """Plain positional notation; never exponent form."""
    s = format(d, "f")
    return "0" if s == "-0" else s


class ProportionKind(str, enum.Enum):
    RATIO = "ratio"
    PERCENT = "percent"
    FRACTION = "fraction"


@dataclass(frozen=True, slots=True)
class Quantity:
    magnitude: Decimal
    units: str
    precision: int | None = None

    kind: ClassVar[str] = "Quantity"
    rm_type: ClassVar[str] = "DV_QUANTITY"

    def __post_init__(self):
        object.__setattr__(self, "magnitude", to_decimal(self.magnitude, "Quantity.magnitude"))
        if not isinstance(self.units, str) or not self.units:
            raise ModelError("Quantity.units must be a non-empty string")
        if self.precision is not None:
            if isinstance(self.precision, bool) or not isinstance(self.precision, int) or self.precision < 0:
                raise ModelError("Quantity.precision must be a non-negative integer")


@dataclass(frozen=True, slots=True)
class Count:
    magnitude: int

    kind: ClassVar[str] = "Count"
    rm_type: ClassVar[str] = "DV_COUNT"

    def __post_init__(self):
        if isinstance(self.magnitude, bool) or not isinstance(self.magnitude, int):
            raise ModelError("Count.magnitude must be an integer")


@dataclass(frozen=True, slots=True)
class Boolean:
    value: bool

    kind: ClassVar[str] = "Boolean"
    rm_type: ClassVar[str] = "DV_BOOLEAN"

    def __post_init__(self):
        if not isinstance(self.value, bool):
            raise ModelError("Boolean.value must be true or false")


@dataclass(frozen=True, slots=True)
class Text:
    value: str

    kind: ClassVar[str] = "Text"
    rm_type: ClassVar[str] = "DV_TEXT"

    def __post_init__(self):
        if not isinstance(self.value, str) or not self.value:
            raise ModelError("Text.value must be a non-empty string")


@dataclass(frozen=True, slots=True)
class CodedText:
    value: str
    terminology_id: str
    code: str

    kind: ClassVar[str] = "CodedText"
    rm_type: ClassVar[str] = "DV_CODED_TEXT"

    def __post_init__(self):
        if not isinstance(self.value, str) or not self.value:
            raise ModelError("CodedText.value must be a non-empty string")
        if not isinstance(self.terminology_id, str) or not self.terminology_id:
            raise ModelError("CodedText.terminology_id must be non-empty")
        if not isinstance(self.code, str) or not self.code:
            raise ModelError("CodedText.code must be non-empty")


@dataclass(frozen=True, slots=True)
class Date:
    value: str

    kind: ClassVar[str] = "Date"
    rm_type: ClassVar[str] = "DV_DATE"

    def __post_init__(self):
        try:
            ok = isinstance(self.value, str) and date.fromisoformat(self.value).isoformat() == self.value
        except ValueError:
            ok = False
        if not ok:
            raise ModelError(f"Date.value {self.value!r} is not an ISO-8601 calendar date (YYYY-MM-DD)")

    @classmethod
    def of(cls, d: date) -> Date:
        return cls(d.isoformat())

    def to_date(self) -> date:
        return date.fromisoformat(self.value)


@dataclass(frozen=True, slots=True)
class DateTime:
    """ISO-8601 date-time; the timezone designator is optional."""

    value: str

    kind: ClassVar[str] = "DateTime"
    rm_type: ClassVar[str] = "DV_DATE_TIME"

    def __post_init__(self):
        try:
            ok = (
                isinstance(self.value, str)
                and "T" in self.value
                and datetime.fromisoformat(self.value).isoformat() == self.value
            )
        except ValueError:
            ok = False
        if not ok:
            raise ModelError(f"DateTime.value {self.value!r} is not a canonical ISO-8601 date-time")

    @classmethod
    def of(cls, dt: datetime) -> DateTime:
        return cls(dt.isoformat())

    def to_datetime(self) -> datetime:
        return datetime.fromisoformat(self.value)

    @property
    def has_timezone(self) -> bool:
        return self.to_datetime().tzinfo is not None


@dataclass(frozen=True, slots=True)
class Proportion:
    numerator: Decimal
    denominator: Decimal
    type: ProportionKind = ProportionKind.RATIO

    kind: ClassVar[str] = "Proportion"
    rm_type: ClassVar[str] = "DV_PROPORTION"

    def __post_init__(self):
        object.__setattr__(self, "numerator", to_decimal(self.numerator, "Proportion.numerator"))
        object.__setattr__(self, "denominator", to_decimal(self.denominator, "Proportion.denominator"))
        try:
            object.__setattr__(self, "type", ProportionKind(self.type))
        except ValueError:
            raise ModelError(f"Proportion.type {self.type!r} is not one of ratio, percent, fraction") from None
        if self.denominator == 0:
            raise ModelError("Proportion.denominator must not be zero")
        if self.type is ProportionKind.PERCENT and self.denominator != 100:
            raise ModelError("a percent Proportion must have denominator 100")

    @classmethod
    def percent(cls, numerator) -> Proportion:
        return cls(numerator, Decimal(100), ProportionKind.PERCENT)


DataValue = Union[Quantity, Count, Boolean, Text, CodedText, Date, DateTime, Proportion]

VALUE_TYPES: tuple[type, ...] = (Quantity, Boolean, CodedText, Count, Date, DateTime, Proportion, Text)

# Kind names in the order the tally is usually reported.
VALUE_KINDS: tuple[str, ...] = tuple(t.kind for t in VALUE_TYPES)
TYPE_BY_KIND = {t.kind: t for t in VALUE_TYPES}
TYPE_BY_RM_NAME = {t.rm_type: t for t in VALUE_TYPES}
RM_NAME_BY_KIND = {t.kind: t.rm_type for t in VALUE_TYPES}


def is_data_value(obj) -> bool:
    return isinstance(obj, VALUE_TYPES)


__all__ = [
    "Boolean", "CodedText", "Count", "DataValue", "Date", "DateTime", "Proportion",
    "ProportionKind", "Quantity", "Text", "VALUE_KINDS", "VALUE_TYPES", "TYPE_BY_KIND",
    "TYPE_BY_RM_NAME", "RM_NAME_BY_KIND", "format_decimal", "is_data_value", "to_decimal",
]
