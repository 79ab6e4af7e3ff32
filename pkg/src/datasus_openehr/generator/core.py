"""Seeded synthetic compositions and matching flat source records."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_UP, Decimal
from itertools import islice
from typing import Iterator

from ..archetypes.assembly import assemble_composition
from ..archetypes.registry import Registry
from ..archetypes.schema import ElementConstraint, TemplateDefinition
from ..ingestion import Delimited, FixedWidth, MappingManifest, write_delimited_row
from ..rm.datavalues import (
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
from ..rm.tree import Composition
from ..terminology import ENUMERATED, Terminology
from .prng import SplitMix64

DEFAULT_WINDOW = (date(2008, 1, 1), date(2014, 12, 31))
BIRTH_WINDOW_START = date(1920, 1, 1)
MAX_STAY_DAYS = 60
OUTPUTS = ("compositions", "source-records", "both")

_WORDS = (
    "abdome", "acompanhamento", "alterado", "ausente", "braço", "controle", "direito", "esquerdo",
    "estável", "fígado", "grau", "leve", "mama", "moderado", "normal", "pelve", "presente",
    "próstata", "regular", "rim", "sem", "tórax", "tumor", "vesícula",
)
_ICD_LETTERS = "ABCDEFGHIJKLMNOPQRSTVWXYZ"


@dataclass(frozen=True)
class GenSpec:
    template_id: str
    count: int
    seed: int = 0
    null_rate: float = 0.1
    output: str = "compositions"
    window: tuple[date, date] = DEFAULT_WINDOW

    def __post_init__(self):
        if isinstance(self.count, bool) or not isinstance(self.count, int) or self.count < 1:
            raise ValueError("count must be a positive integer")
        if not 0.0 <= self.null_rate <= 1.0:
            raise ValueError("null_rate must be within [0, 1]")
        if self.output not in OUTPUTS:
            raise ValueError(f"output must be one of {', '.join(OUTPUTS)}")
        if self.window[0] > self.window[1]:
            raise ValueError("date window start is after its end")
        if not -(1 << 63) <= self.seed < (1 << 64):
            raise ValueError("seed must fit in 64 bits")


def _scaled_bounds(lo: Decimal, hi: Decimal, places: int) -> tuple[int, int]:
    a = lo.scaleb(places).to_integral_value(rounding=ROUND_CEILING)
    b = hi.scaleb(places).to_integral_value(rounding=ROUND_FLOOR)
    return int(a), int(b)


class _Plan:
    """Per-template lookups computed once per run."""

    def __init__(self, template: TemplateDefinition, registry: Registry, spec: GenSpec):
        self.template = template
        self.registry = registry
        self.spec = spec
        self.terminology: Terminology = registry.terminology
        self.slots = []
        self.by_name: dict[str, ElementConstraint] = {}
        for slot in template.slots:
            a = registry.archetype(slot.archetype_id)
            self.slots.append((a.id_text, slot.required, a.elements))
            for e in a.elements:
                self.by_name.setdefault(e.name, e)
        self.codes = {}
        for _, _, elements in self.slots:
            for e in elements:
                if e.code_system and e.code_system not in self.codes:
                    system = self.terminology.system(e.code_system)
                    if system.kind == ENUMERATED:
                        self.codes[e.code_system] = tuple(system.entries.items())
                    elif e.code_system not in _PATTERN_SAMPLERS:
                        raise ValueError(f"no sampler for pattern code system {e.code_system}")
        self.window_days = (spec.window[1] - spec.window[0]).days


def _sample_icd10(rng: SplitMix64) -> str:
    return f"{_ICD_LETTERS[rng.below(len(_ICD_LETTERS))]}{rng.below(1000):03d}"


_PATTERN_SAMPLERS = {
    "ICD10": _sample_icd10,
    "SIGTAP": lambda rng: f"{rng.below(10 ** 10):010d}",
    "CNES": lambda rng: f"{rng.below(10 ** 7):07d}",
}


class _RecordDraw:
    """Value draws for one record, with the cross-element consistency rules.

    Weight, height and admission time are drawn at most once per record so
    that body mass index and discharge date can be derived from them.
    """

    _SHARED = ("weight", "height", "admit date/time")

    def __init__(self, plan: _Plan, rng: SplitMix64):
        self.plan = plan
        self.rng = rng
        self.memo: dict[str, DataValue] = {}

    def value(self, c: ElementConstraint) -> DataValue:
        if c.name in self._SHARED:
            return self.shared(c.name, c)
        rule = _RULES.get(c.name)
        if rule is not None:
            return rule(self, c)
        return self.plain(c)

    def shared(self, name: str, c: ElementConstraint | None = None) -> DataValue | None:
        if name not in self.memo:
            c = c or self.plan.by_name.get(name)
            if c is None:
                return None
            self.memo[name] = self.plain(c)
        return self.memo[name]

    def plain(self, c: ElementConstraint) -> DataValue:
        rng = self.rng
        kind = c.value_kind
        if kind == "Quantity":
            p = c.precision or 0
            lo, hi = c.range or (Decimal(0), Decimal(1000))
            a, b = _scaled_bounds(lo, hi, p)
            return Quantity(Decimal(rng.integer(a, b)).scaleb(-p), c.units, c.precision)
        if kind == "Count":
            lo, hi = c.range or (Decimal(0), Decimal(100))
            return Count(rng.integer(int(lo), int(hi)))
        if kind == "Boolean":
            return Boolean(rng.below(2) == 1)
        if kind == "Text":
            n = 1 + rng.below(3)
            return Text(" ".join(_WORDS[rng.below(len(_WORDS))] for _ in range(n)))
        if kind == "CodedText":
            entries = self.plan.codes.get(c.code_system)
            if entries is not None:
                code, label = entries[rng.below(len(entries))]
                return CodedText(label, c.code_system, code)
            code = _PATTERN_SAMPLERS[c.code_system](rng)
            return CodedText(code, c.code_system, code)
        if kind == "Date":
            return Date.of(self.day())
        if kind == "DateTime":
            d = self.day()
            minute = rng.below(24 * 60)
            return DateTime.of(datetime(d.year, d.month, d.day, minute // 60, minute % 60))
        if kind == "Proportion":
            p = c.precision or 0
            ptype = c.proportion or ProportionKind.RATIO
            lo, hi = c.range or (Decimal(0), Decimal(100))
            a, b = _scaled_bounds(lo, hi, p)
            numerator = Decimal(rng.integer(a, b)).scaleb(-p)
            if ptype is ProportionKind.PERCENT:
                return Proportion(numerator, Decimal(100), ptype)
            return Proportion(numerator, Decimal(1), ptype)
        raise ValueError(f"cannot generate {kind}")

    def day(self, start: date | None = None) -> date:
        start = start or self.plan.spec.window[0]
        span = (self.plan.spec.window[1] - start).days
        return start + timedelta(days=self.rng.below(span + 1))


def _discharge(draw: _RecordDraw, c: ElementConstraint) -> DataValue:
    admit = draw.shared("admit date/time")
    if admit is None or c.value_kind != "Date":
        return draw.plain(c)
    first = admit.to_datetime().date()
    last = min(first + timedelta(days=MAX_STAY_DAYS), draw.plan.spec.window[1])
    return Date.of(first + timedelta(days=draw.rng.below((last - first).days + 1)))


def _bmi(draw: _RecordDraw, c: ElementConstraint) -> DataValue:
    weight, height = draw.shared("weight"), draw.shared("height")
    if weight is None or height is None or c.value_kind != "Quantity":
        return draw.plain(c)
    metres = height.magnitude / 100
    bmi = (weight.magnitude / (metres * metres)).quantize(Decimal(1).scaleb(-(c.precision or 0)),
                                                          rounding=ROUND_HALF_UP)
    return Quantity(bmi, c.units, c.precision)


def _birth_date(draw: _RecordDraw, c: ElementConstraint) -> DataValue:
    if c.value_kind != "Date":
        return draw.plain(c)
    return Date.of(draw.day(BIRTH_WINDOW_START))


_RULES = {
    "date of discharge": _discharge,
    "body mass index": _bmi,
    "birth date": _birth_date,
}


def _one(plan: _Plan, index: int) -> Composition:
    rng = SplitMix64.for_record(plan.spec.seed, index)
    draw = _RecordDraw(plan, rng)
    null_rate = plan.spec.null_rate
    values: dict[tuple[str, str], DataValue] = {}
    for aid, slot_required, elements in plan.slots:
        present = [e for e in elements if e.required or rng.random() >= null_rate]
        if slot_required and not present and elements:
            present = [elements[0]]
        for e in present:
            values[(aid, e.name)] = draw.value(e)
    if not values:
        aid, _, elements = plan.slots[0]
        values[(aid, elements[0].name)] = draw.value(elements[0])
    return assemble_composition(plan.template, plan.registry, values)


def generate(spec: GenSpec, registry: Registry, *, threads: int = 1) -> Iterator[Composition]:
    """Yield ``spec.count`` valid compositions for ``spec.template_id``.

    Output depends only on the seed, the other GenSpec fields and the registry;
    each record draws from its own stream so ``threads`` never changes it.

    Raises:
        UnknownTemplateError: immediately, before any output.
    """
    template = registry.template(spec.template_id)
    plan = _Plan(template, registry, spec)
    if threads <= 1:
        return (_one(plan, i) for i in range(spec.count))
    return _sharded(plan, threads)


def _sharded(plan: _Plan, threads: int) -> Iterator[Composition]:
    indices = iter(range(plan.spec.count))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        while True:
            batch = list(islice(indices, threads * 64))
            if not batch:
                return
            yield from pool.map(lambda i: _one(plan, i), batch)


# -- flat source output ----------------------------------------------------

def source_row(c: Composition, manifest: MappingManifest) -> str:
    """Render ``c`` as one input line that maps back to an equal composition."""
    values = c.element_values()
    by_column = {}
    for b in manifest.bindings:
        v = values.get((b.archetype_id, b.element))
        by_column[b.column] = "" if v is None else b.transform.render(v)
    fmt = manifest.source_format
    if isinstance(fmt, FixedWidth):
        chars = [" "] * fmt.line_length
        for s in fmt.spans:
            text = by_column.get(s.name, "")
            if len(text) > s.end - s.start:
                raise ValueError(f"{text!r} does not fit span {s.name} ({s.end - s.start} characters)")
            chars[s.start:s.start + len(text)] = text
        return "".join(chars)
    return write_delimited_row([by_column.get(col, "") for col in manifest.column_names()], fmt.separator)


def source_header(manifest: MappingManifest) -> str | None:
    fmt = manifest.source_format
    if isinstance(fmt, Delimited) and fmt.header:
        return write_delimited_row([str(c) for c in manifest.column_names()], fmt.separator)
    return None


def source_lines(compositions, manifest: MappingManifest) -> Iterator[str]:
    """Header (when the format has one) followed by one line per composition."""
    header = source_header(manifest)
    if header is not None:
        yield header
    for c in compositions:
        yield source_row(c, manifest)


def generate_source_records(spec: GenSpec, registry: Registry, manifest: MappingManifest,
                            *, threads: int = 1) -> Iterator[str]:
    if manifest.template_id != spec.template_id:
        raise ValueError(f"manifest is for {manifest.template_id}, spec for {spec.template_id}")
    return source_lines(generate(spec, registry, threads=threads), manifest)
