"""Parser for the line-oriented archetype schema language.

A schema document holds one or more definitions. Each starts with an
unindented ``archetype:``, ``template:`` or ``stub:`` line followed by
``key: value`` lines; ``element:`` and ``slot:`` open blocks whose
attributes are indented beneath them::

    archetype: openEHR-EHR-OBSERVATION.body_weight.v1
    origin: ckm
    description: Body weight.
    element: weight
      kind: Quantity
      units: kg
      precision: 1
      range: 30..200
      category: physical

The full grammar is in ``docs/schema-format.md``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal

from ..archetype_id import ArchetypeId, parse_archetype_id
from ..errors import IdSyntaxError, SchemaSemanticError, SchemaSyntaxError
from ..rm.datavalues import RM_NAME_BY_KIND, TYPE_BY_KIND, ProportionKind

ORIGINS = ("new", "specialized", "ckm")
OCCURRENCES = ("required", "optional")
CATEGORIES = (
    "procedures",
    "diagnosis",
    "laboratory",
    "physical",
    "administrative-hcp",
    "administrative-hospitalization",
    "demographic",
)

_KIND_ALIASES = {**{k: k for k in TYPE_BY_KIND}, **{v: k for k, v in RM_NAME_BY_KIND.items()}}
_RANGE = re.compile(r"(-?[0-9]+(?:\.[0-9]+)?)\s*\.\.\s*(-?[0-9]+(?:\.[0-9]+)?)\Z")
_LINE = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)\Z")


@dataclass(frozen=True)
class ElementConstraint:
    name: str
    value_kind: str
    category: str
    occurrence: str = "optional"
    units: str | None = None
    precision: int | None = None
    code_system: str | None = None
    range: tuple[Decimal, Decimal] | None = None
    proportion: ProportionKind | None = None
    note: str | None = None
    line: int | None = field(default=None, compare=False)

    @property
    def required(self) -> bool:
        return self.occurrence == "required"


@dataclass(frozen=True)
class ArchetypeDefinition:
    id: ArchetypeId
    origin: str
    elements: tuple[ElementConstraint, ...] = ()
    parent: ArchetypeId | None = None
    description: str = ""
    source: str | None = field(default=None, compare=False)
    line: int | None = field(default=None, compare=False)

    @property
    def id_text(self) -> str:
        return self.id.render()

    @property
    def rm_type(self) -> str:
        return self.id.rm_type

    def element(self, name: str) -> ElementConstraint | None:
        for e in self.elements:
            if e.name == name:
                return e
        return None


@dataclass(frozen=True)
class Slot:
    archetype_id: ArchetypeId
    occurrence: str = "optional"
    line: int | None = field(default=None, compare=False)

    @property
    def required(self) -> bool:
        return self.occurrence == "required"


@dataclass(frozen=True)
class TemplateDefinition:
    id: str
    root: ArchetypeId
    slots: tuple[Slot, ...] = ()
    description: str = ""
    source: str | None = field(default=None, compare=False)
    line: int | None = field(default=None, compare=False)

    def slot_ids(self) -> list[str]:
        return [s.archetype_id.render() for s in self.slots]


@dataclass(frozen=True)
class StubDefinition:
    """A parent archetype referenced by a specialization but not itself shipped."""

    id: ArchetypeId
    description: str = ""
    source: str | None = field(default=None, compare=False)
    line: int | None = field(default=None, compare=False)


Definition = ArchetypeDefinition | TemplateDefinition | StubDefinition

_HEAD_KEYS = {
    "archetype": {"origin", "parent", "description"},
    "template": {"root", "description"},
    "stub": {"description"},
}
_BLOCK_KEYS = {
    "element": {"kind", "category", "occurrence", "units", "precision", "code_system", "range", "proportion", "note"},
    "slot": {"occurrence"},
}
_BLOCK_OWNER = {"element": "archetype", "slot": "template"}


class _Block:
    def __init__(self, key: str, value: str, line: int):
        self.key = key
        self.value = value
        self.line = line
        self.attrs: dict[str, tuple[str, int]] = {}


class _Def:
    def __init__(self, key: str, value: str, line: int):
        self.key = key
        self.value = value
        self.line = line
        self.attrs: dict[str, tuple[str, int]] = {}
        self.blocks: list[_Block] = []


def _split(lineno: int, text: str, source: str | None) -> tuple[str, str]:
    m = _LINE.match(text)
    if m is None:
        raise SchemaSyntaxError(f"expected 'key: value', got {text!r}", source=source, line=lineno, column=1)
    return m.group(1), m.group(2).strip()


def _scan(text: str, source: str | None) -> list[_Def]:
    defs: list[_Def] = []
    current: _Def | None = None
    block: _Block | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.lstrip()
        if not stripped or stripped.startswith("#"):
            continue
        indented = stripped != line
        key, value = _split(lineno, stripped, source)
        col = len(line) - len(stripped) + 1
        if indented:
            if block is None:
                raise SchemaSyntaxError(f"indented {key!r} outside an element or slot block",
                                        source=source, line=lineno, column=col)
            if key not in _BLOCK_KEYS[block.key]:
                raise SchemaSyntaxError(f"unknown {block.key} key {key!r}", source=source, line=lineno, column=col)
            if key in block.attrs:
                raise SchemaSyntaxError(f"duplicate key {key!r}", source=source, line=lineno, column=col)
            block.attrs[key] = (value, lineno)
            continue
        block = None
        if key in _HEAD_KEYS:
            current = _Def(key, value, lineno)
            defs.append(current)
            continue
        if current is None:
            raise SchemaSyntaxError(f"{key!r} before any archetype, template or stub line",
                                    source=source, line=lineno, column=1)
        if key in _BLOCK_KEYS:
            if _BLOCK_OWNER[key] != current.key:
                raise SchemaSyntaxError(f"{key!r} is not allowed in a {current.key}",
                                        source=source, line=lineno, column=1)
            block = _Block(key, value, lineno)
            current.blocks.append(block)
            continue
        if key not in _HEAD_KEYS[current.key]:
            raise SchemaSyntaxError(f"unknown {current.key} key {key!r}", source=source, line=lineno, column=1)
        if key in current.attrs:
            raise SchemaSyntaxError(f"duplicate key {key!r}", source=source, line=lineno, column=1)
        current.attrs[key] = (value, lineno)
    return defs


def _id(text: str, lineno: int, source: str | None) -> ArchetypeId:
    try:
        return parse_archetype_id(text)
    except IdSyntaxError as exc:
        raise SchemaSyntaxError(str(exc), source=source, line=lineno) from None


def _element(block: _Block, source: str | None) -> ElementConstraint:
    def sem(msg: str, key: str | None = None) -> SchemaSemanticError:
        line = block.attrs[key][1] if key in block.attrs else block.line
        return SchemaSemanticError(f"element {block.value!r}: {msg}", source=source, line=line)

    a = {k: v for k, (v, _) in block.attrs.items()}
    if not block.value:
        raise SchemaSyntaxError("element without a name", source=source, line=block.line)
    if "kind" not in a:
        raise sem("missing 'kind'")
    kind = _KIND_ALIASES.get(a["kind"])
    if kind is None:
        raise sem(f"unknown value kind {a['kind']!r}", "kind")
    if "category" not in a:
        raise sem("missing 'category'")
    if a["category"] not in CATEGORIES:
        raise sem(f"unknown category {a['category']!r}", "category")
    occurrence = a.get("occurrence", "optional")
    if occurrence not in OCCURRENCES:
        raise sem(f"occurrence must be required or optional, got {occurrence!r}", "occurrence")

    units = a.get("units")
    if units is not None and kind != "Quantity":
        raise sem(f"units only apply to Quantity, not {kind}", "units")
    if kind == "Quantity" and not units:
        raise sem("a Quantity element needs units")

    precision = None
    if "precision" in a:
        if kind not in ("Quantity", "Proportion"):
            raise sem(f"precision only applies to Quantity or Proportion, not {kind}", "precision")
        if not a["precision"].isdigit():
            raise sem("precision must be a non-negative integer", "precision")
        precision = int(a["precision"])

    code_system = a.get("code_system")
    if code_system is not None and kind != "CodedText":
        raise sem(f"code_system only applies to CodedText, not {kind}", "code_system")
    if kind == "CodedText" and not code_system:
        raise sem("a CodedText element needs a code_system")

    rng = None
    if "range" in a:
        if kind not in ("Quantity", "Count", "Proportion"):
            raise sem(f"range only applies to Quantity, Count or Proportion, not {kind}", "range")
        m = _RANGE.match(a["range"])
        if m is None:
            raise sem(f"range must look like 'min..max', got {a['range']!r}", "range")
        lo, hi = Decimal(m.group(1)), Decimal(m.group(2))
        if lo > hi:
            raise sem("range minimum exceeds maximum", "range")
        if kind == "Count" and (lo != lo.to_integral_value() or hi != hi.to_integral_value()):
            raise sem("a Count range must have integer bounds", "range")
        rng = (lo, hi)

    proportion = None
    if "proportion" in a:
        if kind != "Proportion":
            raise sem(f"proportion type only applies to Proportion, not {kind}", "proportion")
        try:
            proportion = ProportionKind(a["proportion"])
        except ValueError:
            raise sem(f"unknown proportion type {a['proportion']!r}", "proportion") from None
    elif kind == "Proportion":
        raise sem("a Proportion element needs 'proportion: ratio|percent|fraction'")

    return ElementConstraint(
        name=block.value,
        value_kind=kind,
        category=a["category"],
        occurrence=occurrence,
        units=units,
        precision=precision,
        code_system=code_system,
        range=rng,
        proportion=proportion,
        note=a.get("note"),
        line=block.line,
    )


def _archetype(d: _Def, source: str | None) -> ArchetypeDefinition:
    aid = _id(d.value, d.line, source)
    origin, origin_line = d.attrs.get("origin", (None, d.line))
    if origin is None:
        raise SchemaSemanticError(f"{aid}: missing 'origin'", source=source, line=d.line)
    if origin not in ORIGINS:
        raise SchemaSemanticError(f"{aid}: origin must be one of {', '.join(ORIGINS)}", source=source,
                                  line=origin_line)
    parent = None
    if "parent" in d.attrs:
        text, line = d.attrs["parent"]
        parent = _id(text, line, source)
        if origin != "specialized":
            raise SchemaSemanticError(f"{aid}: only specialized archetypes declare a parent",
                                      source=source, line=line)
        if not aid.specializes(parent):
            raise SchemaSemanticError(f"{aid}: parent {parent} is not a prefix of its concept chain",
                                      source=source, line=line)
    elif origin == "specialized":
        raise SchemaSemanticError(f"{aid}: a specialized archetype needs a parent", source=source, line=d.line)

    elements = []
    seen = set()
    for b in d.blocks:
        e = _element(b, source)
        if e.name in seen:
            raise SchemaSemanticError(f"{aid}: duplicate element {e.name!r}", source=source, line=b.line)
        seen.add(e.name)
        elements.append(e)
    if aid.rm_type == "COMPOSITION" and elements:
        raise SchemaSemanticError(f"{aid}: COMPOSITION archetypes carry no elements", source=source,
                                  line=elements[0].line)
    return ArchetypeDefinition(
        id=aid,
        origin=origin,
        elements=tuple(elements),
        parent=parent,
        description=d.attrs.get("description", ("", 0))[0],
        source=source,
        line=d.line,
    )


def _template(d: _Def, source: str | None) -> TemplateDefinition:
    if not d.value:
        raise SchemaSyntaxError("template without an id", source=source, line=d.line)
    if "root" not in d.attrs:
        raise SchemaSemanticError(f"template {d.value}: missing 'root'", source=source, line=d.line)
    text, line = d.attrs["root"]
    root = _id(text, line, source)
    if root.rm_type != "COMPOSITION":
        raise SchemaSemanticError(f"template {d.value}: root must be a COMPOSITION archetype",
                                  source=source, line=line)
    slots = []
    seen = set()
    for b in d.blocks:
        sid = _id(b.value, b.line, source)
        if sid.rm_type == "COMPOSITION":
            raise SchemaSemanticError(f"template {d.value}: slot {sid} cannot be a COMPOSITION",
                                      source=source, line=b.line)
        if sid in seen:
            raise SchemaSemanticError(f"template {d.value}: slot {sid} listed twice", source=source, line=b.line)
        seen.add(sid)
        occ, occ_line = b.attrs.get("occurrence", ("optional", b.line))
        if occ not in OCCURRENCES:
            raise SchemaSemanticError(f"occurrence must be required or optional, got {occ!r}",
                                      source=source, line=occ_line)
        slots.append(Slot(sid, occ, b.line))
    return TemplateDefinition(
        id=d.value,
        root=root,
        slots=tuple(slots),
        description=d.attrs.get("description", ("", 0))[0],
        source=source,
        line=d.line,
    )


def parse_schema_file(text: str, *, source: str | None = None) -> list[Definition]:
    """Parse a schema document into archetype, template and stub definitions.

    Raises:
        SchemaSyntaxError: malformed lines or unknown keys, with the line number.
        SchemaSemanticError: well-formed but contradictory declarations.
    """
    out: list[Definition] = []
    for d in _scan(text, source):
        if d.key == "archetype":
            out.append(_archetype(d, source))
        elif d.key == "template":
            out.append(_template(d, source))
        else:
            out.append(StubDefinition(_id(d.value, d.line, source),
                                      d.attrs.get("description", ("", 0))[0], source, d.line))
    return out
