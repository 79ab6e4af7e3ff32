"""Loading the shipped archetype set and computing its published tallies."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from ..errors import (
    AttributeManifestError,
    DanglingParentError,
    DuplicateIdError,
    TallyError,
    UnknownSlotError,
    UnknownTemplateError,
    UnresolvedCodeSystemError,
)
from ..rm.datavalues import VALUE_KINDS
from ..terminology import Terminology, default_terminology
from .schema import (
    ORIGINS,
    ArchetypeDefinition,
    Definition,
    ElementConstraint,
    StubDefinition,
    TemplateDefinition,
    parse_schema_file,
)

# Published counts for the DATASUS HIS/HCPM archetype set.
EXPECTED_ARCHETYPES = 22
EXPECTED_ORIGINS = {"new": 8, "specialized": 5, "ckm": 9}
EXPECTED_ATTRIBUTES = 62
EXPECTED_TYPES = {
    "Quantity": 6,
    "Boolean": 7,
    "CodedText": 23,
    "Count": 7,
    "Date": 7,
    "DateTime": 3,
    "Proportion": 2,
    "Text": 7,
}
EXPECTED_TEMPLATES = ("demographic_data", "hospitalisation", "outpatient_high_complex_procedures")

ATTRIBUTE_COLUMNS = ("archetype_id", "element_name", "value_kind", "category", "units", "code_system",
                     "occurrence", "confidence")


def shipped_registry_dir() -> Path:
    return Path(str(resources.files("datasus_openehr") / "data" / "registry"))


@dataclass(frozen=True)
class Attribute:
    archetype_id: str
    element: ElementConstraint

    @property
    def path(self) -> str:
        return f"{self.archetype_id}/{self.element.name}"


@dataclass(frozen=True)
class Registry:
    archetypes: Mapping[str, ArchetypeDefinition]
    templates: Mapping[str, TemplateDefinition]
    stubs: Mapping[str, StubDefinition] = field(default_factory=dict)
    terminology: Terminology = field(default_factory=default_terminology, compare=False)

    def archetype(self, archetype_id) -> ArchetypeDefinition:
        return self.archetypes[str(archetype_id)]

    def template(self, template) -> TemplateDefinition:
        """Resolve a template id (or definition) that must belong to this registry."""
        tid = template.id if isinstance(template, TemplateDefinition) else template
        try:
            return self.templates[tid]
        except KeyError:
            available = ", ".join(sorted(self.templates)) or "none"
            raise UnknownTemplateError(f"unknown template {tid!r}; available: {available}") from None

    def attributes(self) -> list[Attribute]:
        """The attribute dictionary: every element of every non-COMPOSITION archetype."""
        return [
            Attribute(aid, e)
            for aid, a in self.archetypes.items()
            if a.rm_type != "COMPOSITION"
            for e in a.elements
        ]

    def restrict(self, archetype_ids: Iterable[str]) -> Registry:
        keep = {str(a) for a in archetype_ids}
        return Registry(
            archetypes={k: v for k, v in self.archetypes.items() if k in keep},
            templates={},
            stubs=self.stubs,
            terminology=self.terminology,
        )


@dataclass(frozen=True)
class Tally:
    archetypes: int
    origins: dict[str, int]
    attributes: int
    types: dict[str, int]
    templates: tuple[str, ...]

    def mismatches(self) -> list[str]:
        """Each published count this tally disagrees with, as ``name=actual (expected N)``."""
        out = []
        if self.archetypes != EXPECTED_ARCHETYPES:
            out.append(f"archetypes={self.archetypes} (expected {EXPECTED_ARCHETYPES})")
        for origin in ORIGINS:
            if self.origins.get(origin, 0) != EXPECTED_ORIGINS[origin]:
                out.append(f"{origin}={self.origins.get(origin, 0)} (expected {EXPECTED_ORIGINS[origin]})")
        if self.attributes != EXPECTED_ATTRIBUTES:
            out.append(f"attributes={self.attributes} (expected {EXPECTED_ATTRIBUTES})")
        for kind in VALUE_KINDS:
            if self.types.get(kind, 0) != EXPECTED_TYPES[kind]:
                out.append(f"{kind}={self.types.get(kind, 0)} (expected {EXPECTED_TYPES[kind]})")
        if tuple(sorted(self.templates)) != EXPECTED_TEMPLATES:
            out.append(f"templates={','.join(sorted(self.templates))} (expected {','.join(EXPECTED_TEMPLATES)})")
        return out


def _histogram(elements: Iterable[ElementConstraint]) -> dict[str, int]:
    counts = Counter(e.value_kind for e in elements)
    return {k: counts.get(k, 0) for k in VALUE_KINDS}


def tally_definitions(definitions: Iterable[Definition]) -> Tally:
    archetypes = [d for d in definitions if isinstance(d, ArchetypeDefinition)]
    templates = tuple(d.id for d in definitions if isinstance(d, TemplateDefinition))
    origins = Counter(a.origin for a in archetypes)
    elements = [e for a in archetypes if a.rm_type != "COMPOSITION" for e in a.elements]
    return Tally(
        archetypes=len(archetypes),
        origins={o: origins.get(o, 0) for o in ORIGINS},
        attributes=len(elements),
        types=_histogram(elements),
        templates=templates,
    )


def tally(registry: Registry) -> Tally:
    return tally_definitions([*registry.archetypes.values(), *registry.templates.values()])


def type_histogram(registry: Registry) -> dict[str, int]:
    """Count attribute-dictionary entries per data-value kind (zeros included)."""
    return _histogram(a.element for a in registry.attributes())


def origin_histogram(registry: Registry) -> dict[str, int]:
    counts = Counter(a.origin for a in registry.archetypes.values())
    return {o: counts.get(o, 0) for o in ORIGINS}


def read_schema_dir(directory: str | Path) -> list[Definition]:
    """Parse every ``*.schema`` file under ``directory`` in file-name order."""
    defs: list[Definition] = []
    for path in sorted(Path(directory).glob("*.schema")):
        defs.extend(parse_schema_file(path.read_text(encoding="utf-8"), source=path.name))
    return defs


def build_registry(definitions: Iterable[Definition], *, terminology: Terminology | None = None,
                   strict: bool = False) -> Registry:
    """Link parsed definitions into a :class:`Registry`.

    Raises:
        DuplicateIdError, DanglingParentError, UnknownSlotError,
        UnresolvedCodeSystemError, or TallyError when ``strict`` and the
        counts differ from the published ones.
    """
    archetypes: dict[str, ArchetypeDefinition] = {}
    templates: dict[str, TemplateDefinition] = {}
    stubs: dict[str, StubDefinition] = {}

    def where(d) -> str:
        return f" ({d.source}, line {d.line})" if d.source else ""

    for d in definitions:
        if isinstance(d, TemplateDefinition):
            if d.id in templates:
                raise DuplicateIdError(f"template {d.id!r} defined twice{where(d)}")
            templates[d.id] = d
            continue
        key = d.id.render()
        if key in archetypes or key in stubs:
            raise DuplicateIdError(f"archetype {key} defined twice{where(d)}")
        if isinstance(d, StubDefinition):
            stubs[key] = d
        else:
            archetypes[key] = d

    for a in archetypes.values():
        if a.parent is not None:
            pid = a.parent.render()
            if pid not in archetypes and pid not in stubs:
                raise DanglingParentError(f"{a.id_text}: parent {pid} is neither an archetype nor a stub{where(a)}")

    for t in templates.values():
        root = t.root.render()
        if root not in archetypes:
            raise UnknownSlotError(f"template {t.id}: root {root} is not in the registry{where(t)}")
        for s in t.slots:
            sid = s.archetype_id.render()
            if sid not in archetypes:
                raise UnknownSlotError(f"template {t.id}: slot {sid} is not in the registry{where(t)}")

    terminology = terminology if terminology is not None else default_terminology()
    for a in archetypes.values():
        for e in a.elements:
            if e.code_system is not None and e.code_system not in terminology:
                raise UnresolvedCodeSystemError(
                    f"{a.id_text}/{e.name}: code system {e.code_system} is not loaded")

    registry = Registry(MappingProxyType(archetypes), MappingProxyType(templates), MappingProxyType(stubs),
                        terminology)
    if strict:
        problems = tally(registry).mismatches()
        if problems:
            raise TallyError("; ".join(problems))
    return registry


def load_registry(directory: str | Path | None = None, *, strict: bool = False,
                  terminology: Terminology | None = None, codes_dir: str | Path | None = None) -> Registry:
    """Load ``*.schema`` files (default: the shipped set) into a registry.

    When the directory holds an ``attributes.tsv`` dictionary it must agree
    with the schema files row for row.
    """
    directory = Path(directory) if directory is not None else shipped_registry_dir()
    if terminology is None:
        terminology = Terminology.load(codes_dir) if codes_dir is not None else default_terminology()
    registry = build_registry(read_schema_dir(directory), terminology=terminology, strict=strict)
    manifest = directory / "attributes.tsv"
    if manifest.exists():
        check_attribute_manifest(registry, manifest.read_text(encoding="utf-8"))
    return registry


# -- attribute dictionary file ---------------------------------------------

def attribute_rows(registry: Registry) -> list[dict[str, str]]:
    return [
        {
            "archetype_id": a.archetype_id,
            "element_name": a.element.name,
            "value_kind": a.element.value_kind,
            "category": a.element.category,
            "units": a.element.units or "",
            "code_system": a.element.code_system or "",
            "occurrence": a.element.occurrence,
            "confidence": a.element.note or "",
        }
        for a in registry.attributes()
    ]


def render_attribute_manifest(registry: Registry) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=ATTRIBUTE_COLUMNS, delimiter="\t", lineterminator="\n")
    writer.writeheader()
    writer.writerows(attribute_rows(registry))
    return buf.getvalue()


def check_attribute_manifest(registry: Registry, text: str) -> None:
    reader = csv.DictReader(io.StringIO(text), delimiter="\t")
    if tuple(reader.fieldnames or ()) != ATTRIBUTE_COLUMNS:
        raise AttributeManifestError(f"attributes.tsv: expected columns {', '.join(ATTRIBUTE_COLUMNS)}")
    got = {(r["archetype_id"], r["element_name"]): r for r in reader}
    want = {(r["archetype_id"], r["element_name"]): r for r in attribute_rows(registry)}
    missing = sorted(want.keys() - got.keys())
    extra = sorted(got.keys() - want.keys())
    if missing or extra:
        raise AttributeManifestError(
            f"attributes.tsv disagrees with schema files: missing {missing[:3]}, unexpected {extra[:3]}")
    for key, row in want.items():
        if got[key] != row:
            diff = [c for c in ATTRIBUTE_COLUMNS if got[key][c] != row[c]]
            raise AttributeManifestError(f"attributes.tsv: {key[0]}/{key[1]} differs in {', '.join(diff)}")
