"""Archetype schema language, the shipped registry and composition validation."""

from ..archetype_id import ArchetypeId, parse_archetype_id
from .assembly import assemble_composition
from .registry import (
    EXPECTED_ARCHETYPES,
    EXPECTED_ATTRIBUTES,
    EXPECTED_ORIGINS,
    EXPECTED_TEMPLATES,
    EXPECTED_TYPES,
    Attribute,
    Registry,
    Tally,
    build_registry,
    load_registry,
    origin_histogram,
    read_schema_dir,
    render_attribute_manifest,
    shipped_registry_dir,
    tally,
    tally_definitions,
    type_histogram,
)
from .schema import (
    ArchetypeDefinition,
    ElementConstraint,
    Slot,
    StubDefinition,
    TemplateDefinition,
    parse_schema_file,
)
from .validation import ValidationReport, Violation, validate_composition

__all__ = [
    "ArchetypeDefinition", "ArchetypeId", "Attribute", "ElementConstraint", "EXPECTED_ARCHETYPES",
    "EXPECTED_ATTRIBUTES", "EXPECTED_ORIGINS", "EXPECTED_TEMPLATES", "EXPECTED_TYPES", "Registry",
    "Slot", "StubDefinition", "Tally", "TemplateDefinition", "ValidationReport", "Violation",
    "assemble_composition", "build_registry", "load_registry", "origin_histogram",
    "parse_archetype_id", "parse_schema_file", "read_schema_dir", "render_attribute_manifest",
    "shipped_registry_dir", "tally", "tally_definitions", "type_histogram", "validate_composition",
]
