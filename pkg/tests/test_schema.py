from __future__ import annotations

from decimal import Decimal
from pathlib import Path

import pytest

from datasus_openehr.archetypes import (
    ArchetypeDefinition,
    StubDefinition,
    TemplateDefinition,
    parse_schema_file,
    shipped_registry_dir,
)
from datasus_openehr.errors import SchemaSemanticError, SchemaSyntaxError
from datasus_openehr.rm import ProportionKind


def parse_one(text):
    (d,) = parse_schema_file(text, source="t.schema")
    return d


def test_shipped_body_weight():
    path = Path(shipped_registry_dir()) / "observation.body_weight.schema"
    (d,) = parse_schema_file(path.read_text(encoding="utf-8"), source=str(path))
    assert isinstance(d, ArchetypeDefinition)
    (e,) = d.elements
    assert (e.name, e.value_kind, e.units) == ("weight", "Quantity", "kg")
    assert d.origin == "ckm"


def test_empty_file():
    assert parse_schema_file("") == []
    assert parse_schema_file("# only a comment\n\n") == []


def test_full_element_block():
    d = parse_one("""archetype: openEHR-EHR-OBSERVATION.lab_test-x.v1
origin: new
description: test
element: glucose
  kind: DV_QUANTITY
  units: mg/dL
  precision: 0
  range: 40..600
  occurrence: required
  category: laboratory
element: ratio
  kind: Proportion
  proportion: percent
  range: 0..100
  category: laboratory
""")
    g = d.element("glucose")
    assert g.value_kind == "Quantity" and g.required
    assert g.range == (Decimal(40), Decimal(600))
    assert d.element("ratio").proportion is ProportionKind.PERCENT
    assert not d.element("ratio").required
    assert d.line == 1 and d.source == "t.schema"


def test_template_and_stub():
    defs = parse_schema_file("""template: t
root: openEHR-EHR-COMPOSITION.t.v1
slot: openEHR-EHR-OBSERVATION.a.v1
  occurrence: required
slot: openEHR-EHR-OBSERVATION.b.v1

stub: openEHR-EHR-OBSERVATION.lab_test.v1
""")
    t, s = defs
    assert isinstance(t, TemplateDefinition) and isinstance(s, StubDefinition)
    assert t.slot_ids() == ["openEHR-EHR-OBSERVATION.a.v1", "openEHR-EHR-OBSERVATION.b.v1"]
    assert [x.required for x in t.slots] == [True, False]


@pytest.mark.parametrize("body,where", [
    ("archetype: openEHR-EHR-OBSERVATION.x.v1\norigin: new\nbogus: 1\n", 3),
    ("archetype: openEHR-EHR-OBSERVATION.x.v1\norigin: new\nelement: a\n  kind: Text\n  colour: red\n", 5),
    ("archetype: openEHR-EHR-OBSERVATION.x.v1\norigin: new\n  kind: Text\n", 3),
    ("archetype: not-an-id\norigin: new\n", 1),
    ("no colon here\n", 1),
])
def test_syntax_errors_carry_line(body, where):
    with pytest.raises(SchemaSyntaxError) as info:
        parse_schema_file(body, source="t.schema")
    assert info.value.line == where
    assert str(info.value).startswith("t.schema, line")


ELEMENT = "archetype: openEHR-EHR-OBSERVATION.x.v1\norigin: new\nelement: a\n  category: laboratory\n"


@pytest.mark.parametrize("keys,message", [
    ("  kind: Date\n  code_system: ICD10\n", "code_system"),
    ("  kind: Boolean\n  units: kg\n", "units"),
    ("  kind: Quantity\n", "units"),
    ("  kind: CodedText\n", "code_system"),
    ("  kind: Text\n  range: 1..2\n", "range"),
    ("  kind: Count\n  range: 1.5..2\n", "range"),
    ("  kind: Quantity\n  units: kg\n  range: 5..1\n", "range"),
    ("  kind: Proportion\n", "proportion"),
    ("  kind: Text\n  precision: 1\n", "precision"),
    ("  kind: Nothing\n", "kind"),
    ("  kind: Text\n  occurrence: sometimes\n", "occurrence"),
])
def test_semantic_errors(keys, message):
    with pytest.raises(SchemaSemanticError, match=message):
        parse_schema_file(ELEMENT + keys)


def test_unknown_category():
    with pytest.raises(SchemaSemanticError, match="category"):
        parse_schema_file("archetype: openEHR-EHR-OBSERVATION.x.v1\norigin: new\nelement: a\n"
                          "  kind: Text\n  category: misc\n")


def test_missing_category():
    with pytest.raises(SchemaSemanticError, match="category"):
        parse_schema_file("archetype: openEHR-EHR-OBSERVATION.x.v1\norigin: new\nelement: a\n  kind: Text\n")


def test_duplicate_element_names():
    with pytest.raises(SchemaSemanticError, match="duplicate element"):
        parse_schema_file(ELEMENT + "  kind: Text\nelement: a\n  kind: Text\n  category: laboratory\n")


def test_specialized_needs_prefix_parent():
    head = "archetype: openEHR-EHR-OBSERVATION.lab_test-x.v1\norigin: specialized\n"
    with pytest.raises(SchemaSemanticError, match="needs a parent"):
        parse_schema_file(head)
    with pytest.raises(SchemaSemanticError):
        parse_schema_file(head + "parent: openEHR-EHR-OBSERVATION.other.v1\n")
    d = parse_one(head + "parent: openEHR-EHR-OBSERVATION.lab_test.v1\n")
    assert d.parent.render() == "openEHR-EHR-OBSERVATION.lab_test.v1"


def test_parent_only_for_specialized():
    with pytest.raises(SchemaSemanticError):
        parse_schema_file("archetype: openEHR-EHR-OBSERVATION.lab_test-x.v1\norigin: new\n"
                          "parent: openEHR-EHR-OBSERVATION.lab_test.v1\n")


def test_template_root_must_be_composition():
    with pytest.raises(SchemaSemanticError, match="root must be a COMPOSITION"):
        parse_schema_file("template: t\nroot: openEHR-EHR-OBSERVATION.t.v1\nslot: openEHR-EHR-OBSERVATION.a.v1\n")


def test_composition_archetype_has_no_elements():
    with pytest.raises(SchemaSemanticError, match="carry no elements"):
        parse_schema_file("archetype: openEHR-EHR-COMPOSITION.t.v1\norigin: new\nelement: a\n  kind: Text\n"
                          "  category: laboratory\n")
