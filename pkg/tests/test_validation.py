from __future__ import annotations

import dataclasses

import pytest

from datasus_openehr.archetypes import assemble_composition, validate_composition
from datasus_openehr.errors import UnknownTemplateError
from datasus_openehr.generator import GenSpec, generate
from datasus_openehr.rm import (
    CodedText,
    Composition,
    Count,
    Date,
    DateTime,
    InstanceNode,
    NodeKind,
    Quantity,
    Text,
)

WEIGHT = "openEHR-EHR-OBSERVATION.body_weight.v1"
DISCHARGE = "openEHR-EHR-ADMIN_ENTRY.patient_discharge.v1"
DEMO = "openEHR-EHR-ADMIN_ENTRY.demographic_data.v1"


def replace_element(c: Composition, aid: str, name: str, node: InstanceNode | None) -> Composition:
    entries = []
    for e in c.entries:
        if e.archetype_id == aid:
            children = [node if ch.name == name else ch for ch in e.children]
            children = [ch for ch in children if ch is not None]
            e = dataclasses.replace(e, children=tuple(children))
        entries.append(e)
    return dataclasses.replace(c, entries=tuple(entries))


@pytest.fixture(scope="module")
def hcp(registry):
    spec = GenSpec("outpatient_high_complex_procedures", 1, seed=5, null_rate=0.0)
    return next(generate(spec, registry))


@pytest.fixture(scope="module")
def hosp(registry):
    return next(generate(GenSpec("hospitalisation", 1, seed=5, null_rate=0.0), registry))


def test_generated_is_valid(registry, hcp, hosp):
    assert validate_composition(hcp, "outpatient_high_complex_procedures", registry).ok
    assert validate_composition(hosp, "hospitalisation", registry).ok


def test_text_where_quantity_expected(registry, hcp):
    bad = replace_element(hcp, WEIGHT, "weight", InstanceNode.element("weight", Text("heavy")))
    report = validate_composition(bad, "outpatient_high_complex_procedures", registry)
    (v,) = report.violations
    assert v.message.startswith("value-kind mismatch: expected Quantity")
    assert v.path == f"{WEIGHT}/weight"
    assert v.archetype_id == WEIGHT


def test_missing_discharge_date(registry, hosp):
    bad = replace_element(hosp, DISCHARGE, "date of discharge", None)
    report = validate_composition(bad, "hospitalisation", registry)
    (v,) = report.violations
    assert v.constraint == "required element"
    assert v.path == f"{DISCHARGE}/date of discharge"


def test_units_and_range(registry, hcp):
    bad = replace_element(hcp, WEIGHT, "weight", InstanceNode.element("weight", Quantity("70", "lb", 1)))
    assert [v.constraint for v in validate_composition(bad, "outpatient_high_complex_procedures", registry)
            .violations] == ["units"]
    bad = replace_element(hcp, WEIGHT, "weight", InstanceNode.element("weight", Quantity("200.1", "kg", 1)))
    assert [v.constraint for v in validate_composition(bad, "outpatient_high_complex_procedures", registry)
            .violations] == ["range"]


def test_bad_code(registry):
    values = {(DEMO, "gender"): CodedText("x", "SUS-GENDER", "X"), (DEMO, "birth date"): Date("1980-01-01")}
    c = assemble_composition(registry.template("demographic_data"), registry, values)
    (v,) = validate_composition(c, "demographic_data", registry).violations
    assert v.constraint == "code" and "not in enumeration" in v.message


def test_unknown_element_and_slot(registry, hosp):
    extra = InstanceNode.element("shoe size", Count(42))
    entries = list(hosp.entries)
    entries[0] = dataclasses.replace(entries[0], children=entries[0].children + (extra,))
    stray = InstanceNode(NodeKind.OBSERVATION, "height", children=(InstanceNode.element("height", Quantity(1, "cm")),),
                         archetype_id="openEHR-EHR-OBSERVATION.height.v1")
    entries.append(stray)
    c = dataclasses.replace(hosp, entries=tuple(entries))
    constraints = {v.constraint for v in validate_composition(c, "hospitalisation", registry).violations}
    assert constraints == {"element name", "slot membership"}


def test_missing_required_slot(registry, hosp):
    c = dataclasses.replace(hosp, entries=tuple(e for e in hosp.entries if e.archetype_id != DISCHARGE))
    (v,) = validate_composition(c, "hospitalisation", registry).violations
    assert v.constraint == "required slot" and v.path == DISCHARGE


def test_wrong_root(registry, hosp):
    c = Composition("openEHR-EHR-COMPOSITION.demographic_data.v1", "x", hosp.entries)
    constraints = [v.constraint for v in validate_composition(c, "hospitalisation", registry).violations]
    assert "root" in constraints


def test_datetime_kind_checked(registry):
    values = {(DEMO, "gender"): CodedText("feminino", "SUS-GENDER", "F"),
              (DEMO, "birth date"): DateTime("1980-01-01T00:00:00")}
    c = assemble_composition(registry.template("demographic_data"), registry, values)
    (v,) = validate_composition(c, "demographic_data", registry).violations
    assert v.constraint == "value kind"


def test_unknown_template(registry, hosp):
    with pytest.raises(UnknownTemplateError):
        validate_composition(hosp, "nope", registry)
