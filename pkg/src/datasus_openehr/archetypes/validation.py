"""Constraint validation of compositions against a template."""

from __future__ import annotations

from dataclasses import dataclass

from ..rm.datavalues import TYPE_BY_KIND, CodedText, Count, Proportion, Quantity
from ..rm.tree import Composition, InstanceNode, NodeKind
from ..terminology import Terminology
from .registry import Registry
from .schema import ArchetypeDefinition, ElementConstraint, TemplateDefinition


@dataclass(frozen=True)
class Violation:
    """One failed constraint.

    ``path`` is ``<archetype id>/<element name>`` for element-level checks and
    the bare archetype id for entry-level ones.
    """

    path: str
    constraint: str
    message: str
    archetype_id: str | None = None

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __len__(self) -> int:
        return len(self.violations)

    def paths(self) -> set[str]:
        return {v.path for v in self.violations}


def _check_value(node: InstanceNode, c: ElementConstraint, path: str, aid: str,
                 terminology: Terminology, out: list[Violation]) -> None:
    v = node.value
    expected = TYPE_BY_KIND[c.value_kind]
    if type(v) is not expected:
        out.append(Violation(path, "value kind", f"value-kind mismatch: expected {c.value_kind}, got {v.kind}", aid))
        return
    if isinstance(v, Quantity):
        if c.units is not None and v.units != c.units:
            out.append(Violation(path, "units", f"units mismatch: expected {c.units}, got {v.units}", aid))
        if c.range is not None and not c.range[0] <= v.magnitude <= c.range[1]:
            out.append(Violation(path, "range", f"{v.magnitude} outside {c.range[0]}..{c.range[1]}", aid))
    elif isinstance(v, Count):
        if c.range is not None and not c.range[0] <= v.magnitude <= c.range[1]:
            out.append(Violation(path, "range", f"{v.magnitude} outside {c.range[0]}..{c.range[1]}", aid))
    elif isinstance(v, Proportion):
        if c.proportion is not None and v.type is not c.proportion:
            out.append(Violation(path, "proportion type",
                                 f"proportion type mismatch: expected {c.proportion.value}, got {v.type.value}", aid))
        if c.range is not None and not c.range[0] <= v.numerator <= c.range[1]:
            out.append(Violation(path, "range", f"numerator {v.numerator} outside {c.range[0]}..{c.range[1]}", aid))
    elif isinstance(v, CodedText):
        if v.terminology_id != c.code_system:
            out.append(Violation(path, "code system",
                                 f"code system mismatch: expected {c.code_system}, got {v.terminology_id}", aid))
        elif c.code_system in terminology:
            result = terminology.validate_code(c.code_system, v.code)
            if not result.valid:
                out.append(Violation(path, "code", f"code {v.code!r}: {result.reason}", aid))
        else:
            out.append(Violation(path, "code system", f"code system {c.code_system} is not loaded", aid))


def _check_entry(entry: InstanceNode, archetype: ArchetypeDefinition, terminology: Terminology,
                 out: list[Violation]) -> None:
    aid = archetype.id_text
    if entry.kind.value != archetype.rm_type:
        out.append(Violation(aid, "entry kind", f"expected {archetype.rm_type}, got {entry.kind.value}", aid))
    seen = set()
    for child in entry.children:
        path = f"{aid}/{child.name}"
        if child.kind is not NodeKind.ELEMENT:
            out.append(Violation(path, "structure", f"expected ELEMENT, got {child.kind.value}", aid))
            continue
        c = archetype.element(child.name)
        if c is None:
            out.append(Violation(path, "element name", f"no element {child.name!r} in {aid}", aid))
            continue
        if child.name in seen:
            out.append(Violation(path, "element occurrence", "element appears more than once", aid))
            continue
        seen.add(child.name)
        _check_value(child, c, path, aid, terminology, out)
    for c in archetype.elements:
        if c.required and c.name not in seen:
            out.append(Violation(f"{aid}/{c.name}", "required element", "required element missing", aid))


def validate_composition(c: Composition, template: TemplateDefinition | str, registry: Registry,
                         terminology: Terminology | None = None) -> ValidationReport:
    """Check ``c`` against ``template``; an empty report means valid.

    Checks slot membership and occurrence, element names, value kinds,
    required elements, units, ranges and codes.

    Raises:
        UnknownTemplateError: the template is not part of ``registry``.
    """
    t = registry.template(template)
    terminology = terminology if terminology is not None else registry.terminology
    out: list[Violation] = []
    root = t.root.render()
    if c.archetype_id != root:
        out.append(Violation(c.archetype_id, "root", f"expected root {root}", c.archetype_id))

    slots = {s.archetype_id.render(): s for s in t.slots}
    present = set()
    for entry in c.entries:
        aid = entry.archetype_id
        if aid is None or aid not in slots:
            label = aid or entry.name
            out.append(Violation(label, "slot membership", f"{label} is not a slot of template {t.id}", aid))
            continue
        if aid in present:
            out.append(Violation(aid, "slot occurrence", "entry appears more than once", aid))
            continue
        present.add(aid)
        _check_entry(entry, registry.archetype(aid), terminology, out)
    for aid, slot in slots.items():
        if slot.required and aid not in present:
            out.append(Violation(aid, "required slot", "required entry missing", aid))
    return ValidationReport(tuple(out))
