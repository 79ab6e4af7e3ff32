"""Building template-shaped compositions from element values."""

from __future__ import annotations

from typing import Mapping

from ..rm.datavalues import DataValue
from ..rm.tree import Composition, InstanceNode, NodeKind
from .registry import Registry
from .schema import TemplateDefinition


def assemble_composition(template: TemplateDefinition, registry: Registry,
                         values: Mapping[tuple[str, str], DataValue]) -> Composition:
    """Lay ``values`` out in template slot order, archetype element order.

    Keys are ``(archetype id, element name)``; slots with no values are left
    out. Raises ModelError when nothing at all is present.
    """
    entries = []
    for slot in template.slots:
        aid = slot.archetype_id.render()
        archetype = registry.archetype(aid)
        children = [
            InstanceNode(NodeKind.ELEMENT, e.name, value=values[(aid, e.name)])
            for e in archetype.elements
            if (aid, e.name) in values
        ]
        if children:
            entries.append(InstanceNode(NodeKind(archetype.rm_type), archetype.id.concept_path,
                                        children=tuple(children), archetype_id=aid))
    return Composition(template.root.render(), template.id, tuple(entries))
