"""Instance trees: locatable nodes and the top-level composition."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator

from ..archetype_id import parse_archetype_id
from ..errors import IdSyntaxError, ModelError
from .datavalues import DataValue, is_data_value


class NodeKind(str, enum.Enum):
    COMPOSITION = "COMPOSITION"
    ADMIN_ENTRY = "ADMIN_ENTRY"
    OBSERVATION = "OBSERVATION"
    EVALUATION = "EVALUATION"
    INSTRUCTION = "INSTRUCTION"
    ACTION = "ACTION"
    CLUSTER = "CLUSTER"
    ELEMENT = "ELEMENT"


def _check_archetype_id(text: str, expected_kind: NodeKind | None) -> None:
    try:
        aid = parse_archetype_id(text)
    except IdSyntaxError as exc:
        raise ModelError(str(exc)) from None
    if expected_kind is not None and aid.rm_type != expected_kind.value:
        raise ModelError(f"archetype {text} is a {aid.rm_type}, node kind is {expected_kind.value}")


@dataclass(frozen=True, slots=True)
class InstanceNode:
    """One node of an instance tree.

    ELEMENT nodes carry a value and no children; every other kind carries
    at least one child and no value.
    """

    kind: NodeKind
    name: str
    value: DataValue | None = None
    children: tuple[InstanceNode, ...] = ()
    archetype_id: str | None = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", NodeKind(self.kind))
        except ValueError:
            raise ModelError(f"unknown node kind {self.kind!r}") from None
        if not isinstance(self.name, str) or not self.name:
            raise ModelError("node name must be a non-empty string")
        children = tuple(self.children)
        object.__setattr__(self, "children", children)
        if self.kind is NodeKind.ELEMENT:
            if self.value is None:
                raise ModelError(f"ELEMENT {self.name!r} has no value")
            if not is_data_value(self.value):
                raise ModelError(f"ELEMENT {self.name!r} value is not a data value")
            if children:
                raise ModelError(f"ELEMENT {self.name!r} cannot have children")
            if self.archetype_id is not None:
                raise ModelError(f"ELEMENT {self.name!r} cannot be an archetype root")
        else:
            if self.value is not None:
                raise ModelError(f"{self.kind.value} {self.name!r} cannot carry a value")
            if not children:
                raise ModelError(f"{self.kind.value} {self.name!r} must have at least one child")
            if self.kind is NodeKind.COMPOSITION:
                raise ModelError("COMPOSITION can only be the document root")
            for child in children:
                if not isinstance(child, InstanceNode):
                    raise ModelError(f"{self.kind.value} {self.name!r} has a non-node child")
            if self.archetype_id is not None:
                _check_archetype_id(self.archetype_id, self.kind)

    @classmethod
    def element(cls, name: str, value: DataValue) -> InstanceNode:
        return cls(NodeKind.ELEMENT, name, value=value)

    def walk(self) -> Iterator[InstanceNode]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass(frozen=True, slots=True)
class Composition:
    archetype_id: str
    name: str
    entries: tuple[InstanceNode, ...] = field(default=())

    def __post_init__(self):
        _check_archetype_id(self.archetype_id, NodeKind.COMPOSITION)
        if not isinstance(self.name, str) or not self.name:
            raise ModelError("composition name must be a non-empty string")
        entries = tuple(self.entries)
        if not entries:
            raise ModelError("a composition must have at least one entry")
        for e in entries:
            if not isinstance(e, InstanceNode):
                raise ModelError("composition entries must be instance nodes")
        object.__setattr__(self, "entries", entries)

    @property
    def kind(self) -> NodeKind:
        return NodeKind.COMPOSITION

    def walk(self) -> Iterator[InstanceNode]:
        for e in self.entries:
            yield from e.walk()

    def entry(self, archetype_id: str) -> InstanceNode | None:
        for e in self.entries:
            if e.archetype_id == archetype_id:
                return e
        return None

    def element_values(self) -> dict[tuple[str, str], DataValue]:
        """Map ``(archetype_id, element name)`` to value for archetype-rooted entries."""
        out = {}
        for e in self.entries:
            if e.archetype_id is None:
                continue
            for child in e.children:
                if child.kind is NodeKind.ELEMENT:
                    out[(e.archetype_id, child.name)] = child.value
        return out
