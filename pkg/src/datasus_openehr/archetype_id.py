"""Archetype identifiers of the form ``openEHR-EHR-<RM>.<concept>[-<spec>...].v<N>``."""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .errors import IdSyntaxError

PREFIX = "openEHR-EHR-"

RM_TYPES = frozenset({
    "COMPOSITION",
    "ADMIN_ENTRY",
    "OBSERVATION",
    "EVALUATION",
    "INSTRUCTION",
    "ACTION",
    "CLUSTER",
})

_SEGMENT = re.compile(r"[A-Za-z0-9_]+\Z")
_VERSION = re.compile(r"v([1-9][0-9]*)\Z")


@dataclass(frozen=True)
class ArchetypeId:
    rm_type: str
    concept: str
    specializations: tuple[str, ...] = ()
    version: int = 1

    def __str__(self) -> str:
        return self.render()

    def render(self) -> str:
        return f"{PREFIX}{self.rm_type}.{self.concept_path}.v{self.version}"

    @property
    def concept_path(self) -> str:
        """Concept joined with its specialization segments, e.g. ``procedure-sus``."""
        return "-".join((self.concept, *self.specializations))

    @property
    def is_specialized(self) -> bool:
        return bool(self.specializations)

    def parent(self) -> ArchetypeId | None:
        """The id obtained by dropping the last specialization segment."""
        if not self.specializations:
            return None
        return ArchetypeId(self.rm_type, self.concept, self.specializations[:-1], self.version)

    def specializes(self, other: ArchetypeId) -> bool:
        """True when ``other``'s concept chain is a proper prefix of this one's."""
        mine = (self.concept, *self.specializations)
        theirs = (other.concept, *other.specializations)
        return (
            self.rm_type == other.rm_type
            and len(theirs) < len(mine)
            and mine[: len(theirs)] == theirs
        )


@lru_cache(maxsize=4096)
def parse_archetype_id(text: str) -> ArchetypeId:
    """Split an archetype id string into its parts.

    Raises:
        IdSyntaxError: wrong prefix, unknown RM type, bad version or empty segment.
    """
    if not isinstance(text, str):
        raise IdSyntaxError(f"archetype id must be a string, got {type(text).__name__}")
    if not text.startswith(PREFIX):
        raise IdSyntaxError(f"{text!r}: expected prefix {PREFIX!r}")
    rest = text[len(PREFIX):]
    parts = rest.split(".")
    if len(parts) != 3:
        raise IdSyntaxError(f"{text!r}: expected <rm_type>.<concept>.v<version>")
    rm_type, concept_path, version = parts
    if rm_type not in RM_TYPES:
        raise IdSyntaxError(f"{text!r}: unsupported reference-model type {rm_type!r}")
    m = _VERSION.match(version)
    if m is None:
        raise IdSyntaxError(f"{text!r}: missing or malformed version {version!r}")
    segments = concept_path.split("-")
    for seg in segments:
        if not _SEGMENT.match(seg):
            raise IdSyntaxError(f"{text!r}: empty or malformed concept segment {seg!r}")
    return ArchetypeId(rm_type, segments[0], tuple(segments[1:]), int(m.group(1)))
