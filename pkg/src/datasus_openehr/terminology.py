"""Code systems: ICD-10, SIGTAP and CNES by pattern, local SUS lists by enumeration.

Local lists are flat UTF-8 files named ``<system>.tsv`` (``sus-gender.tsv``
holds system ``SUS-GENDER``), one ``code<TAB>label`` pair per line, with
``#`` comments and blank lines ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .errors import DuplicateCodeError, FormatError, UnknownSystemError

PATTERN = "pattern"
ENUMERATED = "enumerated"


@dataclass(frozen=True)
class CodeSystem:
    id: str
    kind: str
    pattern: re.Pattern | None = None
    pattern_description: str | None = None
    entries: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == PATTERN:
            if self.pattern is None:
                raise ValueError(f"{self.id}: pattern-based system needs a pattern")
        elif self.kind == ENUMERATED:
            if not self.entries:
                raise ValueError(f"{self.id}: enumerated system needs at least one entry")
            object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))
        else:
            raise ValueError(f"{self.id}: unknown code system kind {self.kind!r}")

    def lookup(self, code: str) -> CodeLookupResult:
        if self.kind == PATTERN:
            if isinstance(code, str) and self.pattern.fullmatch(code):
                return CodeLookupResult(True, display=code)
            return CodeLookupResult(False, reason=f"expected {self.pattern_description}")
        label = self.entries.get(code)
        if label is None:
            return CodeLookupResult(False, reason="not in enumeration")
        return CodeLookupResult(True, display=label)


@dataclass(frozen=True)
class CodeLookupResult:
    valid: bool
    display: str | None = None
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.valid


# Syntactic checks only; the full tables are external assets.
BUILTIN_SYSTEMS: dict[str, CodeSystem] = {
    s.id: s
    for s in (
        CodeSystem("ICD10", PATTERN, re.compile(r"[A-Z][0-9]{2}(\.?[0-9]{1,2})?"),
                   "letter + 2 digits + optional subdivision"),
        CodeSystem("SIGTAP", PATTERN, re.compile(r"[0-9]{10}"), "10 digits"),
        CodeSystem("CNES", PATTERN, re.compile(r"[0-9]{7}"), "7 digits"),
    )
}


def system_id_for_file(path: Path) -> str:
    return path.stem.upper()


def parse_code_list(text: str, system_id: str, *, source: str | None = None) -> CodeSystem:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError("expected 'code<TAB>label'", source=source, line=lineno)
        code, label = parts[0].strip(), parts[1].strip()
        if not code or not label:
            raise FormatError("empty code or label", source=source, line=lineno)
        if code in entries:
            raise DuplicateCodeError(f"code {code!r} defined twice in {system_id}", source=source, line=lineno)
        entries[code] = label
    if not entries:
        raise FormatError(f"{system_id} has no entries", source=source)
    return CodeSystem(system_id, ENUMERATED, entries=entries)


def load_code_lists(directory: str | Path) -> dict[str, CodeSystem]:
    """Load every ``*.tsv`` flat definition file in ``directory``, keyed by system id."""
    systems: dict[str, CodeSystem] = {}
    for path in sorted(Path(directory).glob("*.tsv")):
        sid = system_id_for_file(path)
        systems[sid] = parse_code_list(path.read_text(encoding="utf-8"), sid, source=str(path))
    return systems


def shipped_codes_dir() -> Path:
    return Path(str(resources.files("datasus_openehr") / "data" / "codes"))


class Terminology:
    """A set of code systems with lookup by system id."""

    def __init__(self, systems: Mapping[str, CodeSystem]):
        self.systems = MappingProxyType(dict(systems))

    @classmethod
    def load(cls, codes_dir: str | Path | None = None, *, builtins: bool = True) -> Terminology:
        systems = dict(BUILTIN_SYSTEMS) if builtins else {}
        systems.update(load_code_lists(codes_dir if codes_dir is not None else shipped_codes_dir()))
        return cls(systems)

    def __contains__(self, system_id: str) -> bool:
        return system_id in self.systems

    def system(self, system_id: str) -> CodeSystem:
        try:
            return self.systems[system_id]
        except KeyError:
            raise UnknownSystemError(f"unknown code system {system_id!r}") from None

    def validate_code(self, system_id: str, code: str) -> CodeLookupResult:
        return self.system(system_id).lookup(code)

    def display(self, system_id: str, code: str) -> str | None:
        return self.validate_code(system_id, code).display


@lru_cache(maxsize=1)
def default_terminology() -> Terminology:
    return Terminology.load()


def validate_code(system_id: str, code: str) -> CodeLookupResult:
    """Validate ``code`` against a shipped system.

    Pattern-based systems check syntax; enumerated ones check membership and
    return the Portuguese label.
    """
    return default_terminology().validate_code(system_id, code)
