"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class DatasusOpenEHRError(Exception):
    """Base class for all errors raised by this package."""


class PositionedError(DatasusOpenEHRError):
    """An error anchored to a source position (1-based line and column)."""

    def __init__(self, message: str, *, source: str | None = None,
                 line: int | None = None, column: int | None = None):
        self.message = message
        self.source = source
        self.line = line
        self.column = column
        super().__init__(self._render())

    def _render(self) -> str:
        where = []
        if self.source:
            where.append(str(self.source))
        if self.line is not None:
            where.append(f"line {self.line}")
        if self.column is not None:
            where.append(f"column {self.column}")
        if not where:
            return self.message
        return f"{', '.join(where)}: {self.message}"


# reference model

class ModelError(DatasusOpenEHRError, ValueError):
    """A value or tree violates a reference-model invariant."""


class CompositionSyntaxError(PositionedError):
    """A composition document is not well-formed text."""


# archetypes

class IdSyntaxError(DatasusOpenEHRError, ValueError):
    """An archetype identifier does not follow the openEHR id grammar."""


class SchemaSyntaxError(PositionedError):
    pass


class SchemaSemanticError(PositionedError):
    """A schema document parses but declares an impossible constraint."""


class RegistryError(DatasusOpenEHRError):
    pass


class DuplicateIdError(RegistryError):
    pass


class DanglingParentError(RegistryError):
    pass


class UnknownSlotError(RegistryError):
    pass


class UnresolvedCodeSystemError(RegistryError):
    pass


class AttributeManifestError(RegistryError):
    """The attribute dictionary file disagrees with the schema files."""


class TallyError(RegistryError):
    pass


class UnknownTemplateError(DatasusOpenEHRError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown template"


# terminology

class UnknownSystemError(DatasusOpenEHRError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown code system"


class DuplicateCodeError(PositionedError):
    pass


class FormatError(PositionedError):
    pass


# ingestion

class ManifestSyntaxError(PositionedError):
    pass


class UnknownTargetError(PositionedError):
    pass


class TransformKindError(PositionedError):
    pass


class HeaderError(PositionedError):
    """A delimited header line does not provide the columns a manifest binds."""


class EncodingError(PositionedError):
    """The input stream cannot be decoded with the declared encoding."""


class RecordError(DatasusOpenEHRError):
    """A single source line could not be framed into fields.

    Record errors are yielded in-band by the record reader rather than
    raised, so one bad line never stops the stream.
    """

    reason = "record error"

    def __init__(self, line_number: int, detail: str):
        self.line_number = line_number
        self.detail = detail
        super().__init__(f"line {line_number}: {self.reason}: {detail}")


class FieldCountError(RecordError):
    reason = "field count mismatch"


class SpanError(RecordError):
    reason = "line shorter than column span"
