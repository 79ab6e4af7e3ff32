"""Reading DATASUS-style flat claim files under a mapping manifest.

A manifest names a template, the input framing (delimited or fixed-width),
its encoding, and one binding per source column::

    template: hospitalisation
    encoding: latin-1
    format: delimited
    separator: ;
    header: true
    bind: DT_SAIDA
      target: openEHR-EHR-ADMIN_ENTRY.patient_discharge.v1/date of discharge
      transform: date(yyyyMMdd)

See ``docs/cli.md`` for the full manifest grammar.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from decimal import Decimal
from pathlib import Path
from typing import IO, Iterable, Iterator, Union

from .archetype_id import parse_archetype_id
from .archetypes.registry import Registry
from .archetypes.schema import ElementConstraint
from .errors import (
    EncodingError,
    FieldCountError,
    HeaderError,
    IdSyntaxError,
    ManifestSyntaxError,
    RecordError,
    SpanError,
    TransformKindError,
    UnknownTargetError,
    UnknownTemplateError,
)
from .rm.datavalues import (
    Boolean,
    CodedText,
    Count,
    DataValue,
    Date,
    DateTime,
    Proportion,
    ProportionKind,
    Quantity,
    Text,
    format_decimal,
)
from .terminology import Terminology

ENCODINGS = {"utf-8": "utf-8", "utf8": "utf-8", "latin-1": "latin-1", "latin1": "latin-1",
             "iso-8859-1": "latin-1"}


class TransformFailure(ValueError):
    """A raw field value cannot be converted by its binding's transform."""


# -- date formats ----------------------------------------------------------

_DATE_TOKENS = {"yyyy": ("year", 4), "MM": ("month", 2), "dd": ("day", 2),
                "HH": ("hour", 2), "mm": ("minute", 2), "ss": ("second", 2)}
_TOKEN_RE = re.compile("|".join(sorted(_DATE_TOKENS, key=len, reverse=True)))


@dataclass(frozen=True)
class DateFormat:
    """An explicit date layout such as ``yyyyMMdd`` or ``dd/MM/yyyy HH:mm``."""

    text: str
    regex: re.Pattern = field(compare=False, repr=False)
    fields: tuple[str, ...] = field(compare=False, repr=False)

    @classmethod
    def parse(cls, text: str) -> DateFormat:
        pattern, fields, pos = [], [], 0
        for m in _TOKEN_RE.finditer(text):
            literal = text[pos:m.start()]
            if any(c.isalnum() for c in literal):
                raise ValueError(f"unknown token {literal!r} in date format {text!r}")
            pattern.append(re.escape(literal))
            name, width = _DATE_TOKENS[m.group()]
            if name in fields:
                raise ValueError(f"{m.group()} appears twice in date format {text!r}")
            fields.append(name)
            pattern.append(f"([0-9]{{{width}}})")
            pos = m.end()
        tail = text[pos:]
        if any(c.isalnum() for c in tail):
            raise ValueError(f"unknown token {tail!r} in date format {text!r}")
        pattern.append(re.escape(tail))
        if not {"year", "month", "day"} <= set(fields):
            raise ValueError(f"date format {text!r} needs yyyy, MM and dd")
        return cls(text, re.compile("".join(pattern)), tuple(fields))

    @property
    def has_time(self) -> bool:
        return "hour" in self.fields

    def parse_value(self, raw: str) -> date | datetime:
        m = self.regex.fullmatch(raw)
        if m is None:
            raise TransformFailure(f"does not match date format {self.text}")
        parts = dict(zip(self.fields, map(int, m.groups())))
        try:
            if self.has_time:
                return datetime(parts["year"], parts["month"], parts["day"], parts.get("hour", 0),
                                parts.get("minute", 0), parts.get("second", 0))
            return date(parts["year"], parts["month"], parts["day"])
        except ValueError as exc:
            raise TransformFailure(f"invalid date: {exc}") from None

    def render(self, d: date | datetime) -> str:
        values = {"year": f"{d.year:04d}", "month": f"{d.month:02d}", "day": f"{d.day:02d}"}
        if isinstance(d, datetime):
            values.update(hour=f"{d.hour:02d}", minute=f"{d.minute:02d}", second=f"{d.second:02d}")
        return _TOKEN_RE.sub(lambda m: values[_DATE_TOKENS[m.group()][0]], self.text)


# -- transforms ------------------------------------------------------------

_TRANSFORM_RE = re.compile(r"([a-z]+)(?:\((.*)\))?\Z")


@dataclass(frozen=True)
class Transform:
    name: str
    args: tuple[str, ...] = ()
    date_format: DateFormat | None = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"{self.name}({','.join(self.args)})" if self.args else self.name

    @classmethod
    def parse(cls, text: str) -> Transform:
        m = _TRANSFORM_RE.match(text.strip())
        if m is None:
            raise ValueError(f"malformed transform {text!r}")
        name, argtext = m.group(1), m.group(2)
        args = tuple(a.strip() for a in argtext.split(",")) if argtext is not None else ()
        if name == "identity":
            if args:
                raise ValueError("identity takes no arguments")
            return cls(name)
        if name == "date":
            if len(args) != 1:
                raise ValueError("date(format) takes one format string")
            return cls(name, args, DateFormat.parse(args[0]))
        if name == "code":
            if len(args) != 1 or not args[0]:
                raise ValueError("code(system) takes one system id")
            return cls(name, args)
        if name == "decimal":
            if len(args) != 1 or not args[0].isdigit():
                raise ValueError("decimal(scale) takes a non-negative integer scale")
            return cls(name, args)
        if name == "boolean":
            if len(args) != 2 or not all(args) or args[0] == args[1]:
                raise ValueError("boolean(true-token,false-token) takes two distinct tokens")
            return cls(name, args)
        raise ValueError(f"unknown transform {name!r}")

    @property
    def scale(self) -> int:
        return int(self.args[0])

    def output_kinds(self) -> tuple[str, ...]:
        if self.name == "identity":
            return ("Text", "Count")
        if self.name == "date":
            return ("DateTime",) if self.date_format.has_time else ("Date",)
        if self.name == "code":
            return ("CodedText",)
        if self.name == "decimal":
            return ("Quantity", "Proportion", "Count") if self.scale == 0 else ("Quantity", "Proportion")
        return ("Boolean",)

    def apply(self, raw: str, c: ElementConstraint, terminology: Terminology) -> DataValue:
        """Convert a trimmed, non-empty raw field into the target element's value."""
        kind = c.value_kind
        if self.name == "identity":
            if kind == "Count":
                return Count(_integer(raw))
            return Text(raw)
        if self.name == "date":
            d = self.date_format.parse_value(raw)
            return DateTime.of(d) if kind == "DateTime" else Date.of(d)
        if self.name == "code":
            result = terminology.validate_code(self.args[0], raw)
            if not result.valid:
                raise TransformFailure(result.reason)
            return CodedText(result.display, self.args[0], raw)
        if self.name == "decimal":
            n = _integer(raw)
            value = Decimal(n).scaleb(-self.scale)
            if kind == "Count":
                return Count(n)
            if kind == "Proportion":
                if c.proportion is ProportionKind.PERCENT:
                    return Proportion(value, Decimal(100), ProportionKind.PERCENT)
                return Proportion(value, Decimal(1), c.proportion)
            return Quantity(value, c.units, c.precision)
        true_token, false_token = self.args
        if raw == true_token:
            return Boolean(True)
        if raw == false_token:
            return Boolean(False)
        raise TransformFailure(f"expected {true_token!r} or {false_token!r}")

    def render(self, value: DataValue) -> str:
        """Inverse of :meth:`apply`: the raw field text that maps back to ``value``."""
        if self.name == "identity":
            return str(value.magnitude) if isinstance(value, Count) else value.value
        if self.name == "date":
            return self.date_format.render(value.to_datetime() if isinstance(value, DateTime) else value.to_date())
        if self.name == "code":
            return value.code
        if self.name == "decimal":
            if isinstance(value, Count):
                return str(value.magnitude)
            number = value.numerator if isinstance(value, Proportion) else value.magnitude
            scaled = number.scaleb(self.scale)
            if scaled != scaled.to_integral_value():
                raise ValueError(f"{number} has more decimals than scale {self.scale}")
            return format_decimal(scaled.to_integral_value())
        return self.args[0] if value.value else self.args[1]


def _integer(raw: str) -> int:
    if not re.fullmatch(r"-?[0-9]+", raw):
        raise TransformFailure(f"{raw!r} is not an integer")
    return int(raw)


# -- manifest --------------------------------------------------------------

@dataclass(frozen=True)
class Binding:
    column: str | int
    archetype_id: str
    element: str
    transform: Transform
    line: int | None = field(default=None, compare=False)

    @property
    def target(self) -> str:
        return f"{self.archetype_id}/{self.element}"


@dataclass(frozen=True)
class Span:
    name: str
    start: int
    end: int


@dataclass(frozen=True)
class Delimited:
    separator: str = ";"
    header: bool = True
    columns: tuple[str, ...] = ()
    width: int | None = None


@dataclass(frozen=True)
class FixedWidth:
    spans: tuple[Span, ...]

    @property
    def line_length(self) -> int:
        return max(s.end for s in self.spans)


@dataclass(frozen=True)
class MappingManifest:
    template_id: str
    source_format: Delimited | FixedWidth
    bindings: tuple[Binding, ...] = ()
    encoding: str = "utf-8"
    source: str | None = field(default=None, compare=False)

    def column_names(self) -> list:
        """Output column order for writing source files."""
        fmt = self.source_format
        if isinstance(fmt, FixedWidth):
            return [s.name for s in fmt.spans]
        if fmt.columns:
            return list(fmt.columns)
        if not fmt.header:
            n = fmt.width or (max((b.column for b in self.bindings), default=-1) + 1)
            return list(range(n))
        seen = []
        for b in self.bindings:
            if b.column not in seen:
                seen.append(b.column)
        return seen


_MANIFEST_LINE = re.compile(r"([a-z_]+)\s*:(.*)\Z")
_HEAD = {"template", "encoding", "format", "separator", "header", "columns", "width", "span", "bind"}
_BIND = {"target", "transform"}


def parse_manifest(text: str, registry: Registry, *, source: str | None = None) -> MappingManifest:
    """Parse a manifest and resolve every binding against ``registry``.

    Raises:
        ManifestSyntaxError: malformed or incomplete manifest text.
        UnknownTargetError: a target that is not an element of the template.
        TransformKindError: a transform whose output kind differs from the target's.
        UnknownTemplateError: the template is not in the registry.
    """
    head: dict[str, tuple[str, int]] = {}
    spans: list[Span] = []
    raw_bindings: list[dict] = []
    current: dict | None = None

    def err(cls, msg, line):
        return cls(msg, source=source, line=line)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        stripped = line.lstrip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _MANIFEST_LINE.match(stripped)
        if m is None:
            raise err(ManifestSyntaxError, f"expected 'key: value', got {stripped!r}", lineno)
        key, value = m.group(1), m.group(2).strip()
        if stripped != line:
            if current is None or key not in _BIND:
                raise err(ManifestSyntaxError, f"unexpected indented key {key!r}", lineno)
            if key in current:
                raise err(ManifestSyntaxError, f"duplicate key {key!r}", lineno)
            current[key] = (value, lineno)
            continue
        current = None
        if key not in _HEAD:
            raise err(ManifestSyntaxError, f"unknown key {key!r}", lineno)
        if key == "bind":
            if not value:
                raise err(ManifestSyntaxError, "bind needs a source column", lineno)
            current = {"column": (value, lineno)}
            raw_bindings.append(current)
        elif key == "span":
            parts = value.rsplit(None, 2)
            if len(parts) != 3 or not parts[1].isdigit() or not parts[2].isdigit():
                raise err(ManifestSyntaxError, "span needs 'NAME START END'", lineno)
            start, end = int(parts[1]), int(parts[2])
            if end <= start:
                raise err(ManifestSyntaxError, "span end must be greater than start", lineno)
            if any(s.name == parts[0] for s in spans):
                raise err(ManifestSyntaxError, f"span {parts[0]!r} declared twice", lineno)
            spans.append(Span(parts[0], start, end))
        else:
            if key in head:
                raise err(ManifestSyntaxError, f"duplicate key {key!r}", lineno)
            head[key] = (value, lineno)

    if "template" not in head:
        raise err(ManifestSyntaxError, "missing 'template'", 1)
    template_id, tline = head["template"]
    try:
        template = registry.template(template_id)
    except UnknownTemplateError as exc:
        raise err(UnknownTargetError, str(exc), tline) from None

    encoding_name, eline = head.get("encoding", ("utf-8", 0))
    encoding = ENCODINGS.get(encoding_name.lower())
    if encoding is None:
        raise err(ManifestSyntaxError, f"encoding must be utf-8 or latin-1, got {encoding_name!r}", eline)

    fmt_name, fline = head.get("format", ("delimited", 0))
    if fmt_name == "delimited":
        if spans:
            raise err(ManifestSyntaxError, "span lines need format: fixed-width", fline)
        sep = head.get("separator", (";", 0))[0]
        if sep == "\\t":
            sep = "\t"
        if len(sep) != 1:
            raise err(ManifestSyntaxError, "separator must be one character", head["separator"][1])
        header_text, hline = head.get("header", ("true", 0))
        if header_text not in ("true", "false"):
            raise err(ManifestSyntaxError, "header must be true or false", hline)
        columns = ()
        if "columns" in head:
            columns = tuple(c.strip() for c in head["columns"][0].split(","))
            if not all(columns) or len(set(columns)) != len(columns):
                raise err(ManifestSyntaxError, "columns must be distinct, comma-separated names",
                          head["columns"][1])
        width = None
        if "width" in head:
            if not head["width"][0].isdigit():
                raise err(ManifestSyntaxError, "width must be a positive integer", head["width"][1])
            width = int(head["width"][0])
        source_format = Delimited(sep, header_text == "true", columns, width)
    elif fmt_name == "fixed-width":
        for k in ("separator", "header", "columns", "width"):
            if k in head:
                raise err(ManifestSyntaxError, f"{k!r} does not apply to fixed-width input", head[k][1])
        if not spans:
            raise err(ManifestSyntaxError, "fixed-width format needs span lines", fline)
        source_format = FixedWidth(tuple(spans))
    else:
        raise err(ManifestSyntaxError, f"format must be delimited or fixed-width, got {fmt_name!r}", fline)

    slot_ids = {s.archetype_id.render() for s in template.slots}
    bindings: list[Binding] = []
    targets: set[str] = set()
    for rb in raw_bindings:
        col_text, bline = rb["column"]
        for k in ("target", "transform"):
            if k not in rb:
                raise err(ManifestSyntaxError, f"binding {col_text!r} has no {k}", bline)
        target, target_line = rb["target"]
        aid, sep_, element = target.partition("/")
        if not sep_ or not element:
            raise err(ManifestSyntaxError, "target must be '<archetype id>/<element name>'", target_line)
        try:
            parse_archetype_id(aid)
        except IdSyntaxError as exc:
            raise err(ManifestSyntaxError, str(exc), target_line) from None
        if aid not in slot_ids:
            raise err(UnknownTargetError, f"{aid} is not a slot of template {template.id}", target_line)
        constraint = registry.archetype(aid).element(element)
        if constraint is None:
            raise err(UnknownTargetError, f"{aid} has no element {element!r}", target_line)
        if target in targets:
            raise err(ManifestSyntaxError, f"target {target!r} is bound twice", target_line)
        targets.add(target)

        tr_text, trline = rb["transform"]
        try:
            transform = Transform.parse(tr_text)
        except ValueError as exc:
            raise err(ManifestSyntaxError, str(exc), trline) from None
        if constraint.value_kind not in transform.output_kinds():
            raise err(TransformKindError,
                      f"{transform} produces {'/'.join(transform.output_kinds())}, "
                      f"but {element!r} is {constraint.value_kind}", trline)
        if transform.name == "code" and transform.args[0] != constraint.code_system:
            raise err(TransformKindError,
                      f"{transform} does not match {element!r} code system {constraint.code_system}", trline)
        if transform.name == "code" and transform.args[0] not in registry.terminology:
            raise err(TransformKindError, f"code system {transform.args[0]} is not loaded", trline)

        column: str | int = col_text
        if isinstance(source_format, Delimited) and not source_format.header:
            if not col_text.isdigit():
                raise err(ManifestSyntaxError, "without a header, bind columns are 0-based indexes", bline)
            column = int(col_text)
            if source_format.width is not None and column >= source_format.width:
                raise err(ManifestSyntaxError, f"column {column} beyond width {source_format.width}", bline)
        elif isinstance(source_format, FixedWidth):
            if not any(s.name == col_text for s in source_format.spans):
                raise err(ManifestSyntaxError, f"no span named {col_text!r}", bline)
        elif source_format.columns and col_text not in source_format.columns:
            raise err(ManifestSyntaxError, f"column {col_text!r} is not in the declared columns", bline)
        bindings.append(Binding(column, aid, element, transform, bline))

    return MappingManifest(template.id, source_format, tuple(bindings), encoding, source)


def load_manifest(path: str | Path, registry: Registry) -> MappingManifest:
    path = Path(path)
    return parse_manifest(path.read_text(encoding="utf-8"), registry, source=str(path))


# -- records ---------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class SourceRecord:
    line_number: int
    fields: dict

    def __post_init__(self):
        if self.line_number < 1:
            raise ValueError("line_number must be >= 1")


Source = Union[str, Path, IO[bytes], IO[str], Iterable[str], Iterable[bytes]]


def _decoded_lines(source: Source, encoding: str) -> Iterator[tuple[int, str]]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from _decoded_lines(fh, encoding)
        return
    for lineno, line in enumerate(source, start=1):
        if isinstance(line, (bytes, bytearray)):
            try:
                line = line.decode(encoding)
            except UnicodeDecodeError as exc:
                raise EncodingError(f"cannot decode as {encoding}: {exc.reason}", line=lineno,
                                    column=exc.start + 1) from None
        yield lineno, line.rstrip("\r\n")


def _split_delimited(line: str, sep: str) -> list[str]:
    if '"' not in line:
        return line.split(sep)
    return next(csv.reader((line,), delimiter=sep))


def read_records(source: Source, manifest: MappingManifest) -> Iterator[SourceRecord | RecordError]:
    """Lazily frame input lines into records.

    ``source`` may be a path, a binary stream (decoded with the manifest's
    encoding), or any iterable of text lines. Blank lines are skipped.
    Lines that cannot be framed are yielded as :class:`RecordError`
    values and the stream continues.

    Raises:
        EncodingError: undecodable bytes (aborts the stream).
        HeaderError: a header that lacks a bound column.
    """
    fmt = manifest.source_format
    lines = ((n, t) for n, t in _decoded_lines(source, manifest.encoding) if t.strip())
    if isinstance(fmt, FixedWidth):
        need = fmt.line_length
        spans = [(s.name, s.start, s.end) for s in fmt.spans]
        for lineno, text in lines:
            if len(text) < need:
                yield SpanError(lineno, f"line has {len(text)} characters, spans need {need}")
                continue
            yield SourceRecord(lineno, {name: text[a:b] for name, a, b in spans})
        return

    sep = fmt.separator
    if fmt.header:
        first = next(lines, None)
        if first is None:
            return
        hline, htext = first
        names = [n.strip() for n in _split_delimited(htext, sep)]
        missing = [b.column for b in manifest.bindings if b.column not in names]
        if missing:
            raise HeaderError(f"header lacks bound column(s) {', '.join(map(str, missing))}", line=hline)
        width = len(names)
        for lineno, text in lines:
            values = _split_delimited(text, sep)
            if len(values) != width:
                yield FieldCountError(lineno, f"expected {width} fields, got {len(values)}")
                continue
            yield SourceRecord(lineno, dict(zip(names, values)))
        return

    exact = fmt.width
    minimum = max((b.column for b in manifest.bindings), default=-1) + 1
    for lineno, text in lines:
        values = _split_delimited(text, sep)
        if (exact is not None and len(values) != exact) or len(values) < minimum:
            yield FieldCountError(lineno, f"expected {exact or minimum} fields, got {len(values)}")
            continue
        yield SourceRecord(lineno, dict(enumerate(values)))


def write_delimited_row(values: list[str], sep: str) -> str:
    if not any(sep in v or '"' in v for v in values):
        return sep.join(values)
    buf = io.StringIO()
    csv.writer(buf, delimiter=sep, lineterminator="").writerow(values)
    return buf.getvalue()


def shipped_manifests_dir() -> Path:
    from importlib import resources
    return Path(str(resources.files("datasus_openehr") / "data" / "manifests"))


def shipped_manifest(template_id: str, registry: Registry) -> MappingManifest:
    """The manifest shipped for ``template_id`` (``manifests/<template_id>.map``)."""
    path = shipped_manifests_dir() / f"{template_id}.map"
    if not path.exists():
        registry.template(template_id)
        raise FileNotFoundError(f"no shipped manifest for template {template_id!r}")
    return load_manifest(path, registry)
