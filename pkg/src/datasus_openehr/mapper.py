"""Turning source records into validated compositions."""

from __future__ import annotations

from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import islice
from typing import Iterable, Iterator

from .archetypes.assembly import assemble_composition
from .archetypes.registry import Registry
from .archetypes.validation import validate_composition
from .errors import ModelError, RecordError
from .ingestion import MappingManifest, SourceRecord, TransformFailure
from .rm.tree import Composition
from .terminology import Terminology


@dataclass(frozen=True)
class BindingFailure:
    path: str
    raw: str | None
    reason: str


@dataclass(frozen=True)
class RecordFailure:
    """Every reason one record did not become a composition."""

    line_number: int
    failures: tuple[BindingFailure, ...]

    def __str__(self) -> str:
        parts = "; ".join(f"{f.path}: {f.reason}" + (f" (raw {f.raw!r})" if f.raw is not None else "")
                          for f in self.failures)
        return f"line {self.line_number}: {parts}"


def map_record(rec: SourceRecord, manifest: MappingManifest, registry: Registry,
               terminology: Terminology | None = None) -> Composition | RecordFailure:
    """Map one record, all or nothing.

    Raw fields are trimmed. An empty field is skipped for an optional
    element and is a failure for a required one. The assembled composition
    is validated against the template before it is returned.
    """
    terminology = terminology if terminology is not None else registry.terminology
    template = registry.template(manifest.template_id)
    failures: list[BindingFailure] = []
    values = {}
    for b in manifest.bindings:
        c = registry.archetype(b.archetype_id).element(b.element)
        raw = rec.fields.get(b.column)
        if raw is None:
            failures.append(BindingFailure(b.target, None, f"no column {b.column!r}"))
            continue
        raw = raw.strip()
        if not raw:
            if c.required:
                failures.append(BindingFailure(b.target, "", "required value missing"))
            continue
        try:
            values[(b.archetype_id, b.element)] = b.transform.apply(raw, c, terminology)
        except (TransformFailure, ModelError) as exc:
            failures.append(BindingFailure(b.target, raw, str(exc)))
    if failures:
        return RecordFailure(rec.line_number, tuple(failures))
    if not values:
        return RecordFailure(rec.line_number, (BindingFailure(template.root.render(), None, "no elements mapped"),))
    composition = assemble_composition(template, registry, values)
    report = validate_composition(composition, template, registry, terminology)
    if not report.ok:
        return RecordFailure(rec.line_number, tuple(
            BindingFailure(v.path, None, v.message) for v in report.violations))
    return composition


@dataclass
class ErrorSummary:
    """Counts filled in while a mapped stream is consumed."""

    records: int = 0
    compositions: int = 0
    failed_records: int = 0
    reasons: Counter = field(default_factory=Counter)
    failures: list[RecordFailure] = field(default_factory=list)
    keep: int = 1000

    def add_failure(self, failure: RecordFailure) -> None:
        self.failed_records += 1
        for f in failure.failures:
            self.reasons[f.reason] += 1
        if len(self.failures) < self.keep:
            self.failures.append(failure)

    def ok(self, tolerate: int = 0) -> bool:
        return self.failed_records <= tolerate

    def lines(self) -> list[str]:
        """One ``reason: count`` line per reason, most frequent first."""
        return [f"{reason}: {n}" for reason, n in sorted(self.reasons.items(), key=lambda kv: (-kv[1], kv[0]))]

    def to_dict(self) -> dict:
        return {
            "records": self.records,
            "compositions": self.compositions,
            "failed_records": self.failed_records,
            "reasons": dict(sorted(self.reasons.items())),
        }


def _as_failure(err: RecordError) -> RecordFailure:
    return RecordFailure(err.line_number, (BindingFailure("", None, err.reason),))


def map_stream(records: Iterable[SourceRecord | RecordError], manifest: MappingManifest, registry: Registry,
               *, threads: int = 1, terminology: Terminology | None = None
               ) -> tuple[Iterator[Composition], ErrorSummary]:
    """Map a record stream, preserving order.

    Returns the composition iterator and a summary that is complete once
    the iterator is exhausted. Framing errors from :func:`read_records`
    are counted like mapping failures. With ``threads > 1`` records are
    mapped in batches on a thread pool; output order is unchanged.
    """
    summary = ErrorSummary()
    terminology = terminology if terminology is not None else registry.terminology

    def one(item):
        if isinstance(item, RecordError):
            return _as_failure(item)
        return map_record(item, manifest, registry, terminology)

    def results() -> Iterator:
        if threads <= 1:
            for item in records:
                yield one(item)
            return
        it = iter(records)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            while True:
                batch = list(islice(it, threads * 64))
                if not batch:
                    return
                yield from pool.map(one, batch)

    def run() -> Iterator[Composition]:
        for r in results():
            summary.records += 1
            if isinstance(r, RecordFailure):
                summary.add_failure(r)
            else:
                summary.compositions += 1
                yield r

    return run(), summary
