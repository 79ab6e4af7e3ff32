"""Command-line entry point: registry-check, transform, generate, validate.

Exit codes: 0 success, 1 validation or mapping failures, 2 usage or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from contextlib import contextmanager
from pathlib import Path

from .archetypes.registry import (
    Registry,
    load_registry,
    read_schema_dir,
    shipped_registry_dir,
    tally_definitions,
)
from .archetypes.validation import validate_composition
from .errors import (
    CompositionSyntaxError,
    DatasusOpenEHRError,
    EncodingError,
    HeaderError,
    ModelError,
    UnknownTemplateError,
)
from .generator.bench import benchmark
from .generator.core import GenSpec, generate, source_lines
from .ingestion import MappingManifest, load_manifest, read_records, shipped_manifest
from .mapper import map_stream
from .rm.datavalues import RM_NAME_BY_KIND, VALUE_KINDS
from .rm.serialization import parse_composition, serialize_composition

REGISTRY_ENV = "DATASUS_OPENEHR_REGISTRY"
CODES_ENV = "DATASUS_OPENEHR_CODES"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _registry_dir(args) -> Path:
    return Path(args.registry or os.environ.get(REGISTRY_ENV) or shipped_registry_dir())


def _codes_dir(args) -> Path | None:
    d = args.codes or os.environ.get(CODES_ENV)
    return Path(d) if d else None


def _load(args) -> Registry:
    directory = _registry_dir(args)
    if not directory.is_dir():
        raise UsageError(f"registry directory not found: {directory}")
    return load_registry(directory, codes_dir=_codes_dir(args))


def _manifest(spec: str, registry: Registry) -> MappingManifest:
    path = Path(spec)
    if path.exists():
        return load_manifest(path, registry)
    try:
        return shipped_manifest(spec, registry)
    except (FileNotFoundError, UnknownTemplateError):
        raise UsageError(f"manifest not found: {spec} (give a path or a shipped template id)") from None


@contextmanager
def _output(path: str | None, encoding: str = "utf-8"):
    if path is None or path == "-":
        yield sys.stdout
        return
    with open(path, "w", encoding=encoding, newline="\n") as fh:
        yield fh


# -- registry-check --------------------------------------------------------

def cmd_registry_check(args) -> int:
    directory = _registry_dir(args)
    if not directory.is_dir():
        raise UsageError(f"registry directory not found: {directory}")
    try:
        defs = read_schema_dir(directory)
    except DatasusOpenEHRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    t = tally_definitions(defs)
    problems = t.mismatches()
    link_error = None
    try:
        load_registry(directory, codes_dir=_codes_dir(args))
    except DatasusOpenEHRError as exc:
        link_error = str(exc)

    if args.format == "json":
        print(json.dumps({
            "archetypes": t.archetypes,
            "origins": t.origins,
            "attributes": t.attributes,
            "types": {RM_NAME_BY_KIND[k]: t.types[k] for k in VALUE_KINDS},
            "templates": sorted(t.templates),
            "mismatches": problems,
            "error": link_error,
            "ok": not problems and link_error is None,
        }, sort_keys=True))
    else:
        origins = " ".join(f"{k}={v}" for k, v in t.origins.items())
        print(f"archetypes={t.archetypes} {origins} attributes={t.attributes}")
        print(" ".join(f"{RM_NAME_BY_KIND[k]}={t.types[k]}" for k in VALUE_KINDS))
        print(f"templates={len(t.templates)} {','.join(sorted(t.templates))}")
        for p in problems:
            print(f"FAIL {p}", file=sys.stderr)
        if link_error:
            print(f"error: {link_error}", file=sys.stderr)
    return EXIT_FAIL if problems or link_error else EXIT_OK


# -- transform -------------------------------------------------------------

def cmd_transform(args) -> int:
    registry = _load(args)
    manifest = _manifest(args.manifest, registry)
    if not Path(args.input).is_file():
        raise UsageError(f"input file not found: {args.input}")
    try:
        with open(args.input, "rb") as src, _output(args.out) as out:
            comps, summary = map_stream(read_records(src, manifest), manifest, registry, threads=args.threads)
            for c in comps:
                out.write(serialize_composition(c))
                out.write("\n")
    except (EncodingError, HeaderError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.errors:
        with open(args.errors, "w", encoding="utf-8") as fh:
            for f in summary.failures:
                fh.write(f"{f}\n")
    if args.format == "json":
        print(json.dumps(summary.to_dict(), sort_keys=True), file=sys.stderr)
    else:
        print(f"records={summary.records} compositions={summary.compositions} "
              f"failed={summary.failed_records}", file=sys.stderr)
        for line in summary.lines():
            print(line, file=sys.stderr)
    return EXIT_OK if summary.ok(args.tolerate) else EXIT_FAIL


# -- generate --------------------------------------------------------------

def cmd_generate(args) -> int:
    registry = _load(args)
    if args.template not in registry.templates:
        available = ", ".join(sorted(registry.templates))
        raise UsageError(f"unknown template {args.template!r}; available templates: {available}")
    try:
        spec = GenSpec(args.template, args.count, args.seed, args.null_rate)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.benchmark:
        report = benchmark(spec, registry, threads=args.threads)
        print(report.to_json())
        return EXIT_OK
    manifest = None
    if args.emit_source:
        manifest = _manifest(args.manifest or args.template, registry)
        if manifest.template_id != spec.template_id:
            raise UsageError(f"manifest is for template {manifest.template_id}, not {spec.template_id}")
    write_docs = args.out is not None or not args.emit_source

    t0 = time.perf_counter()
    doc_bytes = src_bytes = 0
    comps = generate(spec, registry, threads=args.threads)
    with _output(args.out if write_docs else os.devnull) as out:
        if manifest is None:
            for c in comps:
                line = serialize_composition(c)
                doc_bytes += len(line.encode("utf-8")) + 1
                out.write(line)
                out.write("\n")
        else:
            with open(args.emit_source, "w", encoding=manifest.encoding, newline="\n") as src:
                def tee():
                    nonlocal doc_bytes
                    for c in comps:
                        if write_docs:
                            line = serialize_composition(c)
                            doc_bytes += len(line.encode("utf-8")) + 1
                            out.write(line)
                            out.write("\n")
                        yield c
                for row in source_lines(tee(), manifest):
                    src.write(row)
                    src.write("\n")
                    src_bytes += len(row.encode(manifest.encoding)) + 1
    seconds = time.perf_counter() - t0
    report = {
        "template": spec.template_id,
        "count": spec.count,
        "seed": spec.seed,
        "seconds": round(seconds, 6),
        "compositions_per_second": round(spec.count / seconds, 3) if seconds > 0 else None,
        "document_bytes": doc_bytes,
        "source_bytes": src_bytes,
    }
    print(json.dumps(report, sort_keys=True), file=sys.stderr)
    return EXIT_OK


# -- validate --------------------------------------------------------------

def cmd_validate(args) -> int:
    registry = _load(args)
    if args.template not in registry.templates:
        available = ", ".join(sorted(registry.templates))
        raise UsageError(f"unknown template {args.template!r}; available templates: {available}")
    if not Path(args.documents).is_file():
        raise UsageError(f"documents file not found: {args.documents}")
    documents = invalid = 0
    problems = []
    with open(args.documents, "rb") as fh:
        for raw in fh:
            if not raw.strip():
                continue
            documents += 1
            try:
                c = parse_composition(raw)
            except (CompositionSyntaxError, ModelError) as exc:
                invalid += 1
                problems.append({"document": documents, "path": "", "constraint": "parse", "message": str(exc)})
                continue
            report = validate_composition(c, args.template, registry)
            if not report.ok:
                invalid += 1
                problems.extend({"document": documents, "path": v.path, "constraint": v.constraint,
                                 "message": v.message} for v in report.violations)
    if args.format == "json":
        print(json.dumps({"documents": documents, "invalid": invalid, "violations": problems}, sort_keys=True))
    else:
        for p in problems:
            where = f" {p['path']}:" if p["path"] else ""
            print(f"document {p['document']}:{where} {p['message']}")
        print(f"{documents} documents, {invalid} invalid")
    return EXIT_FAIL if invalid else EXIT_OK


# -- wiring ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="datasus-openehr", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--registry", help=f"schema directory (default: ${REGISTRY_ENV} or the shipped set)")
    common.add_argument("--codes", help=f"code-list directory (default: ${CODES_ENV} or the shipped lists)")
    common.add_argument("--format", choices=("text", "json"), default="text", help="report format")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("registry-check", parents=[common], help="check the registry against the published tallies")
    p.set_defaults(func=cmd_registry_check)

    p = sub.add_parser("transform", parents=[common], help="map a flat source file to compositions")
    p.add_argument("input")
    p.add_argument("--manifest", required=True, help="manifest path or shipped template id")
    p.add_argument("--out", help="output file for documents (default: stdout)")
    p.add_argument("--errors", help="write one line per failed record here")
    p.add_argument("--tolerate", type=int, default=0, metavar="N", help="exit 0 with up to N failed records")
    p.add_argument("--threads", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("generate", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--template", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--null-rate", type=float, default=0.1)
    p.add_argument("--out", help="output file for documents (default: stdout)")
    p.add_argument("--emit-source", metavar="PATH", help="also write the flat source file")
    p.add_argument("--manifest", help="manifest for --emit-source (default: the shipped one)")
    p.add_argument("--benchmark", action="store_true",
                   help="write nothing; time generation with and without serialization and print the report")
    p.add_argument("--threads", type=int, default=1, metavar="N")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("validate", parents=[common], help="validate newline-delimited documents")
    p.add_argument("documents")
    p.add_argument("--template", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasusOpenEHRError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
