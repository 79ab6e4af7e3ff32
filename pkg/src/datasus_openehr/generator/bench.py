"""Throughput measurement for the generator."""

from __future__ import annotations

import json
import time
import tracemalloc
from dataclasses import asdict, dataclass

from ..archetypes.registry import Registry
from ..rm.serialization import serialize_composition
from .core import GenSpec, generate


@dataclass(frozen=True)
class BenchmarkReport:
    template: str
    count: int
    seed: int
    generate_seconds: float
    generate_per_second: float
    generate_serialize_seconds: float
    generate_serialize_per_second: float
    bytes: int
    peak_memory_bytes: int | None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def deterministic_fields(self) -> dict:
        """The fields that do not depend on timing."""
        return {k: v for k, v in self.to_dict().items()
                if k in ("template", "count", "seed", "bytes")}


def _rate(count: int, seconds: float) -> float:
    return count / seconds if seconds > 0 else float("inf")


def benchmark(spec: GenSpec, registry: Registry, *, threads: int = 1,
              measure_memory: bool = True) -> BenchmarkReport:
    """Time generation alone, then generation plus serialization.

    ``bytes`` counts UTF-8 output including one newline per document. Peak
    memory comes from a third, traced pass and is ``None`` when skipped.
    """
    t0 = time.perf_counter()
    for _ in generate(spec, registry, threads=threads):
        pass
    gen_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    total = 0
    for c in generate(spec, registry, threads=threads):
        total += len(serialize_composition(c).encode("utf-8")) + 1
    ser_s = time.perf_counter() - t0

    peak = None
    if measure_memory:
        peak = peak_memory(spec, registry, threads=threads)

    return BenchmarkReport(spec.template_id, spec.count, spec.seed, gen_s, _rate(spec.count, gen_s),
                           ser_s, _rate(spec.count, ser_s), total, peak)


def peak_memory(spec: GenSpec, registry: Registry, *, threads: int = 1) -> int:
    """Peak traced allocation while generating and serializing ``spec``."""
    started = not tracemalloc.is_tracing()
    if started:
        tracemalloc.start()
    tracemalloc.reset_peak()
    base = tracemalloc.get_traced_memory()[0]
    try:
        for c in generate(spec, registry, threads=threads):
            serialize_composition(c)
        return tracemalloc.get_traced_memory()[1] - base
    finally:
        if started:
            tracemalloc.stop()
