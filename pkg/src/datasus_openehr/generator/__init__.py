"""Deterministic synthetic dataset generation."""

from .bench import BenchmarkReport, benchmark, peak_memory
from .core import GenSpec, generate, generate_source_records, source_lines, source_row
from .prng import SplitMix64

__all__ = ["BenchmarkReport", "GenSpec", "SplitMix64", "benchmark", "generate", "generate_source_records", "peak_memory",
           "source_lines", "source_row"]
