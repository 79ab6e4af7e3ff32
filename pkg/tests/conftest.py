from __future__ import annotations

import pytest

from datasus_openehr.archetypes import load_registry
from datasus_openehr.terminology import Terminology

TEMPLATES = ("demographic_data", "hospitalisation", "outpatient_high_complex_procedures")


@pytest.fixture(scope="session")
def registry():
    return load_registry(strict=True)


@pytest.fixture(scope="session")
def terminology(registry):
    return registry.terminology


@pytest.fixture(scope="session")
def builtin_terminology():
    return Terminology.load()


# Acceptance tests tag themselves with a "criterion" user property; the
# summary below prints one PASS/FAIL line per criterion.

_CRITERIA: dict[str, bool] = {}


def pytest_runtest_logreport(report):
    label = dict(report.user_properties).get("criterion")
    if label is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA[label] = _CRITERIA.get(label, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s.split(".", 1)[0])):
        terminalreporter.write_line(f"{'PASS' if _CRITERIA[label] else 'FAIL'} {label}")
