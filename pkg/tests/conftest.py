from __future__ import annotations

import re

import pytest

from hypercontraction.corpus import generate_corpus, nilpotent_members

_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def corpus():
    return generate_corpus(0)


@pytest.fixture(scope="session")
def nilpotent(corpus):
    return nilpotent_members(corpus)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    key = int(m.group(1))
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        doc = _CRITERIA.get(key, ("", None))[0]
        _CRITERIA[key] = (doc, report.outcome)


def pytest_collection_modifyitems(items):
    for item in items:
        m = re.search(r"test_criterion_(\d+)", item.name)
        if m and "test_acceptance.py" in item.nodeid:
            doc = (item.function.__doc__ or "").strip().splitlines()[0]
            _CRITERIA[int(m.group(1))] = (doc, None)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        doc, outcome = _CRITERIA[key]
        if outcome is None:
            continue
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {key:2d}: {status}  {doc}")
