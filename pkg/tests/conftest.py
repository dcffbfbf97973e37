from __future__ import annotations

import functools
from importlib import resources

import pytest

from dehnfill import load_triangulation
from dehnfill.equations import build_system
from dehnfill.solver import solve

FIXTURES = ("figure_eight", "figure_eight_sister", "whitehead", "whitehead_flat")


def fixture_path(name: str):
    return resources.files("dehnfill") / "fixtures" / f"{name}.json"


@functools.lru_cache(maxsize=None)
def triangulation(name: str):
    return load_triangulation(fixture_path(name))


@functools.lru_cache(maxsize=None)
def complete(name: str):
    """(based system, complete result) for a fixture."""
    based, res, _ = solve(build_system(triangulation(name)))
    assert res.converged, res.message
    return based, res


@pytest.fixture(params=FIXTURES)
def fixture_name(request):
    return request.param


@pytest.fixture
def fig8():
    return triangulation("figure_eight")


def pytest_terminal_summary(terminalreporter):
    import sys

    acc = sys.modules.get("test_acceptance")
    if acc is None or not acc.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(acc.RESULTS):
        terminalreporter.write_line(acc.summary_line(n))
