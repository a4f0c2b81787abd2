from pathlib import Path

import pytest

from stlcov.automaton import LocationKind
from stlcov.compiler import compile_spec
from stlcov.stl import load_spec

ROOT = Path(__file__).resolve().parent.parent
RUNNING_SPEC = ROOT / "specs" / "guarded_response.stl"

TAU1 = [{"a": 3.0, "b": 2.0}, {"a": 4.0, "b": 2.0}, {"a": 3.0, "b": 2.0}]
TAU2 = [{"a": 4.0, "b": 2.0}, {"a": 4.0, "b": -8.0}, {"a": 2.0, "b": 2.0}]


@pytest.fixture(scope="session")
def spec():
    return load_spec(RUNNING_SPEC)


@pytest.fixture(scope="session")
def automaton(spec):
    return compile_spec(spec)


@pytest.fixture(scope="session")
def sink(automaton):
    [q] = [l.id for l in automaton.locations if l.verdict is LocationKind.SINK]
    return q


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for text in ACCEPTANCE_LINES:
            terminalreporter.write_line(text)
