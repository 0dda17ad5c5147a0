import itertools
from pathlib import Path

import pytest

from gatevqe.schedule import ConflictGraph

DATA = Path(__file__).resolve().parents[1] / "data"


def all_graphs(max_n: int = 4):
    """Every labeled simple graph on 1..max_n nodes."""
    for n in range(1, max_n + 1):
        pairs = list(itertools.combinations(range(n), 2))
        for mask in range(1 << len(pairs)):
            yield ConflictGraph(n, frozenset(p for b, p in enumerate(pairs) if mask >> b & 1))


def proper_colorings(graph: ConflictGraph, k: int) -> set[tuple[int, ...]]:
    return {
        c
        for c in itertools.product(range(k), repeat=graph.n)
        if all(c[i] != c[j] for i, j in graph.edges)
    }


@pytest.fixture
def path3():
    return ConflictGraph(3, frozenset({(0, 1), (1, 2)}))


@pytest.fixture
def triangle():
    return ConflictGraph(3, frozenset({(0, 1), (1, 2), (0, 2)}))


@pytest.fixture
def flights24_path():
    return DATA / "flights24.csv"


# one summary line per acceptance criterion
_CRITERIA: dict[int, tuple[str, bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    prev = _CRITERIA.get(number, (title, True))[1]
    if rep.when == "call" or rep.failed:
        _CRITERIA[number] = (title, prev and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
