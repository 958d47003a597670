import numpy as np
import pytest

from diteration.graph import Graph

ACCEPTANCE: dict = {}


def random_graph(n, mean_degree, dangling_fraction=0.0, seed=0, self_loops=True):
    """Uniform random digraph; a chosen fraction of nodes gets no out-links."""
    rng = np.random.default_rng(seed)
    dangling = rng.random(n) < dangling_fraction
    sources = np.flatnonzero(~dangling)
    if sources.size == 0:
        return Graph.from_edges(n, [], [])
    m = int(round(mean_degree * n))
    src = rng.choice(sources, size=m)
    dst = rng.integers(0, n, size=m)
    if not self_loops:
        keep = src != dst
        src, dst = src[keep], dst[keep]
    return Graph.from_edges(n, src, dst)


@pytest.fixture
def two_cycle():
    return Graph.from_edges(2, [0, 1], [1, 0])


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        detail = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            detail = rep.longrepr[2]
        ACCEPTANCE[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        status, title, detail = ACCEPTANCE[number]
        line = f"criterion {number:2d}: {status}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
