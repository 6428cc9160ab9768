import numpy as np
import pytest

from onesided.grid import CellSet, WeightField, WeightPair

# acceptance lines: nodeid -> [title, detail, outcome]
_ACCEPTANCE: dict[str, list] = {}


def dyadic_pair(rng, dom, p, top=8, zeros=False):
    """Densities k/4 with k in 1..top (sums exact in floating point); optional zero cells."""
    lo = 0 if zeros else 1
    w = rng.integers(lo, top + 1, dom.shape) / 4.0
    v = rng.integers(lo, top + 1, dom.shape) / 4.0
    return WeightPair(WeightField(dom, w), WeightField(dom, v), p)


def random_set(rng, dom, lo=0.05, hi=0.7):
    return CellSet(dom, rng.random(dom.shape) < rng.uniform(lo, hi))


@pytest.fixture
def rng(request):
    # one stream per test, stable across runs and test order
    seed = sum(map(ord, request.node.nodeid)) % (2 ** 32)
    return np.random.default_rng(seed)


@pytest.fixture
def criterion(request):
    """Record a one-line acceptance summary: ``criterion("C1 title", "detail")``."""
    def record(title, detail=""):
        _ACCEPTANCE[request.node.nodeid] = [title, detail, None]
    return record


def pytest_runtest_logreport(report):
    if report.when == "call" and report.nodeid in _ACCEPTANCE:
        _ACCEPTANCE[report.nodeid][2] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for title, detail, outcome in sorted(_ACCEPTANCE.values(), key=lambda x: int(x[0].split()[0][1:])):
        tag = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{tag}] {title}: {detail}")
