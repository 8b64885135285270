import numpy as np
import pytest

from wkelly import ReturnsMatrix, log_returns, synthetic_universe


@pytest.fixture
def dominance():
    return ReturnsMatrix.log([[0.02, 0.01], [0.00, -0.01]])


@pytest.fixture
def two_asset():
    return ReturnsMatrix.log([[0.05, -0.03], [-0.04, 0.04]])


@pytest.fixture(scope="session")
def ten_asset():
    return log_returns(synthetic_universe(10, 60, seed=11))


def small_instances(count, seed, max_n=3, max_N=5, scale=0.03):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        N = int(rng.integers(1, max_N + 1))
        out.append(ReturnsMatrix.log(rng.normal(0.001, scale, (N, n))))
    return out


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
