import numpy as np
import pytest

from sosfield import fitter as F
from sosfield.acf import exponential_acf, gauss_exp_acf, sample_acf


@pytest.fixture(scope="session")
def exp_acf():
    return sample_acf(exponential_acf)


@pytest.fixture(scope="session")
def gauss_acf():
    return sample_acf(gauss_exp_acf)


@pytest.fixture(scope="session")
def small_set_3d(gauss_acf):
    """A quickly fitted 3-D set, good enough for structural checks."""
    return F.fit(gauss_acf, F.FitConfig(n_sinusoids=40, max_sweeps=4, rng_seed=3))


@pytest.fixture(scope="session")
def small_set_2d(exp_acf):
    return F.fit(exp_acf, F.FitConfig(n_sinusoids=40, dims=2, max_sweeps=4, rng_seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ------------------------------------------------------- acceptance reporting

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
