import numpy as np
import pytest

from loopreg import kernels


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    """Run a test once per available kernel backend."""
    previous = kernels.backend()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def direct_dft(samples):
    """O(n^2) DFT oracle, coefficients ordered m = -n/2 .. n/2-1."""
    n = len(samples)
    m = np.arange(-(n // 2), n // 2)
    j = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, j) / n) @ samples / n


def direct_trig(coeffs, t):
    """Direct evaluation of the Nyquist-split interpolant at points t."""
    n = len(coeffs)
    m = np.arange(-(n // 2), n // 2)
    t = np.atleast_1d(t)
    body = np.exp(2j * np.pi * np.outer(t, m[1:])) @ coeffs[1:]
    return body + coeffs[0] * np.cos(np.pi * n * t)


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.SUMMARY:
        terminalreporter.section("acceptance")
        for _, line in sorted(test_acceptance.SUMMARY.items()):
            terminalreporter.write_line(line)
