import numpy as np
import pytest

from reverse_sobolev.specialfn import SpectralParams

# one pair per (dimension, window); the acceptance matrix
MATRIX = [(1, 0.75), (1, 2.0), (2, 1.5), (2, 2.5)]


@pytest.fixture(params=MATRIX, ids=lambda t: f"n{t[0]}-s{t[1]}")
def params(request):
    return SpectralParams(*request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(number, passed, detail):
        ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))
        print(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
        return bool(passed)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        for passed, detail in ACCEPTANCE[k]:
            terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
