import sys

import numpy as np
import pytest

from stoklab import _backend
from stoklab.simcore import derive_stream


@pytest.fixture
def stream():
    """Fresh stream factory: stream(k) is independent of stream(j) for j != k."""
    return lambda k=0, seed=2024: derive_stream(seed, k << 32)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    with _backend.use(request.param):
        yield request.param


def on_both_backends(fn):
    """Run fn() under each backend and return the two results."""
    out = []
    for name in ("numba", "numpy"):
        with _backend.use(name):
            out.append(fn())
    return out


def assert_same(a, b):
    """Bit-identical arrays or tuples of arrays."""
    if isinstance(a, tuple):
        assert len(a) == len(b)
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x, y)
    else:
        np.testing.assert_array_equal(a, b)


def pytest_terminal_summary(terminalreporter):
    """One verdict line per acceptance criterion that ran."""
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for i in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[i])
