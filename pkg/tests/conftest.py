import numpy as np
import pytest

from plemelj import builtin_density, make_builtin_curve
from plemelj.density import DINI_LOG_CUT


@pytest.fixture(scope="session")
def segment():
    return make_builtin_curve("segment", [-1, 1])


@pytest.fixture(scope="session")
def circle():
    return make_builtin_curve("circle", [1.0])


@pytest.fixture(scope="session")
def one():
    return builtin_density("constant", [1.0])


@pytest.fixture(scope="session")
def centered_dini():
    """The log-type density with its support's midpoint at 0 (smooth there, not Hölder overall)."""
    return builtin_density("dini-log", [-DINI_LOG_CUT / 2])


def real_fn(d):
    """A density as a function of a real variable (for interval principal values)."""
    return lambda t: d(np.asarray(t, dtype=float) + 0j)
