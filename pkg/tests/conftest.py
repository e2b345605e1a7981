import numpy as np
import pytest

from scmv import Hyperparams, SubspacePair, TwoViewDataset
from scmv.stiefel import init_orthonormal


def random_instance(seed, n=6, l=4, d1=5, d2=4, m=2, gamma=1 / 6):
    """Gaussian two-view data with both classes among the labels."""
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal((n, d1))
    x2 = rng.standard_normal((n, d2))
    y = rng.permutation(np.r_[np.ones(l // 2), -np.ones(l - l // 2)])
    ds = TwoViewDataset(x1, x2, y)
    s = SubspacePair(init_orthonormal(d1, m, seed + 1000), init_orthonormal(d2, m, seed + 2000))
    return ds, Hyperparams(m=m, gamma=gamma), s


@pytest.fixture
def instance():
    return random_instance(0)


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
