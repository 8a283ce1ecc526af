import math

import numpy as np
import pytest

from kinpath import morse, normal_modes as nm, oracles
from kinpath.params import SystemParams

# filled by test_acceptance, printed once at the end of the run
ACCEPTANCE = {}


def morse_grid(sol, h=0.01, left=3.0):
    """Dirichlet box from ``left/beta`` inside the wall to the normalization edge."""
    beta = sol.params.beta
    lo = sol.x_min - left / beta
    hi = sol.domain()[1]
    return oracles.Grid1D(lo, hi, int(math.ceil((hi - lo) * beta / h)) + 1)


@pytest.fixture(scope="session")
def benchmark():
    return morse.build(SystemParams(m1=1, m2=1, kappa=0, lam=25, alpha=1, beta=1))


@pytest.fixture(scope="session")
def pendulum():
    return nm.generalized_modes(nm.pendulum_matrices(3.0, 1.0, 1.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split("-")[1])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
