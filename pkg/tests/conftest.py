import numpy as np
import pytest
import scipy.sparse as sp

from boxmg.objective import Problem
from boxmg.tomography import make_phantom, synthesize


def random_problem(rng, shape=(4, 4), p=None, lam=0.5, rho=0.5, density=0.5):
    """Small random instance satisfying the positivity assumptions."""
    n = shape[0] * shape[1]
    p = p or 2 * n
    A = sp.random(p, n, density=density, random_state=rng, format="lil")
    for i in range(p):
        A[i, rng.integers(n)] = rng.uniform(0.1, 1.0)
    A = A.tocsr()
    b = A @ rng.uniform(0.1, 0.9, n) * rng.uniform(0.8, 1.2, p)
    return Problem(A, b, lam, rho, shape)


def interior(rng, n, lo=1e-3):
    return rng.uniform(lo, 1.0 - lo, n)


def fd_grad(fun, y, h=1e-6):
    g = np.empty_like(y)
    for i in range(y.size):
        e = np.zeros_like(y)
        e[i] = h
        g[i] = (fun(y + e) - fun(y - e)) / (2 * h)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def tomo16():
    return synthesize(make_phantom("mixed", 16), 0.25)


ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one acceptance outcome; a summary line is printed at the end of the run."""

    def record(num, title, ok, detail=""):
        ACCEPTANCE[num] = (title, bool(ok), detail)
        print(f"[acceptance {num:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"[acceptance {num:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
