from functools import lru_cache

import pytest

from opspace import ModelSpec, SpinSystem, build_liouvillian, build_tensor_basis

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def basis_for(N: int):
    return build_tensor_basis(SpinSystem(N))


@lru_cache(maxsize=None)
def liouvillian_for(kind: str, N: int, omega: float = 1.0, gamma: float = 1.0):
    spec = ModelSpec(kind, N, omega, gamma)
    Lp, Lt = build_liouvillian(spec, basis_for(N))
    return spec, Lp, Lt


@pytest.fixture
def basis():
    return basis_for


@pytest.fixture
def model():
    return liouvillian_for


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def spectrum_distance(a, b) -> float:
    """Max distance under the optimal one-to-one pairing of two eigenvalue lists."""
    import numpy as np
    from scipy.optimize import linear_sum_assignment

    d = np.abs(np.asarray(a)[:, None] - np.asarray(b)[None, :])
    r, c = linear_sum_assignment(d)
    return float(d[r, c].max())
