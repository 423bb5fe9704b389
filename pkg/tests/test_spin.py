import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opspace import SpinSystem, commutator


@given(st.integers(1, 12))
@settings(max_examples=12, deadline=None)
def test_su2_commutators(N):
    s = SpinSystem(N)
    assert np.abs(commutator(s.Jx, s.Jy) - 1j * s.Jz).max() < 1e-12
    assert np.abs(commutator(s.Jy, s.Jz) - 1j * s.Jx).max() < 1e-12
    assert np.abs(commutator(s.Jz, s.Jx) - 1j * s.Jy).max() < 1e-12
    assert np.abs(commutator(s.Jz, s.Jp) - s.Jp).max() < 1e-12


@given(st.integers(1, 12))
@settings(max_examples=12, deadline=None)
def test_casimir_is_scalar(N):
    s = SpinSystem(N)
    j = N / 2
    assert np.abs(s.J2 - j * (j + 1) * np.eye(N + 1)).max() < 1e-10


def test_descending_m_order():
    s = SpinSystem(3)
    assert np.allclose(np.diag(s.Jz).real, [1.5, 0.5, -0.5, -1.5])
    assert np.allclose(s.m_values, [1.5, 0.5, -0.5, -1.5])
    # J+ raises m, so it moves weight toward lower indices
    assert np.allclose(np.tril(s.Jp), 0)
    assert np.isclose(s.Jp[0, 1], np.sqrt(3))


def test_spin_half_is_pauli_over_two():
    s = SpinSystem(1)
    assert np.allclose(s.Jx, [[0, 0.5], [0.5, 0]])
    assert np.allclose(s.Jy, [[0, -0.5j], [0.5j, 0]])
    assert np.allclose(s.Jz, [[0.5, 0], [0, -0.5]])


def test_operators_are_read_only_and_hermitian():
    s = SpinSystem(4)
    for a in "xyz":
        assert np.allclose(s.op(a), s.op(a).conj().T)
    with pytest.raises(ValueError):
        s.Jx[0, 0] = 1
    assert s.op("-") is s.Jm and s.op("+") is s.Jp


@pytest.mark.parametrize("bad", [0, -2, 1.5, True])
def test_invalid_N(bad):
    with pytest.raises(ValueError):
        SpinSystem(bad)


def test_bad_inputs():
    with pytest.raises(ValueError):
        SpinSystem(2).op("w")
    with pytest.raises(ValueError):
        commutator(np.eye(2), np.eye(3))
