import numpy as np
import pytest

from opspace import (ModelSpec, SpinSystem, build_effective, build_liouvillian, perturbation_error,
                     perturbative_spectrum, rotate_basis)
from opspace.dynamics import dipole_normalization
from opspace.liouvillian import adjoint_superoperator, casimir_superoperator
from opspace.perturbative import match_spectra, xbasis_by_diagonalization

from conftest import basis_for


@pytest.mark.parametrize("N", [1, 3, 6])
def test_rotated_basis(N):
    b = basis_for(N)
    xb = rotate_basis(b)
    B = xb.vectorized
    assert xb.axis == "x"
    assert np.abs(B.conj().T @ B - np.eye(b.D)).max() < 1e-12
    Sx = adjoint_superoperator(b.spin, "x").matrix
    for i, (k, q) in enumerate(xb.labels):
        assert np.abs(Sx @ B[:, i] - q * B[:, i]).max() < 1e-10
    assert np.allclose(xb.tensor(0, 0), b.tensor(0, 0))
    T = xb.tensor(1, 0)
    assert np.allclose(T, dipole_normalization(N / 2) * b.spin.Jx) or \
        np.allclose(T, -dipole_normalization(N / 2) * b.spin.Jx)


@pytest.mark.parametrize("N", [2, 5])
def test_two_routes_to_x_basis(N):
    b = basis_for(N)
    A = rotate_basis(b).vectorized
    B = xbasis_by_diagonalization(b)
    # same columns up to phase, which both routes fix identically
    assert np.abs(np.abs(np.sum(A.conj() * B, axis=0)) - 1).max() < 1e-10
    assert np.abs(A - B).max() < 1e-10


def test_rotate_requires_z_basis():
    with pytest.raises(ValueError):
        rotate_basis(rotate_basis(basis_for(2)))


@pytest.mark.parametrize("N", [2, 5])
def test_effective_symmetries(N):
    spin = SpinSystem(N)
    spec = ModelSpec("btc", N, 1.0, 0.3)
    Le = build_effective(spec, spin).matrix
    for S in (casimir_superoperator(spin).matrix, adjoint_superoperator(spin, "x").matrix):
        assert np.abs(Le @ S - S @ Le).max() < 1e-12
    Lx = build_effective(spec, spin).to_tensor(rotate_basis(basis_for(N))).matrix
    assert np.abs(Lx - np.diag(np.diag(Lx))).max() < 1e-10
    with pytest.raises(ValueError):
        build_effective(ModelSpec("precession", N), spin)


def test_effective_spectrum_forms():
    N, om, g = 5, 1.0, 0.2
    spec = ModelSpec("btc", N, om, g)
    eff = perturbative_spectrum(spec, SpinSystem(N))
    for e in eff:
        assert e.operator == pytest.approx(-1j * om * e.q_x - g / (4 * N) * (e.q_x**2 + e.k * (e.k + 1)))
        assert e.closed_form == pytest.approx(1j * om * e.q_x - g / N * (e.q_x**2 + e.k * (e.k + 1)))
        assert abs(e.operator.imag) == pytest.approx(abs(e.closed_form.imag))
        if e.k:
            assert e.damping_ratio == pytest.approx(4.0)
    assert abs(eff[0].operator) < 1e-14
    k1 = [e.operator for e in eff if e.k == 1]
    assert len(k1) == 3
    assert k1[0].real == pytest.approx(k1[2].real)


def test_exact_coherent_part_is_diagonal_in_x_basis():
    N = 4
    b = basis_for(N)
    xb = rotate_basis(b)
    Lx = build_liouvillian(ModelSpec("btc", N, 1.3, 0.7), b)[0].to_tensor(xb).matrix
    assert np.allclose(np.diag(Lx).imag, -1.3 * xb.q_of_index, atol=1e-10)


def test_unitary_limit_and_scaling():
    spec = ModelSpec("btc", 5, 1.0, 0.1)
    tab = perturbation_error(spec, [0.0, 0.2, 0.1, 0.05, 0.025], basis_for(5))
    assert tab.deviations[0] < 1e-10
    assert abs(tab.slope - 2.0) < 0.15
    closed_form = perturbation_error(spec, [0.2, 0.1, 0.05, 0.025], basis_for(5), use_closed_form=True)
    assert abs(closed_form.slope - 1.0) < 0.15


def test_multiplet_layering_small_gamma():
    N, g = 4, 0.01
    spec = ModelSpec("btc", N, 1.0, g)
    eff = perturbative_spectrum(spec, SpinSystem(N))
    exact = np.linalg.eigvals(build_liouvillian(spec, basis_for(N))[0].matrix)
    pairs, amb = match_spectra(eff, exact)
    assert not amb
    for p in pairs:
        assert abs(p.exact - p.effective) < 10 * g**2
