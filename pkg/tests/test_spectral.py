import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from opspace import (ExceptionalPointError, ModelSpec, build_liouvillian, decompose,
                     profile_mode, slowest_oscillatory_pair, track_mode)
from opspace.lattice import casimir_in_tensor_basis
from opspace.spectral import profile_vector

from conftest import basis_for, liouvillian_for, spectrum_distance


@pytest.mark.parametrize("kind,N,gamma", [("btc", 3, 1.0), ("btc", 5, 0.5), ("precession", 4, 1.0),
                                          ("btc", 6, 3.0)])
def test_biorthonormal_decomposition(kind, N, gamma):
    _, _, Lt = liouvillian_for(kind, N, 1.0, gamma)
    d = decompose(Lt)
    assert np.abs(d.left.conj().T @ d.right - np.eye(len(d))).max() < 1e-8
    assert np.abs(d.reconstruct() - Lt.matrix).max() < 1e-9
    assert np.abs(d.eigenvalues[d.steady_state_index()]) < 1e-10
    assert d.defective == ()


def test_spectrum_is_conjugation_symmetric():
    _, _, Lt = liouvillian_for("btc", 5, 1.0, 0.5)
    w = decompose(Lt).eigenvalues
    assert spectrum_distance(w, w.conj()) < 1e-9


def test_exceptional_point_strict_and_lenient():
    N = 3
    spec = ModelSpec("precession", N, 1.0, 2 * 2 * N)  # kappa = 2
    Lt = build_liouvillian(spec, basis_for(N))[1]
    with pytest.raises(ExceptionalPointError) as info:
        decompose(Lt)
    assert info.value.condition > 1e6
    d = decompose(Lt, strict=False)
    assert d.defective_mask.sum() >= 2
    mu = -spec.gamma / (4 * N)
    flagged = d.eigenvalues[d.defective_mask]
    assert np.min(np.abs(flagged - mu)) < 1e-6


def test_pure_relaxation_is_defective():
    _, _, Lt = liouvillian_for("btc", 3, 0.0, 1.0)
    d = decompose(Lt, strict=False)
    assert d.defective
    assert slowest_oscillatory_pair(d) is None


def test_unitary_limit_has_pure_rank_modes():
    b = basis_for(5)
    _, _, Lt = liouvillian_for("btc", 5, 1.0, 0.0)
    d = decompose(Lt, split_by=casimir_in_tensor_basis(b))
    assert np.abs(d.eigenvalues.real).max() < 1e-12
    for n in range(len(d)):
        assert profile_mode(d, n, b).pr_k == pytest.approx(1.0, abs=1e-10)


def test_slowest_pair_and_tracking_agree():
    b = basis_for(5)

    def build(r):
        return build_liouvillian(ModelSpec.from_ratio("btc", 5, 1.0, r), b)[1].matrix

    d0 = decompose(build(0.5))
    n0, m0 = slowest_oscillatory_pair(d0, 1.0)
    assert d0.eigenvalues[n0].imag > 0
    assert d0.eigenvalues[m0] == pytest.approx(np.conj(d0.eigenvalues[n0]), abs=1e-9)
    n1, d1 = track_mode(build, 0.5, 0.5, n0, steps=1)
    assert d1.eigenvalues[n1] == pytest.approx(d0.eigenvalues[n0])


@given(arrays(complex, 16, elements=st.complex_numbers(max_magnitude=5, allow_nan=False,
                                                        allow_infinity=False)))
@settings(max_examples=50)
def test_participation_ratio_bounds(c):
    if np.linalg.norm(c) < 1e-6:
        return
    p = profile_vector(c, basis_for(3))
    assert p.w_k.sum() == pytest.approx(1.0)
    assert 1.0 - 1e-12 <= p.pr_k <= 4.0 + 1e-12
    assert sum(p.w_kq.values()) == pytest.approx(1.0)


def test_profile_rejects_bad_index():
    _, _, Lt = liouvillian_for("btc", 3, 1.0, 1.0)
    with pytest.raises(ValueError):
        profile_mode(decompose(Lt), 99, basis_for(3))
