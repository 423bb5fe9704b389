"""First-order effective Liouvillian deep in the time-crystal regime.

L_eff = -i Omega S_x - Gamma/(4N) (S_x^2 + S^2) commutes with the adjoint
Casimir and with S_x, so it is diagonal in the x-quantized tensor basis
T^k_{q_x}.  The closed-form eigenvalue list is also carried with the
alternative Gamma/N prefactor, i Omega q_x - Gamma/N (q_x^2 + k(k+1)), so the
two normalizations can be compared side by side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .liouvillian import (ModelSpec, Superoperator, adjoint_superoperator,
                          build_liouvillian, casimir_superoperator)
from .spin import SpinSystem
from .tensors import TensorBasis, build_tensor_basis


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # first component within roundoff of the largest magnitude is made real positive
    mag = np.abs(v)
    i = int(np.argmax(mag >= mag.max() * (1 - 1e-9)))
    return v * (abs(v[i]) / v[i])


def rotate_basis(basis: TensorBasis) -> TensorBasis:
    """x-quantized tensors U T^k_q U^dag with U = exp(-i pi/2 Jy)."""
    if basis.axis != "z":
        raise ValueError("rotate_basis expects a z-quantized basis")
    spin = basis.spin
    U = sla.expm(-0.5j * np.pi * spin.Jy)
    d = spin.dim
    tensors = {}
    cols = []
    for kq in basis.labels:
        v = _fix_phase((U @ basis.tensors[kq] @ U.conj().T).reshape(-1))
        T = v.reshape(d, d)
        T.setflags(write=False)
        tensors[kq] = T
        cols.append(v)
    B = np.stack(cols, axis=1)
    B.setflags(write=False)
    return TensorBasis(spin, tensors, B, axis="x")


def xbasis_by_diagonalization(basis: TensorBasis) -> np.ndarray:
    """Eigenvectors of S_x inside each rank sector, as columns in (k, q_x) order.

    Independent route to ``rotate_basis(basis).vectorized``; columns agree up
    to the per-vector phase convention.
    """
    Sx = adjoint_superoperator(basis.spin, "x").matrix
    B = basis.vectorized
    cols = []
    for k in range(basis.N + 1):
        Bk = B[:, basis.sector(k)]
        mu, V = np.linalg.eigh(Bk.conj().T @ Sx @ Bk)
        order = np.argsort(mu)
        for i in order:
            cols.append(_fix_phase(Bk @ V[:, i]))
    return np.stack(cols, axis=1)


def build_effective(spec: ModelSpec, spin: SpinSystem) -> Superoperator:
    if spec.kind != "btc":
        raise ValueError("the effective Liouvillian is defined for the btc model")
    Sx = adjoint_superoperator(spin, "x").matrix
    K2 = casimir_superoperator(spin).matrix
    return Superoperator(-1j * spec.omega * Sx - spec.gamma / (4 * spec.N) * (Sx @ Sx + K2))


@dataclass(frozen=True)
class EffectiveEigenvalue:
    k: int
    q_x: int
    operator: complex   # <<k q_x| L_eff |k q_x>>, the Gamma/(4N) operator form
    closed_form: complex  # i Omega q_x - Gamma/N (q_x^2 + k(k+1))

    @property
    def damping_ratio(self) -> float:
        """Re(closed_form)/Re(operator); 4 whenever both are nonzero."""
        if self.operator.real == 0:
            return float("nan")
        return self.closed_form.real / self.operator.real


def perturbative_spectrum(spec: ModelSpec, spin: SpinSystem,
                          xbasis: TensorBasis | None = None) -> list[EffectiveEigenvalue]:
    if xbasis is None:
        xbasis = rotate_basis(build_tensor_basis(spin))
    Lx = build_effective(spec, spin).to_tensor(xbasis).matrix
    off = Lx - np.diag(np.diag(Lx))
    if np.abs(off).max() > 1e-10 * max(1.0, np.abs(Lx).max()):
        raise ArithmeticError("L_eff is not diagonal in the x-quantized basis")
    out = []
    for i, (k, q) in enumerate(xbasis.labels):
        closed_form = 1j * spec.omega * q - spec.gamma / spec.N * (q * q + k * (k + 1))
        out.append(EffectiveEigenvalue(k, q, complex(Lx[i, i]), complex(closed_form)))
    return out


@dataclass(frozen=True)
class MatchedPair:
    k: int
    q_x: int
    effective: complex
    exact: complex

    @property
    def deviation(self) -> float:
        return abs(self.exact - self.effective)


def match_spectra(effective: list[EffectiveEigenvalue], exact: np.ndarray,
                  use_closed_form: bool = False) -> tuple[list[MatchedPair], bool]:
    """Pair every effective eigenvalue with an exact one by minimal total distance.

    The flag is True when some exact eigenvalue has two effective candidates at
    equal distance, i.e. the nearest-neighbour pairing is ambiguous.
    """
    mu = np.array([e.closed_form if use_closed_form else e.operator for e in effective])
    dist = np.abs(mu[:, None] - np.asarray(exact)[None, :])
    rows, cols = linear_sum_assignment(dist)
    ambiguous = False
    for c in range(dist.shape[1]):
        d = np.sort(dist[:, c])
        if d.size > 1 and d[1] - d[0] <= 1e-9 * max(d[1], 1e-300):
            ambiguous = True
    pairs = [MatchedPair(effective[r].k, effective[r].q_x, complex(mu[r]), complex(exact[c]))
             for r, c in zip(rows, cols)]
    return pairs, ambiguous


@dataclass(frozen=True)
class PerturbationTable:
    gammas: np.ndarray
    deviations: np.ndarray
    ambiguous: np.ndarray
    slope: float

    def rows(self):
        return zip(self.gammas, self.deviations, self.ambiguous)


def perturbation_error(spec: ModelSpec, gammas, basis: TensorBasis | None = None,
                       use_closed_form: bool = False) -> PerturbationTable:
    """Max |exact - effective| eigenvalue deviation along a Gamma grid.

    The slope is the least-squares log-log slope over points with Gamma > 0 that
    paired unambiguously.
    """
    if basis is None:
        basis = build_tensor_basis(SpinSystem(spec.N))
    xbasis = rotate_basis(basis)
    devs, amb = [], []
    for g in gammas:
        s = spec.with_gamma(float(g))
        eff = perturbative_spectrum(s, basis.spin, xbasis)
        exact = np.linalg.eigvals(build_liouvillian(s, basis)[0].matrix)
        pairs, a = match_spectra(eff, exact, use_closed_form)
        devs.append(max(p.deviation for p in pairs))
        amb.append(a)
    g = np.asarray(gammas, dtype=float)
    devs = np.asarray(devs)
    amb = np.asarray(amb)
    use = (g > 0) & ~amb & (devs > 0)
    slope = float(np.polyfit(np.log(g[use]), np.log(devs[use]), 1)[0]) if use.sum() >= 2 else float("nan")
    return PerturbationTable(g, devs, amb, slope)
