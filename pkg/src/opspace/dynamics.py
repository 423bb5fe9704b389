"""Time evolution of tensor coefficients a_{k,q}(t).

Two propagation routes are kept side by side: spectral propagation through
the biorthogonal eigenbasis and a fixed-step RK4 integrator, which also serves
as the fallback at exceptional points.  The non-unital source picture splits
L = [[0, 0], [S, M]] with the identity sector first and solves each mode of M
in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .lattice import ConsistencyError
from .liouvillian import ModelSpec
from .spectral import ExceptionalPointError, SpectralData, decompose
from .spin import SpinSystem
from .tensors import TensorBasis, flat_index

CROSS_CHECK_TOL = 1e-8


@dataclass(frozen=True)
class CoefficientState:
    t: float
    a: np.ndarray = field(repr=False)


def _density(spin: SpinSystem, kind: str, theta: float = 0.0, phi: float = 0.0) -> np.ndarray:
    if kind in ("mixed", "maximally_mixed"):
        return np.eye(spin.dim, dtype=complex) / spin.dim
    if kind == "polarized":
        theta, phi = 0.0, 0.0
    elif kind != "coherent":
        raise ValueError(f"unknown initial state {kind!r}")
    top = np.zeros(spin.dim, dtype=complex)
    top[0] = 1.0  # m = j
    psi = sla.expm(-1j * phi * spin.Jz) @ sla.expm(-1j * theta * spin.Jy) @ top
    return np.outer(psi, psi.conj())


def initial_state(kind: str, spin: SpinSystem, basis: TensorBasis,
                  theta: float = 0.0, phi: float = 0.0) -> CoefficientState:
    """kind is 'polarized' (|j j>), 'mixed' or 'coherent' (|theta, phi>)."""
    return state_from_density(_density(spin, kind, theta, phi), basis)


def state_from_density(rho: np.ndarray, basis: TensorBasis, t: float = 0.0,
                       tol: float = 1e-10) -> CoefficientState:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (basis.spin.dim,) * 2:
        raise ValueError(f"density matrix shape {rho.shape} does not match dim {basis.spin.dim}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError(f"density matrix has trace {np.trace(rho)}")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return CoefficientState(t, basis.coefficients(rho))


def density(state: CoefficientState, basis: TensorBasis) -> np.ndarray:
    return basis.operator(state.a)


def expectation(state: CoefficientState, basis: TensorBasis, observable: np.ndarray) -> complex:
    O = np.asarray(observable)
    if O.shape != (basis.spin.dim,) * 2:
        raise ValueError(f"observable shape {O.shape} does not match dim {basis.spin.dim}")
    return complex(np.trace(O @ basis.operator(state.a)))


def dipole_normalization(j: float) -> float:
    """N_1(j) with T^1_0 = N_1(j) Jz."""
    j = float(j)
    return float(np.sqrt(3.0 / ((2 * j + 1) * (j + 1) * j)))


def jz_from_coefficients(state: CoefficientState, basis: TensorBasis) -> complex:
    return complex(state.a[flat_index(1, 0)] / dipole_normalization(basis.spin.j))


def rk4_propagator(L: np.ndarray, h: float) -> np.ndarray:
    """One classical RK4 step for constant L, as a matrix."""
    A = h * L
    eye = np.eye(L.shape[0])
    A2 = A @ A
    return eye + A + A2 / 2 + A2 @ A / 6 + A2 @ A2 / 24


def default_step(spec: ModelSpec | None, L: np.ndarray) -> float:
    """min(0.01/Omega, 0.01 N/Gamma, 0.01/||L||)."""
    cands = [0.01 / max(float(np.linalg.norm(L, 2)), 1e-300)]
    if spec is not None:
        if spec.omega:
            cands.append(0.01 / abs(spec.omega))
        if spec.gamma:
            cands.append(0.01 * spec.N / spec.gamma)
    return min(cands)


def integrate(L: np.ndarray, a0: np.ndarray, times: Sequence[float], h: float) -> np.ndarray:
    """Fixed-step RK4; each interval is cut into equal steps no larger than h."""
    out = np.empty((len(times), a0.size), dtype=complex)
    a = np.asarray(a0, dtype=complex)
    t_prev = 0.0
    cache: dict[int, np.ndarray] = {}
    for i, t in enumerate(times):
        span = t - t_prev
        if span > 0:
            n = int(np.ceil(span / h - 1e-9))
            P = rk4_propagator(L, span / n)
            a = np.linalg.matrix_power(P, n) @ a if n > 64 else _repeat(P, a, n)
        out[i] = a
        t_prev = t
    return out


def _repeat(P, a, n):
    for _ in range(n):
        a = P @ a
    return a


def spectral_propagate(data: SpectralData, a0: np.ndarray, times: Sequence[float]) -> np.ndarray:
    c0 = data.left.conj().T @ a0
    phases = np.exp(np.outer(times, data.eigenvalues))
    return (phases * c0) @ data.right.T


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    a: np.ndarray = field(repr=False)
    method: str = "spectral"
    deviation: float = 0.0
    exceptional_point: bool = False

    def __len__(self):
        return self.times.size

    def state(self, i: int) -> CoefficientState:
        return CoefficientState(float(self.times[i]), self.a[i])

    @property
    def states(self) -> list[CoefficientState]:
        return [self.state(i) for i in range(len(self))]


def evolve(L_tensor, state0: CoefficientState, times: Sequence[float],
           spec: ModelSpec | None = None, step: float | None = None,
           cross_check: bool = True, tol: float = CROSS_CHECK_TOL) -> Trajectory:
    """a(t) = exp(L t) a(0) by spectral propagation, checked against RK4.

    At an exceptional point the integrator result is returned and flagged.
    Disagreement above ``tol`` (relative, max over samples) raises
    ConsistencyError.
    """
    L = np.asarray(getattr(L_tensor, "matrix", L_tensor))
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or (times.size and times[0] < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be a sorted 1-d grid of non-negative values")
    shift = times - state0.t
    h = step or default_step(spec, L)
    try:
        data = decompose(L)
    except ExceptionalPointError:
        a = integrate(L, state0.a, shift, h)
        return Trajectory(times, a, "integrator", float("nan"), True)
    a = spectral_propagate(data, state0.a, shift)
    dev = 0.0
    if cross_check:
        b = integrate(L, state0.a, shift, h)
        norm = np.maximum(np.linalg.norm(a, axis=1), 1e-300)
        dev = float(np.max(np.linalg.norm(a - b, axis=1) / norm)) if len(times) else 0.0
        if dev > tol:
            raise ConsistencyError(f"spectral and RK4 propagation differ by {dev:.3g}")
    return Trajectory(times, a, "spectral", dev, False)


def observables(traj: Trajectory, basis: TensorBasis) -> np.ndarray:
    """<Jx>, <Jy>, <Jz> per sample (real parts)."""
    s = basis.spin
    ops = [s.Jx, s.Jy, s.Jz]
    # <O> = sum_kq a_kq Tr(O T^k_q)
    weights = np.array([[np.trace(O @ basis.tensors[kq]) for kq in basis.labels] for O in ops])
    return (traj.a @ weights.T).real


@dataclass(frozen=True)
class SourceDecomposition:
    """Block-triangular split of a trace-preserving Liouvillian.

    M acts on the traceless coordinates (flat indices 1..D-1); ``source`` is
    the tensor-coordinate vector of S[1]/(N+1); ``s`` and ``c0`` are modal
    components against the biorthonormal left eigenvectors of M.
    """

    M: np.ndarray = field(repr=False)
    S: np.ndarray = field(repr=False)
    source: np.ndarray = field(repr=False)
    spectrum: SpectralData = field(repr=False)
    s: np.ndarray = field(repr=False)
    c0: np.ndarray = field(repr=False)
    zero_threshold: float = 0.0
    secular: tuple[int, ...] = ()

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    def identity_image(self, basis: TensorBasis) -> np.ndarray:
        """S[1] = L[1] as an operator."""
        a = np.zeros(basis.D, dtype=complex)
        a[1:] = self.S * np.sqrt(basis.spin.dim)
        return basis.operator(a)


def source_decompose(L_tensor, state0: CoefficientState | None = None,
                     spectrum: SpectralData | None = None,
                     model: ModelSpec | None = None) -> SourceDecomposition:
    """Split L = [[0, 0], [S, M]] and project the source onto M's eigenmodes.

    ``spectrum`` may carry a precomputed decomposition of M.  The lambda ~ 0
    threshold is 1e-12 * max(Omega, Gamma/N) when a model is given, else
    1e-12 * ||M||.  Modes below it with nonzero source grow linearly; they are
    listed in ``secular`` rather than silently resolved.
    """
    L = np.asarray(getattr(L_tensor, "matrix", L_tensor))
    D = L.shape[0]
    dim = int(round(np.sqrt(D)))
    if dim * dim != D:
        raise ValueError(f"Liouvillian dimension {D} is not a square")
    if np.abs(L[0]).max() > 1e-10 * max(np.abs(L).max(), 1e-300):
        raise ConsistencyError("Liouvillian is not trace preserving: first row is nonzero")
    M = L[1:, 1:]
    S = L[1:, 0]
    # vec(1) = sqrt(N+1) e_0, so S[1]/(N+1) has tensor coordinates S/sqrt(N+1)
    source = S / np.sqrt(dim)
    spec = spectrum if spectrum is not None else decompose(M, strict=False)
    if spec.right.shape[0] != D - 1:
        raise ValueError("spectrum does not belong to the traceless block")
    s = spec.left.conj().T @ source
    if state0 is not None:
        c0 = spec.left.conj().T @ state0.a[1:]
    else:
        c0 = np.zeros_like(s)
    if model is not None:
        scale = max(abs(model.omega), model.rate)
    else:
        scale = spec.norm
    thr = 1e-12 * scale
    secular = tuple(int(i) for i in np.nonzero((np.abs(spec.eigenvalues) < thr)
                                              & (np.abs(s) > thr))[0])
    return SourceDecomposition(M, S, source, spec, s, c0, thr, secular)


def coefficient_trajectory(dec: SourceDecomposition, alpha: int, t) -> np.ndarray:
    """c(t) = e^{lt} c(0) + (e^{lt} - 1)/l * s, with the l -> 0 limit c(0) + t s."""
    lam = dec.eigenvalues[alpha]
    t = np.asarray(t, dtype=float)
    if abs(lam) < dec.zero_threshold:
        return dec.c0[alpha] + t * dec.s[alpha]
    e = np.exp(lam * t)
    return e * dec.c0[alpha] + np.expm1(lam * t) / lam * dec.s[alpha]


def reconstruct_from_modes(dec: SourceDecomposition, t, a00: complex) -> np.ndarray:
    """Full coefficient vectors a(t) from the closed-form modal solution."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    C = np.stack([coefficient_trajectory(dec, al, t) for al in range(dec.s.size)], axis=1)
    out = np.empty((t.size, dec.s.size + 1), dtype=complex)
    out[:, 0] = a00
    out[:, 1:] = C @ dec.spectrum.right.T
    return out


@dataclass(frozen=True)
class DipoleTriple:
    a_1m1: complex
    a_10: complex
    a_11: complex

    @property
    def a_plus(self) -> complex:
        return (self.a_11 + self.a_1m1) / np.sqrt(2)

    @property
    def a_minus(self) -> complex:
        return (self.a_11 - self.a_1m1) / np.sqrt(2)


def precession_k1_eigenvalues(spec: ModelSpec) -> np.ndarray:
    """{-Gamma/(2N), -Gamma/(4N) +- i Omega sqrt(1 - (kappa/2)^2)}."""
    g = spec.gamma / spec.N
    root = np.sqrt(complex(1 - (spec.kappa / 2) ** 2))
    return np.array([-g / 2, -g / 4 + 1j * spec.omega * root, -g / 4 - 1j * spec.omega * root])


def precession_analytic(spec: ModelSpec, a0: DipoleTriple, t: float) -> DipoleTriple:
    """Closed-form k = 1 precession dynamics.

    a_-(t) decays as exp(-Gamma t / 2N); (a_{1,0}, a_+) evolve under
    [[0, -i Omega], [-i Omega, -Gamma/2N]].  At kappa = 2 the 2x2 generator is
    a Jordan block and the propagator carries the secular t e^{lambda t} term.
    """
    if spec.kind != "precession":
        raise ValueError("precession_analytic needs a precession model")
    g = spec.gamma / (2 * spec.N)
    a_minus = a0.a_minus * np.exp(-g * t)
    A = np.array([[0, -1j * spec.omega], [-1j * spec.omega, -g]])
    mu = -g / 2
    delta = np.sqrt(complex(g * g / 4 - spec.omega ** 2))
    K = A - mu * np.eye(2)
    if delta == 0:
        P = np.exp(mu * t) * (np.eye(2) + t * K)
    else:
        P = np.exp(mu * t) * (np.cosh(delta * t) * np.eye(2) + np.sinh(delta * t) / delta * K)
    a10, a_plus = P @ np.array([a0.a_10, a0.a_plus])
    return DipoleTriple((a_plus - a_minus) / np.sqrt(2), a10, (a_plus + a_minus) / np.sqrt(2))


def dipole_triple(state: CoefficientState) -> DipoleTriple:
    a = state.a
    return DipoleTriple(a[flat_index(1, -1)], a[flat_index(1, 0)], a[flat_index(1, 1)])


@dataclass(frozen=True)
class KappaSweep:
    kappas: np.ndarray
    analytic: np.ndarray = field(repr=False)   # (n, 3): decay, plus, minus
    numeric: np.ndarray = field(repr=False)    # matched to the analytic order
    gap: np.ndarray = field(repr=False)        # |lambda_plus - lambda_minus| from numerics

    @property
    def deviation(self) -> np.ndarray:
        return np.abs(self.numeric - self.analytic).max(axis=1)

    @property
    def exceptional_point(self) -> float:
        """kappa on the grid where the oscillating pair comes closest to coalescing."""
        return float(self.kappas[int(np.argmin(self.gap))])


def kappa_sweep(spec: ModelSpec, kappas: Sequence[float], basis: TensorBasis | None = None
                ) -> KappaSweep:
    """k = 1 precession eigenvalues, numeric against closed form, along a kappa grid."""
    from scipy.optimize import linear_sum_assignment

    from .liouvillian import build_liouvillian
    from .tensors import build_tensor_basis

    if spec.kind != "precession" or spec.omega == 0:
        raise ValueError("kappa sweeps need a precession model with Omega != 0")
    basis = basis or build_tensor_basis(SpinSystem(spec.N))
    sl = basis.sector(1)
    # L is affine in Gamma
    L0 = build_liouvillian(spec.with_gamma(0.0), basis)[1].matrix[sl, sl]
    L1 = build_liouvillian(spec.with_gamma(1.0), basis)[1].matrix[sl, sl] - L0
    kappas = np.asarray(kappas, dtype=float)
    ana = np.empty((kappas.size, 3), dtype=complex)
    num = np.empty_like(ana)
    for i, kap in enumerate(kappas):
        m = spec.with_gamma(kap * 2 * spec.N * spec.omega)
        ana[i] = precession_k1_eigenvalues(m)
        w = np.linalg.eigvals(L0 + m.gamma * L1)
        _, cols = linear_sum_assignment(np.abs(ana[i][:, None] - w[None, :]))
        num[i] = w[cols]
    return KappaSweep(kappas, ana, num, np.abs(num[:, 1] - num[:, 2]))
