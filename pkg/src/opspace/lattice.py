"""Hopping-model view of a tensor-basis Liouvillian on the (k, q) lattice.

    d/dt a_{k,q} = -i Omega [w+(k,q-1) a_{k,q-1} + w-(k,q+1) a_{k,q+1}]
                   + (Gamma/N) [t+(k-1,q) a_{k-1,q} + t-(k+1,q) a_{k+1,q}]
                   - gamma(k,q) a_{k,q}

gamma(k, q) is the full on-site decay -Re L[(k,q),(k,q)]; t+- carry the
Gamma/N prefactor divided out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .liouvillian import ModelSpec, Superoperator, build_liouvillian, casimir_superoperator
from .tensors import TensorBasis, flat_index

ZERO_TOL = 1e-10
CONSISTENCY_TOL = 1e-8


class ConsistencyError(ArithmeticError):
    """A numerical cross-check between two independent routes failed."""


def w_plus(k: int, q: int) -> float:
    return 0.5 * math.sqrt(k * (k + 1) - q * (q + 1))


def w_minus(k: int, q: int) -> float:
    return 0.5 * math.sqrt(k * (k + 1) - q * (q - 1))


def projector(basis: TensorBasis, k: int) -> Superoperator:
    """P^(k) = sum_q |k q>><<k q| in the product basis."""
    Bk = basis.vectorized[:, basis.sector(k)]
    return Superoperator(Bk @ Bk.conj().T)


def _matrix(L) -> np.ndarray:
    if isinstance(L, Superoperator):
        if L.basis == "product":
            raise ValueError("expected a tensor-basis Liouvillian")
        return L.matrix
    return np.asarray(L)


def rank_coupling_matrix(L_tensor, basis: TensorBasis) -> np.ndarray:
    """C[k, k'] = Frobenius norm of the (k' -> k) block of L."""
    L = _matrix(L_tensor)
    n = basis.N + 1
    C = np.zeros((n, n))
    for k in range(n):
        for kp in range(n):
            C[k, kp] = np.linalg.norm(L[basis.sector(k), basis.sector(kp)])
    return C


def rank_coupling_via_projectors(L_product, basis: TensorBasis) -> np.ndarray:
    """Same quantity as ``rank_coupling_matrix`` from P^(k) L P^(k') in the product basis."""
    L = np.asarray(getattr(L_product, "matrix", L_product))
    P = [projector(basis, k).matrix for k in range(basis.N + 1)]
    return np.array([[np.linalg.norm(Pk @ L @ Pkp) for Pkp in P] for Pk in P])


@dataclass(frozen=True)
class LatticeCouplings:
    N: int
    omega: float
    gamma_rate: float  # Gamma / N
    gamma: dict = field(repr=False)
    t_plus: dict = field(repr=False)
    t_minus: dict = field(repr=False)
    w_plus: dict = field(repr=False)
    w_minus: dict = field(repr=False)
    C: np.ndarray = field(repr=False)

    def sites(self):
        return [(k, q) for k in range(self.N + 1) for q in range(-k, k + 1)]

    def mean_gamma(self) -> np.ndarray:
        return np.array([np.mean([self.gamma[k, q] for q in range(-k, k + 1)])
                         for k in range(self.N + 1)])

    def reciprocity(self) -> list[dict]:
        """Per bond (k,q)-(k+1,q): |t+(k,q)| against |t-(k+1,q)| and |t-(k,q)|."""
        out = []
        for k in range(self.N):
            for q in range(-k, k + 1):
                tp = abs(self.t_plus[k, q])
                back = abs(self.t_minus[k + 1, q])
                same = abs(self.t_minus[k, q]) if (k, q) in self.t_minus else float("nan")
                out.append({"k": k, "q": q, "t_plus": tp, "t_minus_reverse": back,
                            "t_minus_same_site": same,
                            "forward_dominant": tp > back})
        return out


def _selection_masks(basis: TensorBasis):
    k = basis.k_of_index
    q = basis.q_of_index
    dk = np.abs(k[:, None] - k[None, :])
    dq = q[:, None] - q[None, :]
    dissipative_allowed = (dq == 0) & (dk <= 1)
    coherent_allowed = (dk == 0) & (np.abs(dq) == 1)
    return dissipative_allowed, coherent_allowed


def split_coherent(spec: ModelSpec, L_tensor, basis: TensorBasis) -> tuple[np.ndarray, np.ndarray]:
    """(coherent, dissipative) parts; coherent part is the Gamma = 0 build."""
    L = _matrix(L_tensor)
    coherent = build_liouvillian(spec.with_gamma(0.0), basis)[1].matrix
    return coherent, L - coherent


@dataclass(frozen=True)
class SelectionReport:
    max_forbidden_dissipative: float
    max_q_changing_dissipative: float
    max_k_jump_dissipative: float
    max_forbidden_coherent: float
    max_k_changing: float
    scale: float

    def ok(self, tol: float = ZERO_TOL) -> bool:
        return (self.max_forbidden_dissipative <= tol * self.scale
                and self.max_forbidden_coherent <= tol * self.scale)


def verify_selection_rules(spec: ModelSpec, L_tensor, basis: TensorBasis) -> SelectionReport:
    coherent, dissipative = split_coherent(spec, L_tensor, basis)
    L = coherent + dissipative
    k = basis.k_of_index
    q = basis.q_of_index
    dk = np.abs(k[:, None] - k[None, :])
    d_ok, c_ok = _selection_masks(basis)

    def peak(a, mask):
        return float(np.abs(a[mask]).max()) if mask.any() else 0.0

    return SelectionReport(
        max_forbidden_dissipative=peak(dissipative, ~d_ok),
        max_q_changing_dissipative=peak(dissipative, q[:, None] != q[None, :]),
        max_k_jump_dissipative=peak(dissipative, dk >= 2),
        max_forbidden_coherent=peak(coherent, ~c_ok),
        max_k_changing=peak(L, dk >= 1),
        scale=float(np.abs(L).max()),
    )


def extract_couplings(spec: ModelSpec, L_tensor, basis: TensorBasis) -> LatticeCouplings:
    """Read gamma, t+- from Liouvillian entries; fill w+- analytically.

    Raises ConsistencyError when weight outside the nearest-neighbour
    structure exceeds 1e-8 of the largest element, or when the coherent part
    disagrees with -i Omega w+-.
    """
    L = _matrix(L_tensor)
    coherent, dissipative = split_coherent(spec, L, basis)
    scale = max(float(np.abs(L).max()), 1e-300)
    d_ok, c_ok = _selection_masks(basis)
    leak = max(np.abs(dissipative[~d_ok]).max(initial=0.0), np.abs(coherent[~c_ok]).max(initial=0.0))
    if leak > CONSISTENCY_TOL * scale:
        raise ConsistencyError(f"off-lattice weight {leak:.3g} exceeds {CONSISTENCY_TOL} x {scale:.3g}")
    rate = spec.rate
    gamma, tp, tm, wp, wm = {}, {}, {}, {}, {}
    N = basis.N
    for k in range(N + 1):
        for q in range(-k, k + 1):
            i = flat_index(k, q)
            gamma[k, q] = float(-L[i, i].real)
            wp[k, q] = w_plus(k, q)
            wm[k, q] = w_minus(k, q)
            for dest, store in ((k + 1, tp), (k - 1, tm)):
                if 0 <= dest <= N and abs(q) <= dest:
                    store[k, q] = complex(dissipative[flat_index(dest, q), i] / rate) if rate else 0j
                else:
                    store[k, q] = 0j
            if abs(L[i, i].imag) > CONSISTENCY_TOL * scale:
                raise ConsistencyError(f"on-site term at ({k},{q}) has imaginary part {L[i, i].imag:.3g}")
    # coherent hops against the closed form
    for k in range(N + 1):
        for q in range(-k, k + 1):
            i = flat_index(k, q)
            for dq, w in ((1, wp[k, q]), (-1, wm[k, q])):
                if abs(q + dq) <= k:
                    got = coherent[flat_index(k, q + dq), i]
                    if abs(got - (-1j * spec.omega * w)) > CONSISTENCY_TOL * scale:
                        raise ConsistencyError(f"coherent hop ({k},{q})->({k},{q + dq}) = {got}")
    return LatticeCouplings(N, spec.omega, rate, gamma, tp, tm, wp, wm,
                            rank_coupling_matrix(L, basis))


def reconstruct(c: LatticeCouplings) -> np.ndarray:
    """Assemble the tensor-basis Liouvillian from on-site terms and four neighbour hops."""
    N = c.N
    D = (N + 1) ** 2
    L = np.zeros((D, D), dtype=complex)
    for k, q in c.sites():
        i = flat_index(k, q)
        L[i, i] = -c.gamma[k, q]
        if q + 1 <= k:
            L[flat_index(k, q + 1), i] += -1j * c.omega * c.w_plus[k, q]
        if q - 1 >= -k:
            L[flat_index(k, q - 1), i] += -1j * c.omega * c.w_minus[k, q]
        if k + 1 <= N:
            L[flat_index(k + 1, q), i] += c.gamma_rate * c.t_plus[k, q]
        if k - 1 >= abs(q):
            L[flat_index(k - 1, q), i] += c.gamma_rate * c.t_minus[k, q]
    return L


def precession_sector_block(spec: ModelSpec, k: int) -> np.ndarray:
    """Closed-form (2k+1)x(2k+1) precession block in q = -k..k order."""
    n = 2 * k + 1
    A = np.zeros((n, n), dtype=complex)
    for a, q in enumerate(range(-k, k + 1)):
        A[a, a] = -spec.gamma / (2 * spec.N) * q * q
        if q + 1 <= k:
            A[a + 1, a] = -1j * spec.omega * w_plus(k, q)
        if q - 1 >= -k:
            A[a - 1, a] = -1j * spec.omega * w_minus(k, q)
    return A


def commutes_with_casimir(L_tensor, basis: TensorBasis) -> float:
    """||[L, K^2]|| in the tensor basis, where K^2 is diag(k(k+1))."""
    L = _matrix(L_tensor)
    k = basis.k_of_index
    kk = k * (k + 1.0)
    return float(np.abs(L * (kk[None, :] - kk[:, None])).max())


def casimir_in_tensor_basis(basis: TensorBasis) -> np.ndarray:
    return casimir_superoperator(basis.spin).to_tensor(basis).matrix
