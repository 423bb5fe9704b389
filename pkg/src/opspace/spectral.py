"""Biorthogonal eigendecomposition of Liouvillians and rank-hybridization diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .tensors import TensorBasis

CLUSTER_TOL = 1e-8
EP_CONDITION = 1e6
# perturbed Jordan blocks of size <= 4 split by at most ~eps^(1/4) ||L||
DEFECT_RADIUS = 1e-4


class ExceptionalPointError(np.linalg.LinAlgError):
    """The generator is not diagonalizable within tolerance."""

    def __init__(self, cluster, condition):
        self.cluster = np.asarray(cluster)
        self.condition = float(condition)
        super().__init__(
            f"defective eigenvalue cluster near {np.mean(self.cluster):.6g} "
            f"(size {self.cluster.size}, biorthogonal condition {self.condition:.3g})")


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues with paired right/left eigenvectors, left[:, n]^H right[:, m] = delta_nm.

    ``condition`` is 1/|l^H r| for unit-norm l and r before pairing
    normalization.  Modes listed in ``defective`` belong to non-diagonalizable
    clusters; their eigenvalues are snapped to the cluster mean and their left
    vectors are not biorthogonalized.
    """

    eigenvalues: np.ndarray
    right: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    condition: np.ndarray = field(repr=False)
    norm: float = 1.0
    defective: tuple[tuple[int, ...], ...] = ()

    def __len__(self):
        return self.eigenvalues.size

    def reconstruct(self) -> np.ndarray:
        return (self.right * self.eigenvalues) @ self.left.conj().T

    @property
    def defective_mask(self) -> np.ndarray:
        m = np.zeros(self.eigenvalues.size, dtype=bool)
        for cl in self.defective:
            m[list(cl)] = True
        return m

    def steady_state_index(self) -> int:
        return int(np.argmin(np.abs(self.eigenvalues)))


def _clusters(w: np.ndarray, tol: float) -> list[list[int]]:
    n = w.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    close = np.abs(w[:, None] - w[None, :]) < tol
    for i, jj in zip(*np.nonzero(np.triu(close, 1))):
        parent[find(i)] = find(jj)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _unit_columns(A: np.ndarray) -> np.ndarray:
    return A / np.linalg.norm(A, axis=0, keepdims=True)


def decompose(L, *, split_by=None, strict: bool = True,
              cluster_tol: float = CLUSTER_TOL) -> SpectralData:
    """Dense non-Hermitian eigendecomposition with biorthonormal left vectors.

    Left vectors come from the right eigenproblem of L^H and are paired with
    the right vectors by eigenvalue.  Degenerate clusters (|dl| <
    cluster_tol * ||L||) are biorthogonalized jointly; ``split_by`` is an
    optional superoperator commuting with L whose eigenvalues fix the basis
    inside each degenerate cluster.

    A cluster whose biorthogonal condition exceeds EP_CONDITION is defective.
    With ``strict`` this raises ExceptionalPointError; otherwise the cluster is
    merged with nearby ill-conditioned modes, its eigenvalues are replaced by
    their mean and it is listed in ``SpectralData.defective``.
    """
    L = np.array(getattr(L, "matrix", L), dtype=complex)
    scale = float(np.linalg.norm(L, 2)) or 1.0
    # roundoff-level entries get amplified by LAPACK balancing
    L[np.abs(L) < 64 * np.finfo(float).eps * np.abs(L).max()] = 0
    w, R = sla.eig(L)
    wl, Lv = sla.eig(L.conj().T)
    R = _unit_columns(R)
    Lv = _unit_columns(Lv)
    _, perm = linear_sum_assignment(np.abs(w[:, None] - wl.conj()[None, :]))
    Lv = Lv[:, perm]

    def cluster_condition(idx):
        s = np.linalg.svd(Lv[:, idx].conj().T @ R[:, idx], compute_uv=False)
        return 1.0 / max(s[-1], 1e-300)

    clusters = _clusters(w, cluster_tol * scale)
    cond = np.empty(w.size)
    for idx in clusters:
        cond[idx] = cluster_condition(idx)

    good = [idx for idx in clusters if cond[idx[0]] <= EP_CONDITION]
    bad = [idx for idx in clusters if cond[idx[0]] > EP_CONDITION]
    defective: list[tuple[int, ...]] = []
    if bad:
        centers = np.array([w[idx].mean() for idx in bad])
        for grp in _clusters(centers, DEFECT_RADIUS * scale):
            idx = sorted(i for g in grp for i in bad[g])
            c = cluster_condition(idx)
            if c <= EP_CONDITION:
                good.append(idx)
                cond[idx] = c
                continue
            if strict:
                raise ExceptionalPointError(w[idx], c)
            defective.append(tuple(idx))

    w = w.copy()
    Rout = R.copy()
    Lout = Lv.copy()
    for idx in good:
        Rc = R[:, idx]
        Lc = Lv[:, idx] @ np.linalg.inv(Lv[:, idx].conj().T @ Rc).conj().T
        if split_by is not None and len(idx) > 1:
            S = np.asarray(getattr(split_by, "matrix", split_by))
            mu, V = np.linalg.eig(Lc.conj().T @ S @ Rc)
            Rc = _unit_columns(Rc @ V[:, np.argsort(mu.real, kind="stable")])
            Lc = Lv[:, idx] @ np.linalg.inv(Lv[:, idx].conj().T @ Rc).conj().T
            w[idx] = w[idx].mean()
        Rout[:, idx] = Rc
        Lout[:, idx] = Lc
    for idx in defective:
        w[list(idx)] = w[list(idx)].mean()

    return SpectralData(w, Rout, Lout, cond, scale, tuple(defective))


@dataclass(frozen=True)
class ModeProfile:
    n: int
    eigenvalue: complex
    w_kq: dict = field(repr=False)
    w_k: np.ndarray = field(repr=False)
    pr_k: float = 1.0


def mode_coefficients(data: SpectralData, n: int, basis: TensorBasis,
                      x_axis: bool = False, xbasis: TensorBasis | None = None) -> np.ndarray:
    """Unit-norm right eigenvector n in (k, q) or (k, q_x) coordinates."""
    c = data.right[:, n] / np.linalg.norm(data.right[:, n])
    if x_axis:
        if xbasis is None:
            from .perturbative import rotate_basis
            xbasis = rotate_basis(basis)
        c = xbasis.vectorized.conj().T @ (basis.vectorized @ c)
    return c


def profile_mode(data: SpectralData, n: int, basis: TensorBasis, x_axis: bool = False,
                 xbasis: TensorBasis | None = None) -> ModeProfile:
    """Rank weights w_k = sum_q |c_kq|^2 and participation ratio 1 / sum_k w_k^2."""
    if not 0 <= n < len(data):
        raise ValueError(f"mode index {n} out of range")
    c = mode_coefficients(data, n, basis, x_axis, xbasis)
    return profile_vector(c, basis, n=n, eigenvalue=complex(data.eigenvalues[n]))


def profile_vector(c: np.ndarray, basis: TensorBasis, n: int = -1,
                   eigenvalue: complex = complex("nan")) -> ModeProfile:
    p = np.abs(np.asarray(c)) ** 2
    p = p / p.sum()
    w_kq = {kq: float(p[i]) for i, kq in enumerate(basis.labels)}
    w_k = np.array([p[basis.sector(k)].sum() for k in range(basis.N + 1)])
    return ModeProfile(n, eigenvalue, w_kq, w_k, float(1.0 / np.sum(w_k ** 2)))


def slowest_oscillatory_pair(data: SpectralData, omega: float | None = None
                             ) -> tuple[int, int] | None:
    """Conjugate pair with the largest Re(lambda) among modes with |Im| > 1e-8 * Omega.

    Returns (n_plus, n_minus) with Im(lambda[n_plus]) > 0, or None when the
    spectrum has no oscillatory mode.
    """
    w = data.eigenvalues
    scale = omega if omega else data.norm
    thr = 1e-8 * abs(scale)
    up = np.nonzero(w.imag > thr)[0]
    if up.size == 0:
        return None
    n_plus = int(up[np.argmax(w.real[up])])
    down = np.nonzero(w.imag < -thr)[0]
    if down.size == 0:
        return None
    n_minus = int(down[np.argmin(np.abs(w[down] - np.conj(w[n_plus])))])
    if abs(w[n_minus] - np.conj(w[n_plus])) > 1e-8 * max(1.0, data.norm):
        raise np.linalg.LinAlgError(
            f"spectrum not conjugation symmetric near {w[n_plus]:.6g}")
    return n_plus, n_minus


def track_mode(build: Callable[[float], np.ndarray], p0: float, p1: float, n0: int,
               steps: int = 16, min_step: float = 1e-6, **decompose_kw):
    """Follow mode n0 of build(p0) to p = p1 by nearest-eigenvalue continuity.

    The step is halved whenever the nearest and second-nearest candidates are
    within a factor two of each other.  Returns (n1, SpectralData at p1).
    """
    data = decompose(build(p0), **decompose_kw)
    lam = data.eigenvalues[n0]
    n = n0
    p = p0
    h = (p1 - p0) / steps
    while (p1 - p) * np.sign(h) > 0:
        step = h if abs(h) < abs(p1 - p) else p1 - p
        trial = decompose(build(p + step), **decompose_kw)
        d = np.abs(trial.eigenvalues - lam)
        order = np.argsort(d)
        if d.size > 1 and d[order[1]] < 2 * d[order[0]] and d[order[1]] > 0:
            if abs(step) / 2 < min_step:
                raise RuntimeError(f"mode tracking ambiguous at p={p + step:.6g}")
            h = step / 2
            continue
        n = int(order[0])
        lam = trial.eigenvalues[n]
        data = trial
        p = p + step
    return n, data
