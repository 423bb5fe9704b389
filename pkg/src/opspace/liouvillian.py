"""Vectorization, adjoint superoperators and Lindbladians for collective spin models.

Vectorization is row-major: |m><m'| -> |m> (x) |m'>*, so A X B becomes
(A (x) B^T) vec(X) and the commutator [J, .] is J (x) 1 - 1 (x) J^T.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .spin import SpinSystem, build_spin_system
from .tensors import TensorBasis, build_tensor_basis

BasisTag = Literal["product", "tensor", "xtensor"]


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray = field(repr=False)
    basis: BasisTag = "product"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, other):
        if isinstance(other, Superoperator):
            if other.basis != self.basis:
                raise ValueError(f"basis mismatch: {self.basis} vs {other.basis}")
            return Superoperator(self.matrix @ other.matrix, self.basis)
        return self.matrix @ other

    def to_tensor(self, basis: TensorBasis) -> "Superoperator":
        if self.basis != "product":
            raise ValueError(f"expected product-basis superoperator, got {self.basis}")
        B = basis.vectorized
        tag = "tensor" if basis.axis == "z" else "xtensor"
        return Superoperator(B.conj().T @ self.matrix @ B, tag)


@dataclass(frozen=True)
class ModelSpec:
    """Collective model H = Omega Jx with jump Jz (precession) or J- (btc).

    The dissipator carries the collective prefactor Gamma / N.
    """

    kind: Literal["precession", "btc"]
    N: int
    omega: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("precession", "btc"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def from_ratio(cls, kind, N, omega=1.0, gamma_over_omega=1.0) -> "ModelSpec":
        return cls(kind, N, omega, gamma_over_omega * omega)

    @property
    def rate(self) -> float:
        """Collective rate Gamma / N."""
        return self.gamma / self.N

    @property
    def kappa(self) -> float:
        """Gamma / (2 N Omega), the precession damping ratio."""
        return self.gamma / (2 * self.N * self.omega)

    def with_gamma(self, gamma: float) -> "ModelSpec":
        return ModelSpec(self.kind, self.N, self.omega, gamma)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "N": self.N, "omega": self.omega}
        if self.omega != 0:
            d["gamma_over_omega"] = self.gamma / self.omega
        else:
            d["gamma"] = self.gamma
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        omega = float(d.get("omega", 1.0))
        if "gamma" in d:
            gamma = float(d["gamma"])
        else:
            gamma = float(d.get("gamma_over_omega", 1.0)) * omega
        return cls(d["kind"], int(d["N"]), omega, gamma)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelSpec":
        return cls.from_dict(json.loads(text))


def vectorize(op: np.ndarray) -> np.ndarray:
    op = np.asarray(op)
    if op.ndim != 2 or op.shape[0] != op.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {op.shape}")
    return op.reshape(-1).astype(complex)


def unvectorize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or d * d != v.size:
        raise ValueError(f"vector of length {v.size} is not a vectorized square matrix")
    return v.reshape(d, d)


def left_right(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Matrix of X -> A X B."""
    return np.kron(A, B.T)


def adjoint_superoperator(spin: SpinSystem, alpha: str) -> Superoperator:
    """S_alpha = J_alpha (x) 1 - 1 (x) J_alpha^T, the vectorized [J_alpha, .]."""
    J = spin.op(alpha)
    one = spin.identity()
    return Superoperator(np.kron(J, one) - np.kron(one, J.T))


def casimir_superoperator(spin: SpinSystem) -> Superoperator:
    S = [adjoint_superoperator(spin, a).matrix for a in "xyz"]
    return Superoperator(sum(s @ s for s in S))


def hamiltonian_superoperator(H: np.ndarray) -> np.ndarray:
    """-i [H, .]"""
    one = np.eye(H.shape[0])
    return -1j * (np.kron(H, one) - np.kron(one, H.T))


def dissipator_superoperator(L: np.ndarray) -> np.ndarray:
    """L . L^dag - 1/2 {L^dag L, .} without the rate prefactor."""
    one = np.eye(L.shape[0])
    LdL = L.conj().T @ L
    return np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, one) + np.kron(one, LdL.T))


def lindbladian(H: np.ndarray, jumps, rate: float = 1.0) -> Superoperator:
    """Generic escape hatch: -i[H, .] + rate * sum_mu D[L_mu]."""
    H = np.asarray(H, dtype=complex)
    M = hamiltonian_superoperator(H)
    for L in jumps:
        L = np.asarray(L, dtype=complex)
        if L.shape != H.shape:
            raise ValueError(f"jump operator shape {L.shape} does not match H {H.shape}")
        M = M + rate * dissipator_superoperator(L)
    return Superoperator(M)


def jump_operator(spec: ModelSpec, spin: SpinSystem) -> np.ndarray:
    return spin.Jz if spec.kind == "precession" else spin.Jm


def build_product_liouvillian(spec: ModelSpec, spin: SpinSystem | None = None) -> Superoperator:
    spin = spin or build_spin_system(spec.N)
    if spin.N != spec.N:
        raise ValueError(f"spin system has N={spin.N}, model has N={spec.N}")
    return lindbladian(spec.omega * spin.Jx, [jump_operator(spec, spin)], spec.rate)


def build_liouvillian(spec: ModelSpec, basis: TensorBasis | None = None
                      ) -> tuple[Superoperator, Superoperator]:
    """Return (L_product, L_tensor) with L_tensor = B^dag L_product B."""
    if basis is None:
        basis = build_tensor_basis(build_spin_system(spec.N))
    if basis.N != spec.N:
        raise ValueError(f"basis built for N={basis.N}, model has N={spec.N}")
    Lp = build_product_liouvillian(spec, basis.spin)
    return Lp, Lp.to_tensor(basis)
