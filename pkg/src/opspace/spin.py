"""Spin-j operator matrices for a collective spin of N spin-1/2 constituents.

Basis order is descending magnetic number, m = j, j-1, ..., -j, so index i
carries m = j - i.  Every index map downstream relies on this ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


@dataclass(frozen=True)
class SpinSystem:
    """Dense spin operators in the j = N/2 sector."""

    N: int
    j: Fraction = field(init=False)
    dim: int = field(init=False)
    Jx: np.ndarray = field(init=False, repr=False)
    Jy: np.ndarray = field(init=False, repr=False)
    Jz: np.ndarray = field(init=False, repr=False)
    Jp: np.ndarray = field(init=False, repr=False)
    Jm: np.ndarray = field(init=False, repr=False)
    J2: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        N = int(self.N)
        j = N / 2
        m = j - np.arange(N + 1)
        Jz = np.diag(m).astype(complex)
        # <m+1|J+|m> sits on the superdiagonal because m decreases with index
        Jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
        Jm = Jp.conj().T
        Jx = (Jp + Jm) / 2
        Jy = (Jp - Jm) / 2j
        J2 = Jx @ Jx + Jy @ Jy + Jz @ Jz
        for name, value in [("N", N), ("j", Fraction(N, 2)), ("dim", N + 1),
                            ("Jx", Jx), ("Jy", Jy), ("Jz", Jz),
                            ("Jp", Jp), ("Jm", Jm), ("J2", J2)]:
            object.__setattr__(self, name, value)
        for a in (Jx, Jy, Jz, Jp, Jm, J2):
            a.setflags(write=False)

    @property
    def m_values(self) -> np.ndarray:
        return float(self.j) - np.arange(self.dim)

    def op(self, alpha: str) -> np.ndarray:
        """Spin component by label: 'x', 'y', 'z', '+', '-'."""
        table = {"x": self.Jx, "y": self.Jy, "z": self.Jz,
                 "+": self.Jp, "p": self.Jp, "-": self.Jm, "m": self.Jm}
        try:
            return table[alpha]
        except KeyError:
            raise ValueError(f"unknown spin component {alpha!r}") from None

    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)


def build_spin_system(N: int) -> SpinSystem:
    return SpinSystem(N)


def commutator(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Return AB - BA."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape != B.shape:
        raise ValueError(f"commutator needs equal square matrices, got {A.shape} and {B.shape}")
    return A @ B - B @ A
