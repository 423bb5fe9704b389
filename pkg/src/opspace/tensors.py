"""Exact Clebsch-Gordan coefficients and the spherical tensor operator basis.

The basis follows

    T^k_q = sum_{m, m'} (-1)^(j-m) <j m'; j -m | k q> |j m'><j m|

with Condon-Shortley phases.  Flat index of (k, q) is k^2 + k + q, so each
rank sector occupies the contiguous slice [k^2, (k+1)^2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping

import numpy as np

from .spin import SpinSystem, commutator


def _twice(x) -> int:
    """Return 2x as an int, rejecting anything that is not a half-integer."""
    if isinstance(x, bool):
        raise ValueError(f"not a half-integer: {x!r}")
    if isinstance(x, (int, np.integer)):
        return 2 * int(x)
    if isinstance(x, Fraction):
        d = 2 * x
        if d.denominator != 1:
            raise ValueError(f"not a half-integer: {x!r}")
        return int(d)
    try:
        d = 2 * float(x)
    except (TypeError, ValueError):
        raise ValueError(f"not a half-integer: {x!r}") from None
    if not math.isfinite(d) or d != round(d):
        raise ValueError(f"not a half-integer: {x!r}")
    return int(round(d))


def _squarefree_split(n: int) -> tuple[int, int]:
    """Write n = p^2 * s with s squarefree; return (p, s)."""
    p, s, d = 1, 1, 2
    while d * d <= n:
        while n % (d * d) == 0:
            n //= d * d
            p *= d
        if n % d == 0:
            n //= d
            s *= d
        d += 1
    return p, s * n


@dataclass(frozen=True)
class CGCoefficient:
    """A Clebsch-Gordan coefficient stored exactly as sign * sqrt(square)."""

    sign: int
    square: Fraction

    @property
    def value(self) -> float:
        return self.sign * math.sqrt(self.square)

    def __float__(self) -> float:
        return self.value

    def radical(self) -> tuple[Fraction, int]:
        """Return (r, s) with the coefficient equal to r * sqrt(s), s squarefree."""
        if self.sign == 0:
            return Fraction(0), 1
        a, b = self.square.numerator, self.square.denominator
        p, s = _squarefree_split(a * b)
        return Fraction(self.sign * p, b), s


def surd_product(x: tuple[Fraction, int], y: tuple[Fraction, int]) -> tuple[Fraction, int]:
    """Exact product of r1 sqrt(s1) and r2 sqrt(s2) in the same (r, s) form."""
    (r1, s1), (r2, s2) = x, y
    p, s = _squarefree_split(s1 * s2)
    return r1 * r2 * p, s


def surd_sum(terms) -> dict[int, Fraction]:
    """Group r sqrt(s) terms by radical; the sum is zero iff every group is."""
    out: dict[int, Fraction] = {}
    for r, s in terms:
        out[s] = out.get(s, Fraction(0)) + r
    return {s: r for s, r in out.items() if r != 0}


@lru_cache(maxsize=None)
def _cg_twice(tj1: int, tm1: int, tj2: int, tm2: int, tK: int, tQ: int) -> CGCoefficient:
    zero = CGCoefficient(0, Fraction(0))
    if tm1 + tm2 != tQ:
        return zero
    if not (abs(tj1 - tj2) <= tK <= tj1 + tj2) or (tj1 + tj2 + tK) % 2:
        return zero
    if abs(tQ) > tK or (tK + tQ) % 2:
        return zero

    f = math.factorial
    # all of these are integers once the selection rules hold
    a = (tj1 + tj2 - tK) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    d = (tK - tj2 + tm1) // 2
    e = (tK - tj1 - tm2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    total = Fraction(0)
    for k in range(kmin, kmax + 1):
        den = f(k) * f(a - k) * f(b - k) * f(c - k) * f(d + k) * f(e + k)
        total += Fraction((-1) ** k, den)
    if total == 0:
        return zero

    pref = Fraction(
        (tK + 1)
        * f((tK + tj1 - tj2) // 2) * f((tK - tj1 + tj2) // 2) * f((tj1 + tj2 - tK) // 2),
        f((tj1 + tj2 + tK) // 2 + 1),
    )
    pref *= (f((tK + tQ) // 2) * f((tK - tQ) // 2)
             * f((tj1 - tm1) // 2) * f((tj1 + tm1) // 2)
             * f((tj2 - tm2) // 2) * f((tj2 + tm2) // 2))
    return CGCoefficient(1 if total > 0 else -1, pref * total * total)


def clebsch_gordan(j1, m1, j2, m2, K, Q) -> CGCoefficient:
    """<j1 m1; j2 m2 | K Q> in the Condon-Shortley convention.

    Arguments may be ints, Fractions or floats but must be half-integers with
    |m| <= j and j - m integral.  Coefficients that violate the selection rules
    come back as exact zero.
    """
    tj1, tm1, tj2, tm2, tK, tQ = (_twice(x) for x in (j1, m1, j2, m2, K, Q))
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tK, tQ)):
        if tj < 0 or abs(tm) > tj or (tj - tm) % 2:
            raise ValueError(f"invalid angular momentum pair j={tj / 2}, m={tm / 2}")
    return _cg_twice(tj1, tm1, tj2, tm2, tK, tQ)


def cg(j1, m1, j2, m2, K, Q) -> float:
    return clebsch_gordan(j1, m1, j2, m2, K, Q).value


def flat_index(k: int, q: int) -> int:
    return k * k + k + q


def kq_labels(N: int) -> list[tuple[int, int]]:
    return [(k, q) for k in range(N + 1) for q in range(-k, k + 1)]


@dataclass(frozen=True)
class TensorBasis:
    """Orthonormal spherical tensors T^k_q for one spin system.

    ``vectorized`` holds vec(T^k_q) as columns in flat-index order, with the
    row-major vectorization |m><m'| -> |m> (x) |m'>*.
    """

    spin: SpinSystem
    tensors: Mapping[tuple[int, int], np.ndarray] = field(repr=False)
    vectorized: np.ndarray = field(repr=False)
    axis: str = "z"

    @property
    def N(self) -> int:
        return self.spin.N

    @property
    def D(self) -> int:
        return self.vectorized.shape[0]

    @property
    def labels(self) -> list[tuple[int, int]]:
        return kq_labels(self.spin.N)

    @staticmethod
    def flat_index(k: int, q: int) -> int:
        return flat_index(k, q)

    @property
    def k_of_index(self) -> np.ndarray:
        return np.array([k for k, _ in self.labels])

    @property
    def q_of_index(self) -> np.ndarray:
        return np.array([q for _, q in self.labels])

    def check_kq(self, k: int, q: int = 0) -> None:
        if not (0 <= k <= self.spin.N) or abs(q) > k:
            raise ValueError(f"(k, q) = ({k}, {q}) outside 0 <= k <= {self.spin.N}, |q| <= k")

    def tensor(self, k: int, q: int) -> np.ndarray:
        self.check_kq(k, q)
        return self.tensors[k, q]

    def multiplet(self, k: int) -> dict[int, np.ndarray]:
        self.check_kq(k)
        return {q: self.tensors[k, q] for q in range(-k, k + 1)}

    def sector(self, k: int) -> slice:
        self.check_kq(k)
        return slice(k * k, (k + 1) * (k + 1))

    def coefficients(self, op: np.ndarray) -> np.ndarray:
        """a_{k,q} = Tr[(T^k_q)^dagger op] in flat order."""
        op = np.asarray(op)
        if op.shape != (self.spin.dim, self.spin.dim):
            raise ValueError(f"operator shape {op.shape} does not match dim {self.spin.dim}")
        return self.vectorized.conj().T @ op.reshape(-1)

    def operator(self, a: np.ndarray) -> np.ndarray:
        """Inverse of ``coefficients``: sum_{kq} a_{k,q} T^k_q."""
        a = np.asarray(a)
        if a.shape != (self.D,):
            raise ValueError(f"coefficient vector must have length {self.D}")
        d = self.spin.dim
        return (self.vectorized @ a).reshape(d, d)


def build_tensor_basis(spin: SpinSystem) -> TensorBasis:
    j = spin.j
    d = spin.dim
    ms = [j - i for i in range(d)]
    tensors = {}
    for k, q in kq_labels(spin.N):
        T = np.zeros((d, d), dtype=complex)
        for a, mp in enumerate(ms):
            m = mp - q
            if abs(m) > j:
                continue
            b = int(j - m)
            sign = -1 if (j - m) % 2 else 1
            T[a, b] = sign * cg(j, mp, j, -m, k, q)
        T.setflags(write=False)
        tensors[k, q] = T
    B = np.stack([tensors[kq].reshape(-1) for kq in kq_labels(spin.N)], axis=1)
    B.setflags(write=False)
    return TensorBasis(spin, tensors, B)


def verify_ladder(basis: TensorBasis, k: int, q: int) -> dict[str, float]:
    """Frobenius residuals of the defining commutation relations at (k, q)."""
    basis.check_kq(k, q)
    s = basis.spin
    T = basis.tensors[k, q]
    out = {"z": float(np.linalg.norm(commutator(s.Jz, T) - q * T))}
    for label, J, step in (("+", s.Jp, 1), ("-", s.Jm, -1)):
        c = math.sqrt(k * (k + 1) - q * (q + step))
        target = basis.tensors[k, q + step] if abs(q + step) <= k else np.zeros_like(T)
        out[label] = float(np.linalg.norm(commutator(J, T) - c * target))
    return out


def couple_tensors(V: Mapping[int, np.ndarray], k1, U: Mapping[int, np.ndarray], k2,
                   K, Q) -> np.ndarray:
    """Irreducible product [V^{k1} x U^{k2}]^K_Q = sum <k1 q1; k2 q2|K Q> V_q1 U_q2."""
    t1, t2, tK, tQ = _twice(k1), _twice(k2), _twice(K), _twice(Q)
    if not (abs(t1 - t2) <= tK <= t1 + t2) or (t1 + t2 + tK) % 2:
        raise ValueError(f"triangle rule violated: |{k1}-{k2}| <= {K} <= {k1}+{k2}")
    if abs(tQ) > tK or (tK - tQ) % 2:
        raise ValueError(f"invalid component Q={Q} for rank K={K}")
    out = None
    for q1, v in V.items():
        q2 = Fraction(tQ, 2) - Fraction(q1)
        if q2 not in U:
            continue
        c = cg(k1, q1, k2, q2, K, Q)
        if c:
            term = c * (np.asarray(v) @ np.asarray(U[q2]))
            out = term if out is None else out + term
    if out is None:
        first = np.asarray(next(iter(V.values())))
        out = np.zeros(first.shape, dtype=complex)
    return out


def dump_basis_json(basis: TensorBasis, path) -> None:
    """Write the basis as [{k, q, matrix: rows of [re, im] pairs}]."""
    records = []
    for k, q in basis.labels:
        T = basis.tensors[k, q]
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in T]
        records.append({"k": k, "q": q, "matrix": rows})
    with open(path, "w") as fh:
        json.dump(records, fh)


def load_basis_json(path) -> dict[tuple[int, int], np.ndarray]:
    with open(path) as fh:
        records = json.load(fh)
    out = {}
    for rec in records:
        m = np.array(rec["matrix"], dtype=float)
        out[rec["k"], rec["q"]] = m[..., 0] + 1j * m[..., 1]
    return out
