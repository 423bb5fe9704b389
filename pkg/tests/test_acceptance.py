"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import json
import time

import numpy as np
import pytest

from opspace import (ModelSpec, SpinSystem, build_liouvillian, build_product_liouvillian,
                     build_tensor_basis, commutator, decompose, evolve, extract_couplings,
                     initial_state, kappa_sweep, profile_mode, rank_coupling_matrix,
                     reconstruct, rotate_basis, slowest_oscillatory_pair, source_decompose,
                     unvectorize, vectorize)
from opspace.cli import main
from opspace.dynamics import jz_from_coefficients, observables, reconstruct_from_modes
from opspace.lattice import casimir_in_tensor_basis, split_coherent
from opspace.perturbative import build_effective, perturbation_error
from opspace.tensors import verify_ladder

import conftest
from conftest import basis_for


def report(n: int, ok: bool, detail: str):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_01_algebra_suite():
    t0 = time.perf_counter()
    worst = 0.0
    for N in range(1, 11):
        s = SpinSystem(N)
        j = N / 2
        worst = max(worst,
                    np.abs(commutator(s.Jx, s.Jy) - 1j * s.Jz).max(),
                    np.abs(commutator(s.Jy, s.Jz) - 1j * s.Jx).max(),
                    np.abs(commutator(s.Jz, s.Jx) - 1j * s.Jy).max(),
                    np.abs(s.J2 - j * (j + 1) * np.eye(N + 1)).max())
        b = build_tensor_basis(s)
        B = b.vectorized
        worst = max(worst, np.abs(B.conj().T @ B - np.eye(b.D)).max(),
                    np.abs(B @ B.conj().T - np.eye(b.D)).max())
        for k, q in b.labels:
            if k:
                worst = max(worst, abs(np.trace(b.tensors[k, q])))
            worst = max(worst, *verify_ladder(b, k, q).values())
    dt = time.perf_counter() - t0
    report(1, worst <= 1e-10 and dt < 10,
           f"algebra N=1..10 max residual {worst:.2e} (tol 1e-10), {dt:.2f} s (< 10 s)")


def test_02_selection_rules():
    t0 = time.perf_counter()
    worst_d = worst_c = 0.0
    for N in (3, 5, 7):
        b = basis_for(N)
        spec = ModelSpec("btc", N, 1.0, 1.0)
        Lt = build_liouvillian(spec, b)[1]
        coh, dis = split_coherent(spec, Lt, b)
        scale = np.abs(Lt.matrix).max()
        k, q = b.k_of_index, b.q_of_index
        dk = np.abs(k[:, None] - k[None, :])
        dq = q[:, None] - q[None, :]
        worst_d = max(worst_d, np.abs(dis[(dq != 0) | (dk >= 2)]).max() / scale)
        worst_c = max(worst_c, np.abs(coh[~((dk == 0) & (np.abs(dq) == 1))]).max() / scale)
    dt = time.perf_counter() - t0
    report(2, worst_d < 1e-10 and worst_c < 1e-10 and dt < 5,
           f"forbidden dissipative {worst_d:.2e}, forbidden coherent {worst_c:.2e} "
           f"(rel. tol 1e-10), {dt:.2f} s (< 5 s)")


def test_03_dissipator_anchors():
    """L[1] = -(2 Gamma/N) Jz and D[Jz] = (Gamma/N)(J^2 - Jz - 2 Jz^2), as stated."""
    g = 0.8
    w1 = wz = 0.0
    for N in range(1, 7):
        s = SpinSystem(N)
        L = build_product_liouvillian(ModelSpec("btc", N, 1.0, g), s).matrix
        Lnoh = L - build_product_liouvillian(ModelSpec("btc", N, 1.0, 0.0), s).matrix
        w1 = max(w1, np.abs(unvectorize(L @ vectorize(np.eye(N + 1))) + 2 * g / N * s.Jz).max())
        target = g / N * (s.J2 - s.Jz - 2 * s.Jz @ s.Jz)
        wz = max(wz, np.abs(unvectorize(Lnoh @ vectorize(s.Jz)) - target).max())
    report(3, w1 <= 1e-12 and wz <= 1e-12,
           f"L[1] residual {w1:.2e}; D[Jz] vs J^2 - Jz - 2Jz^2 residual {wz:.2e} (tol 1e-12); "
           "see test_dissipator_on_jz_corrected for the trace-preserving form")


def test_dissipator_on_jz_corrected():
    """The dissipator on Jz is J^2 - Jz - 3 Jz^2 = -Jz - (3 Jz^2 - J^2): no rank-0 part."""
    for N in range(1, 7):
        s = SpinSystem(N)
        D = s.Jm @ s.Jz @ s.Jp - 0.5 * (s.Jp @ s.Jm @ s.Jz + s.Jz @ s.Jp @ s.Jm)
        assert np.abs(D - (s.J2 - s.Jz - 3 * s.Jz @ s.Jz)).max() < 1e-12
        assert abs(np.trace(D)) < 1e-12
        # the stated form is not traceless, so no trace-preserving map can produce it
        assert abs(np.trace(s.J2 - s.Jz - 2 * s.Jz @ s.Jz)) > 0.1


def test_04_precession_analytic():
    N = 4
    b = basis_for(N)
    spec = ModelSpec("precession", N, 1.0, 1.0)
    sw = kappa_sweep(spec, [0.5, 1.0, 1.9, 2.1, 4.0], b)
    eig_dev = float(sw.deviation.max())
    grid = kappa_sweep(spec, np.round(np.arange(0, 4001) * 1e-3, 12), b)
    ep = grid.exceptional_point
    rel = []
    for kap in (0.5, 1.0, 4.0):
        m = spec.with_gamma(kap * 2 * N)
        rate = m.gamma / (2 * N)
        t = np.linspace(0, 10 / rate, 41)
        tr = evolve(build_liouvillian(m, b)[1], initial_state("coherent", b.spin, b, theta=1.0), t, m)
        jx = observables(tr, b)[:, 0]
        fit = -np.polyfit(t, np.log(jx), 1)[0]
        rel.append(abs(fit / rate - 1))
    ok = eig_dev <= 1e-10 and abs(ep - 2.0) <= 1e-3 and max(rel) <= 1e-6
    report(4, ok, f"k=1 eigenvalue dev {eig_dev:.2e} (tol 1e-10); EP at kappa={ep:.4f} "
                  f"(grid 1e-3); <Jx> rate rel. err {max(rel):.2e} (tol 1e-6)")


def test_05_lossless_hopping_model():
    worst = 0.0
    for kind in ("btc", "precession"):
        for N in (3, 5, 7):
            spec = ModelSpec(kind, N, 1.0, 1.0)
            Lt = build_liouvillian(spec, basis_for(N))[1]
            worst = max(worst, np.abs(reconstruct(extract_couplings(spec, Lt, basis_for(N)))
                                      - Lt.matrix).max())
    report(5, worst <= 1e-10, f"max reconstruction error {worst:.2e} (tol 1e-10)")


def test_06_monotone_damping():
    spec = ModelSpec("btc", 7, 1.0, 1.0)
    c = extract_couplings(spec, build_liouvillian(spec, basis_for(7))[1], basis_for(7))
    g = c.mean_gamma()[1:]
    report(6, bool(np.all(np.diff(g) > 0)),
           "mean_q gamma(k) for k=1..7: " + ", ".join(f"{x:.4f}" for x in g))


def test_07_non_reciprocity():
    b = basis_for(7)
    spec = ModelSpec("btc", 7, 1.0, 1.0)
    C = rank_coupling_matrix(build_liouvillian(spec, b)[1], b)
    k = np.arange(8)
    forbidden = float(C[np.abs(k[:, None] - k[None, :]) >= 2].max())
    bonds = [(kk, C[kk + 1, kk], C[kk, kk + 1]) for kk in range(7)]
    interior = [x for x in bonds if x[0] >= 1]
    asym = all(abs(up - down) > 1e-6 for _, up, down in interior)
    order = "".join(">" if up > down else "<" for _, up, down in bonds)
    g1 = 0.37
    b1 = basis_for(1)
    C1 = rank_coupling_matrix(build_liouvillian(ModelSpec("btc", 1, 1.0, g1), b1)[1], b1)
    anchor = abs(C1[1, 0] - g1)
    report(7, asym and forbidden <= 1e-10 and anchor <= 1e-12,
           f"C(k->k+1) vs C(k+1->k) ordering per bond k=0..6: {order}; forbidden max "
           f"{forbidden:.1e}; N=1 |C(0->1) - Gamma| = {anchor:.1e}")


def test_08_source_mechanism():
    worst = conv = 0.0
    fed = True
    for N in (3, 5):
        b = basis_for(N)
        spec = ModelSpec("btc", N, 1.0, 1.0)
        Lt = build_liouvillian(spec, b)[1]
        s1 = initial_state("polarized", b.spin, b)
        s2 = initial_state("coherent", b.spin, b, theta=2.0, phi=1.0)
        dec = source_decompose(Lt, s1, model=spec)
        t = np.linspace(0, 20 / spec.omega, 201)
        A = reconstruct_from_modes(dec, t, s1.a[0])
        tr = evolve(Lt, s1, t, spec)
        worst = max(worst, float(np.max(np.abs(A - tr.a))))
        lam = dec.eigenvalues
        osc = np.abs(lam.imag) > 1e-8
        fed = fed and bool(np.abs(dec.s[osc]).max() > 1e-6)
        T = 10 / np.min(np.abs(lam.real[np.abs(lam) > 1e-9]))
        late = np.linspace(T, 2 * T, 11)
        z1 = [jz_from_coefficients(x, b) for x in evolve(Lt, s1, late, spec).states]
        z2 = [jz_from_coefficients(x, b) for x in evolve(Lt, s2, late, spec).states]
        conv = max(conv, float(np.max(np.abs(np.subtract(z1, z2)))))
    report(8, worst <= 1e-8 and conv < 1e-6 and fed,
           f"closed form vs propagation {worst:.2e} (tol 1e-8); late <Jz> spread {conv:.2e} "
           f"(< 1e-6); oscillatory source nonzero: {fed}")


def test_09_hybridization():
    N = 5
    b = basis_for(N)
    K2 = casimir_in_tensor_basis(b)
    pr_dev = 0.0
    for g in (0.0, 1e-7):
        d = decompose(build_liouvillian(ModelSpec("btc", N, 1.0, g), b)[1], split_by=K2)
        pr_dev = max(pr_dev, max(abs(profile_mode(d, n, b).pr_k - 1) for n in range(len(d))))
    pr = {}
    for r in (0.5, 2.0):
        d = decompose(build_liouvillian(ModelSpec.from_ratio("btc", N, 1.0, r), b)[1])
        pr[r] = profile_mode(d, slowest_oscillatory_pair(d, 1.0)[0], b).pr_k
    report(9, pr_dev <= 1e-6 and pr[2.0] > pr[0.5] > 1,
           f"Gamma->0 max |PR_k - 1| = {pr_dev:.1e} (tol 1e-6); slowest oscillatory PR_k "
           f"{pr[0.5]:.4f} (Gamma/Omega=0.5) < {pr[2.0]:.4f} (Gamma/Omega=2)")


def test_10_perturbative(tmp_path, capsys):
    N = 5
    spin = SpinSystem(N)
    spec = ModelSpec("btc", N, 1.0, 0.1)
    Lx = build_effective(spec, spin).to_tensor(rotate_basis(basis_for(N))).matrix
    off = float(np.abs(Lx - np.diag(np.diag(Lx))).max())
    tab = perturbation_error(spec, [0.2, 0.1, 0.05, 0.025], basis_for(N))
    code = main(["perturbative-compare", "--n", "5", "--out", str(tmp_path)])
    out = capsys.readouterr().out
    res = json.loads((tmp_path / "perturbative_compare_manifest.json").read_text())["results"]
    surfaced = code == 0 and "ratio 4" in out and abs(res["prefactor_ratio"] - 4) < 1e-9
    report(10, off < 1e-10 and abs(tab.slope - 2.0) <= 0.15 and surfaced,
           f"L_eff off-diagonal {off:.1e} (tol 1e-10); deviation slope {tab.slope:.3f} "
           f"(2.0 +- 0.15); factor-4 prefactor discrepancy surfaced: {surfaced}")


def test_11_physicality():
    herm = neg = trace = 0.0
    for kind in ("btc", "precession"):
        N = 5
        b = basis_for(N)
        spec = ModelSpec(kind, N, 1.0, 1.0)
        Lt = build_liouvillian(spec, b)[1]
        for s0 in (initial_state("polarized", b.spin, b),
                   initial_state("coherent", b.spin, b, theta=2.2, phi=0.7)):
            tr = evolve(Lt, s0, np.linspace(0, 50, 101), spec)
            trace = max(trace, float(np.abs(tr.a[:, 0] - s0.a[0]).max()))
            for a in tr.a:
                rho = b.operator(a)
                herm = max(herm, float(np.abs(rho - rho.conj().T).max()))
                neg = min(neg, float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min()))
    report(11, herm <= 1e-10 and neg >= -1e-8 and trace <= 1e-12,
           f"Hermiticity {herm:.1e} (tol 1e-10); min eigenvalue {neg:.1e} (>= -1e-8); "
           f"a_00 drift {trace:.1e} (tol 1e-12)")
