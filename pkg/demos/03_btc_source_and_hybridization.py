# %% [markdown]
# The boundary time crystal: H = Omega Jx, jump J-.
#
# The dissipator is not unital. The identity feeds the dipole sector, and that
# source term s_alpha drives every mode from the same place whatever the initial
# state. Dissipation also mixes ranks, so the slow oscillating mode spreads
# over several k as Gamma/Omega grows.

# %%
import numpy as np

from opspace import (ModelSpec, SpinSystem, build_liouvillian, build_tensor_basis, decompose,
                     evolve, initial_state, profile_mode, rotate_basis,
                     slowest_oscillatory_pair, source_decompose)
from opspace.dynamics import jz_from_coefficients

N = 5
basis = build_tensor_basis(SpinSystem(N))
spec = ModelSpec("btc", N, omega=1.0, gamma=1.0)
L = build_liouvillian(spec, basis)[1]

# %%
s_up = initial_state("polarized", basis.spin, basis)
s_tilt = initial_state("coherent", basis.spin, basis, theta=2.0, phi=1.0)
dec = source_decompose(L, s_up, model=spec)
osc = np.abs(dec.eigenvalues.imag) > 1e-8
print(f"largest source weight on an oscillating mode: {np.abs(dec.s[osc]).max():.3f}")

t = np.array([0.0, 20.0, 80.0, 160.0])
for name, s0 in (("polarized", s_up), ("tilted", s_tilt)):
    z = [jz_from_coefficients(st, basis).real for st in evolve(L, s0, t, spec).states]
    print(name.ljust(10), " ".join(f"{v: .8f}" for v in z))

# %%
# Rank weights of the slowest oscillating mode.
xb = rotate_basis(basis)
for r in (0.5, 2.0):
    d = decompose(build_liouvillian(ModelSpec.from_ratio("btc", N, 1.0, r), basis)[1])
    n, _ = slowest_oscillatory_pair(d, 1.0)
    p = profile_mode(d, n, basis, x_axis=True, xbasis=xb)
    print(f"Gamma/Omega={r}: lambda={p.eigenvalue:.4f}  PR_k={p.pr_k:.3f}  w_k={np.round(p.w_k, 3)}")
