# %% [markdown]
# Dephasing under precession: H = Omega Jx, jump Jz.
#
# Here the rank k is conserved, so every multiplet evolves on its own. The dipole
# (k = 1) block has eigenvalues -Gamma/2N and -Gamma/4N +- i Omega sqrt(1 - (kappa/2)^2)
# with kappa = Gamma/(2 N Omega). At kappa = 2 the oscillating pair coalesces.

# %%
import numpy as np

from opspace import (ModelSpec, SpinSystem, build_liouvillian, build_tensor_basis, evolve,
                     initial_state, kappa_sweep)
from opspace.dynamics import observables

N = 4
basis = build_tensor_basis(SpinSystem(N))
spec = ModelSpec("precession", N, omega=1.0)

# %%
sweep = kappa_sweep(spec, np.linspace(0, 4, 4001), basis)
print("EP located at kappa =", sweep.exceptional_point)
away = np.abs(sweep.kappas - 2) > 1e-2
print(f"closed form vs numerics away from the EP: {sweep.deviation[away].max():.1e}")
print(f"... and right at it (defective, sqrt(eps) sensitivity): {sweep.deviation.max():.1e}")

# %%
# <Jx> is the antisymmetric dipole combination and decays without oscillating.
for kappa in (0.5, 2.0, 4.0):
    m = spec.with_gamma(kappa * 2 * N)
    t = np.linspace(0, 8, 9)
    tr = evolve(build_liouvillian(m, basis)[1], initial_state("coherent", basis.spin, basis, theta=1.0),
                t, m)
    jx = observables(tr, basis)[:, 0]
    rate = -np.polyfit(t, np.log(jx), 1)[0]
    print(f"kappa={kappa}: fitted rate {rate:.6f}, Gamma/2N = {m.gamma / (2 * N):.6f}, "
          f"path = {tr.method}")
