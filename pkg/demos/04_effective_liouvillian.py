# %% [markdown]
# Weak dissipation: first-order effective Liouvillian.
#
# L_eff = -i Omega S_x - Gamma/(4N)(S_x^2 + S^2) is diagonal in the x-quantized
# tensors. Its error against the exact spectrum should shrink as Gamma^2. The
# alternative closed form with a Gamma/N prefactor is carried along for comparison.

# %%
import numpy as np

from opspace import ModelSpec, SpinSystem, build_tensor_basis, perturbation_error, perturbative_spectrum

N = 5
basis = build_tensor_basis(SpinSystem(N))
spec = ModelSpec("btc", N, omega=1.0, gamma=0.1)

for e in perturbative_spectrum(spec, basis.spin)[:9]:
    print(f"k={e.k} q_x={e.q_x:+d}  operator form {e.operator:.4f}   Gamma/N form {e.closed_form:.4f}")

# %%
gammas = [0.2, 0.1, 0.05, 0.025]
op = perturbation_error(spec, gammas, basis)
pr = perturbation_error(spec, gammas, basis, use_closed_form=True)
for g, a, b in zip(gammas, op.deviations, pr.deviations):
    print(f"Gamma={g:<6} operator form {a:.3e}   Gamma/N form {b:.3e}")
print(f"log-log slopes: operator form {op.slope:.3f}, Gamma/N form {pr.slope:.3f}")
