"""
Coupling threshold and the coupled ground state
===============================================

For the two-equation system the semi-trivial state ``(0, V_2)`` is a strict
local minimum on the Nehari manifold below a coupling threshold ``Lambda``
and a saddle above it.  Here we compute ``Lambda``, classify the
semi-trivial state on both sides, and solve for a positive ground state
at strong coupling.
"""

# %%
# The threshold
# -------------
import math

import numpy as np

from fracnehari import GridSpec, SystemParams, quadratic_ground_state
from fracnehari.experiments import verify_theorem_ground_state_beta_large
from fracnehari.spectrum import classify_semitrivial, dense_threshold, lambda_threshold

coarse = GridSpec(1, 256, 60.0)
v2 = quadratic_ground_state(0.5, 1.0, coarse)
thr = lambda_threshold(0.5, 1.0, v2)
mu, _ = dense_threshold(0.5, 1.0, v2)
print(f"Lambda by inverse iteration {thr.Lambda:.12f}, dense eigensolve {mu:.12f}")

# %%
# With equal frequencies ``V_2`` is itself the bottom eigenfunction, which is
# why the value is one half.  Unequal frequencies move it:
for lam1 in (0.5, 2.0, 4.0):
    print(f"lambda1 = {lam1}: Lambda = {lambda_threshold(0.5, lam1, v2).Lambda:.4f}")

# %%
# Classification on either side
# -----------------------------
p = SystemParams.two_eq(0.5, 1.0, 1.0, 0.0)
for beta in (0.8 * thr.Lambda, 1.2 * thr.Lambda):
    c = classify_semitrivial(p, beta, grid=coarse, v2=v2, threshold=thr)
    print(f"beta = {beta:.3f}: {c.verdict.value}, smallest block value {c.min_eig:+.3f}")

# %%
# Strong coupling
# ---------------
# At ``beta = 10`` the constrained descent leaves the semi-trivial state and
# lands on a positive, even state far below ``Phi(0, V_2) = 2 pi``.
rep = verify_theorem_ground_state_beta_large(SystemParams.two_eq(0.5, 1.0, 1.0, 10.0))
print("status:", rep.status)
print(f"Phi(ground) = {rep.values['phi_ground']:.6f},  2 pi = {2 * math.pi:.6f}")
for c in rep.checks:
    print(f"  {'ok ' if c['passed'] else 'BAD'} {c['name']}")
