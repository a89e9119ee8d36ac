"""
Scalar ground state of the half Laplacian
=========================================

The positive solution of ``|D| v + v = v^2`` on the line is the algebraic
soliton ``V(x) = 2 / (1 + x^2)``.  We compute it on a periodic box, compare
with the closed form, and look at how the box length controls the error.
"""

# %%
# Solve on the default box
# ------------------------
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from fracnehari import GridSpec, solve_scalar_v
from fracnehari.scalar_gs import bo_soliton

grid = GridSpec(1, 8192, 200.0)
V = solve_scalar_v(0.5, 1.0, grid)
x = grid.axis()
err = np.abs(V.values - bo_soliton(x)).max() / 2.0
print(f"max relative error against 2/(1+x^2): {err:.2e}")

# %%
# The tail decays like ``x^-2``, so the periodic images leak in.  The error
# falls roughly like ``L^-2`` as the box grows at fixed spacing.
for L in (50.0, 100.0, 200.0, 400.0):
    g = GridSpec(1, int(round(L / grid.spacing)), L)
    v = solve_scalar_v(0.5, 1.0, g)
    e = np.abs(v.values - bo_soliton(g.axis())).max() / 2.0
    print(f"L = {L:5.0f}   error = {e:.2e}   error * L^2 = {e * L * L:.2f}")

# %%
# Energy moments match ``int V^2 = 2 pi`` and ``int V^3 = 3 pi``.
dx = grid.spacing
print("int V^2 / 2pi =", np.sum(V.values**2) * dx / (2 * math.pi))
print("int V^3 / 3pi =", np.sum(V.values**3) * dx / (3 * math.pi))

fig, ax = plt.subplots()
sel = np.abs(x) < 15
ax.plot(x[sel], V.values[sel], label="computed")
ax.plot(x[sel], bo_soliton(x[sel]), "--", label="2/(1+x^2)")
ax.legend()
fig.savefig("scalar_profile.png", dpi=100)
