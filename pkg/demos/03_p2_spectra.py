# %% [markdown]
# The linear Hodge Laplacian.  On the unit sphere the first nonzero eigenvalue
# is 2 for functions, 1-forms and 2-forms; on the equilateral unit torus it is
# 16 pi^2 / 3 for functions.

# %%
import math

from phodge import harmonic_basis, solve_p2
from phodge.mesh import build_flat_torus, build_icosphere

S = build_icosphere(3)
for k in range(3):
    print(f"sphere k={k}: lambda1 = {solve_p2(S, k).lambda1:.6f}, b_k = {harmonic_basis(S, k).dim}")

# %%
for N in (8, 16, 32):
    lam = solve_p2(build_flat_torus(N, period=1.0), 0).lambda1
    print(f"torus N={N}: {lam:.4f} (exact {16 * math.pi**2 / 3:.4f})")

# %%
T = build_flat_torus(8)
print("torus harmonic dimensions:", [harmonic_basis(T, k).dim for k in range(3)])
