# %% [markdown]
# On the torus the harmonic 1-forms are nontrivial, so every admissible
# cochain must satisfy the weighted orthogonality condition at p != 2.

# %%
import numpy as np

from phodge import Cochain, SolverOptions, harmonic_basis, project_to_constraint, solve_p
from phodge import weighted_orthogonality_residual
from phodge.mesh import build_flat_torus

T = build_flat_torus(12)
H = harmonic_basis(T, 1)
rng = np.random.default_rng(1)
a = Cochain(T, 1, rng.standard_normal(T.counts[1]) + 0.5)
print("before:", weighted_orthogonality_residual(a, 3.0, H))
b = project_to_constraint(a, 3.0, H)
print("after: ", weighted_orthogonality_residual(b, 3.0, H))

# %%
res = solve_p(T, 1, 3.0, SolverOptions(restarts=2))
print(f"lambda1(p=3) = {res.lambda1:.5f}, orthogonality residual = {res.orthogonality_residual:.1e}, "
      f"harmonic part of the residual = {res.harmonic_residual:.1e}")
