# %% [markdown]
# Nonlinear spectrum of 1-forms on the unit sphere and the curvature lower
# bound.  The sphere has curvature operator 1, so the bound applies with H = 1.

# %%
from phodge import SolverOptions, bound_report, continuation_study, solve_p
from phodge.mesh import build_icosphere

S = build_icosphere(3)
ps = [2.0, 2.5, 3.0, 4.0]
results = continuation_study(S, 1, ps, SolverOptions(restarts=2))

# %%
for res in results:
    rep = bound_report(2, 1, res.p, 1.0, res.lambda1)
    print(f"p={res.p:<4} lambda1={res.lambda1:.4f}  bound={rep.bound_value:.4f}  "
          f"margin={rep.margin:.3f}  residual={res.weak_residual:.1e}")

# %%
# scale covariance: doubling the sphere divides lambda1 by 2^p
big = S.scaled(2.0)
lam = solve_p(big, 1, 3.0, SolverOptions(restarts=1)).lambda1
print("ratio to 2^-3 lambda1:", lam / (results[2].lambda1 / 8))
