# %% [markdown]
# Pointwise exterior algebra: wedge, interior product and the twistor split.
# Indices are zero-based throughout, so e_0 ^ e_1 is the first basis 2-vector.

# %%
import numpy as np

from phodge.exterior_algebra import (
    MultiVector, VectorFormTensor, basis, interior, iota_adjoint, iota_contract,
    norm, tensor_inner, twistor_decompose, wedge, wedge_contract,
)

e0, e1, e2 = (MultiVector.from_indices(3, [i]) for i in range(3))
print("e0^e1 =", (e0 ^ e1).coeffs, "over basis", basis(3, 2))
print("e1^e0 =", (e1 ^ e0).coeffs)          # antisymmetry
print("e0^e0 =", (e0 ^ e0).coeffs)          # zero

# %%
# interior product with e0 strips the e0 factor, with a sign
print("i_e0(e0^e1) =", interior(np.eye(3)[0], e0 ^ e1).coeffs)

# %% [markdown]
# iota_adjoint sends a (k-1)-form to a vector-valued k-form; contracting back
# multiplies by n-k+1.

# %%
rng = np.random.default_rng(0)
n, k = 5, 2
a = MultiVector(n, k - 1, rng.standard_normal(n))
back = iota_contract(iota_adjoint(a))
print("ratio:", back.coeffs / a.coeffs)      # all equal to n - k + 1 = 4

# %%
A = VectorFormTensor(n, k, rng.standard_normal((n, 10)))
pi, pw, rem = twistor_decompose(A)
total = tensor_inner(A, A)
split = tensor_inner(rem, rem) + norm(wedge_contract(A))**2 / (k + 1) + norm(iota_contract(A))**2 / (n - k + 1)
print(f"|A|^2 = {total:.12f}, pieces sum to {split:.12f}")
print("wedge of a scalar:", wedge(MultiVector.scalar(3, 2.0), e2).coeffs)
