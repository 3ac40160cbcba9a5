"""Discrete exterior calculus on a closed simplicial mesh.

Cochains are represented by their values on oriented simplices.  The metric
enters through the diagonal Hodge star ``|sigma*| / |sigma|``.  For the L^p
quantities each cochain value is read as a density ``a = alpha / |sigma|``
integrated against the measure ``m = |sigma| |sigma*|``, which reproduces the
diagonal-star inner product at p = 2.

The p-energy of a k-cochain is

    E_p(alpha) = sum m |dens(d alpha)|^p + sum m |dens(delta alpha)|^p,

and its gradient is ``p * star_k * Delta_p alpha`` with

    Delta_p alpha = delta(w_d * d alpha) + d(w_c * delta alpha),

where ``w = |density|^(p-2)`` on the respective simplices.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .mesh import SimplicialMesh

__all__ = [
    "Cochain",
    "DensityProfile",
    "Operators",
    "operators",
    "d",
    "codifferential",
    "inner2",
    "density_profile",
    "lp_norm",
    "p_energy",
    "p_energy_gradient",
    "apply_p_laplacian",
    "laplacian2_matrix",
]


@dataclass(frozen=True, eq=False)
class Cochain:
    mesh: SimplicialMesh
    k: int
    values: np.ndarray

    def __post_init__(self):
        if not 0 <= self.k <= self.mesh.dim:
            raise ValueError(f"degree {self.k} outside 0..{self.mesh.dim}")
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != self.mesh.counts[self.k]:
            raise ValueError(f"expected {self.mesh.counts[self.k]} values for degree {self.k}, got {v.size}")
        object.__setattr__(self, "values", v)

    def __add__(self, other: Cochain) -> Cochain:
        _same_space(self, other)
        return Cochain(self.mesh, self.k, self.values + other.values)

    def __sub__(self, other: Cochain) -> Cochain:
        _same_space(self, other)
        return Cochain(self.mesh, self.k, self.values - other.values)

    def __mul__(self, c) -> Cochain:
        return Cochain(self.mesh, self.k, float(c) * self.values)

    __rmul__ = __mul__


def _same_space(a: Cochain, b: Cochain):
    if a.mesh is not b.mesh or a.k != b.k:
        raise ValueError("cochains live on different meshes or degrees")


@dataclass(frozen=True)
class DensityProfile:
    density: np.ndarray
    measure: np.ndarray


def _check_p(p: float):
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")


class Operators:
    """Sparse DEC operators of one mesh, with array-level energy kernels."""

    def __init__(self, mesh: SimplicialMesh):
        self.mesh = mesh
        self.n = mesh.dim
        self.primal = mesh.primal_volume
        self.dual = mesh.dual_volume
        # d[k]: C^k -> C^{k+1}
        self.d = [mesh.boundaries[k].T.tocsr() for k in range(self.n)]
        self.star = [du / pr for du, pr in zip(self.dual, self.primal)]
        self.measure = [du * pr for du, pr in zip(self.dual, self.primal)]
        self._bad = [int(np.sum(s <= 0)) for s in self.star]

    def check_star(self, *degrees):
        for k in degrees:
            if 0 <= k <= self.n and self._bad[k]:
                raise ValueError(
                    f"non-positive Hodge star weight on {self._bad[k]} simplices of degree {k} "
                    "(mesh is not well-centered)"
                )

    def dk(self, k: int, x: np.ndarray) -> np.ndarray:
        if not 0 <= k < self.n:
            raise ValueError(f"d is undefined on degree {k} (top degree {self.n})")
        return self.d[k] @ x

    def codiff(self, k: int, y: np.ndarray) -> np.ndarray:
        """delta: C^{k+1} -> C^k, i.e. star_k^{-1} d_k^T star_{k+1}."""
        if not 0 <= k < self.n:
            raise ValueError(f"codifferential target degree {k} out of range")
        self.check_star(k, k + 1)
        return (self.d[k].T @ (self.star[k + 1] * y)) / self.star[k]

    def lp_power(self, k: int, x: np.ndarray, p: float) -> float:
        a = x / self.primal[k]
        return float(np.sum(self.measure[k] * np.abs(a) ** p))

    def weighted(self, k: int, x: np.ndarray, p: float) -> np.ndarray:
        """Covector ``|sigma*| |a|^(p-2) a``: the m-weighted pairing density of x."""
        a = x / self.primal[k]
        return self.dual[k] * np.abs(a) ** (p - 2) * a

    def energy(self, k: int, x: np.ndarray, p: float) -> float:
        e = 0.0
        if k < self.n:
            e += self.lp_power(k + 1, self.dk(k, x), p)
        if k > 0:
            e += self.lp_power(k - 1, self.codiff(k - 1, x), p)
        return e

    def p_laplacian(self, k: int, x: np.ndarray, p: float) -> np.ndarray:
        out = np.zeros_like(x, dtype=float)
        if k < self.n:
            dx = self.dk(k, x)
            w = np.abs(dx / self.primal[k + 1]) ** (p - 2)
            out += self.codiff(k, w * dx)
        if k > 0:
            cx = self.codiff(k - 1, x)
            w = np.abs(cx / self.primal[k - 1]) ** (p - 2)
            out += self.dk(k - 1, w * cx)
        return out

    def gradient(self, k: int, x: np.ndarray, p: float) -> np.ndarray:
        return p * self.star[k] * self.p_laplacian(k, x, p)

    def stiffness(self, k: int) -> sp.csr_matrix:
        """Symmetric matrix ``K = star_k L_k`` of the p = 2 energy."""
        key = ("stiffness", k)
        cache = self.mesh._cache
        if key not in cache:
            self.check_star(*range(max(k - 1, 0), min(k + 1, self.n) + 1))
            K = sp.csr_matrix((self.mesh.counts[k],) * 2)
            if k < self.n:
                D = self.d[k]
                K = K + D.T @ sp.diags(self.star[k + 1]) @ D
            if k > 0:
                D = self.d[k - 1]
                S = sp.diags(self.star[k])
                K = K + S @ D @ sp.diags(1.0 / self.star[k - 1]) @ D.T @ S
            K = ((K + K.T) * 0.5).tocsr()
            K.sort_indices()
            cache[key] = K
        return cache[key]


def operators(mesh: SimplicialMesh) -> Operators:
    cache = mesh._cache
    if "ops" not in cache:
        cache["ops"] = Operators(mesh)
    return cache["ops"]


def d(alpha: Cochain) -> Cochain:
    """Exterior derivative (coboundary)."""
    ops = operators(alpha.mesh)
    return Cochain(alpha.mesh, alpha.k + 1, ops.dk(alpha.k, alpha.values))


def codifferential(beta: Cochain) -> Cochain:
    """Adjoint of d in the diagonal-star inner products."""
    if beta.k < 1:
        raise ValueError("codifferential of a 0-cochain is undefined")
    ops = operators(beta.mesh)
    return Cochain(beta.mesh, beta.k - 1, ops.codiff(beta.k - 1, beta.values))


def inner2(a: Cochain, b: Cochain) -> float:
    _same_space(a, b)
    ops = operators(a.mesh)
    return float(np.sum(ops.star[a.k] * a.values * b.values))


def density_profile(alpha: Cochain) -> DensityProfile:
    ops = operators(alpha.mesh)
    return DensityProfile(alpha.values / ops.primal[alpha.k], ops.measure[alpha.k])


def lp_norm(alpha: Cochain, p: float) -> float:
    _check_p(p)
    ops = operators(alpha.mesh)
    ops.check_star(alpha.k)
    return ops.lp_power(alpha.k, alpha.values, p) ** (1.0 / p)


def p_energy(alpha: Cochain, p: float) -> float:
    """Discrete L^p-Dirichlet energy; the missing term at k = 0 or k = top is zero."""
    _check_p(p)
    return operators(alpha.mesh).energy(alpha.k, alpha.values, p)


def p_energy_gradient(alpha: Cochain, p: float) -> Cochain:
    """Euclidean gradient of :func:`p_energy` with respect to the cochain values."""
    _check_p(p)
    ops = operators(alpha.mesh)
    return Cochain(alpha.mesh, alpha.k, ops.gradient(alpha.k, alpha.values, p))


def apply_p_laplacian(alpha: Cochain, p: float) -> Cochain:
    _check_p(p)
    ops = operators(alpha.mesh)
    return Cochain(alpha.mesh, alpha.k, ops.p_laplacian(alpha.k, alpha.values, p))


def laplacian2_matrix(mesh: SimplicialMesh, k: int) -> sp.csr_matrix:
    """Hodge Laplacian ``d delta + delta d`` on k-cochains, as a sparse matrix.

    It is self-adjoint for the diagonal star: ``diag(star_k) @ L`` is symmetric.
    """
    ops = operators(mesh)
    return (sp.diags(1.0 / ops.star[k]) @ ops.stiffness(k)).tocsr()
