"""Harmonic cochains and the weighted orthogonality constraint.

The harmonic space is the kernel of the p = 2 Hodge Laplacian.  At general p
the admissible set asks that ``sum m |a|^(p-2) a w = 0`` for every harmonic
density ``w``.  Since harmonic shifts change neither ``d alpha`` nor
``delta alpha``, the constraint is met by moving ``alpha`` along the harmonic
directions only; the correction is the minimiser of the convex function
``c -> ||alpha + Omega c||_p^p / p``, found by Newton's method.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dec import Cochain, operators
from .mesh import SimplicialMesh

__all__ = [
    "HarmonicBasis",
    "SpectralError",
    "ConstraintError",
    "lowest_eigenpairs",
    "harmonic_basis",
    "weighted_orthogonality_residual",
    "project_to_constraint",
    "project_values",
    "DENSE_LIMIT",
]

# dense symmetric eigensolves below this many unknowns, shift-invert Lanczos above
DENSE_LIMIT = 3000
KERNEL_TOL = 1e-8
GAP_FACTOR = 10.0


class SpectralError(RuntimeError):
    """Eigensolver failure or an ambiguous harmonic kernel."""


class ConstraintError(RuntimeError):
    """Newton projection onto the orthogonality slice did not converge."""


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    k: int
    vectors: np.ndarray  # (n_k, b_k), columns orthonormal in <.,.>_2
    tol: float
    eigenvalues: np.ndarray
    scale: float

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def cochains(self, mesh: SimplicialMesh) -> list[Cochain]:
        return [Cochain(mesh, self.k, v) for v in self.vectors.T]


def _largest_eigenvalue(K, star) -> float:
    n = K.shape[0]
    if n <= DENSE_LIMIT:
        return float(sla.eigh(K.toarray(), np.diag(star), eigvals_only=True,
                              subset_by_index=[n - 1, n - 1])[0])
    Dm = sp.diags(1.0 / np.sqrt(star))
    A = (Dm @ K @ Dm).tocsr()
    v0 = np.ones(n) / np.sqrt(n)
    return float(spla.eigsh(A, k=1, which="LA", v0=v0, return_eigenvectors=False, tol=1e-6)[0])


def lowest_eigenpairs(mesh: SimplicialMesh, k: int, nev: int):
    """Smallest ``nev`` eigenpairs of ``K x = lambda diag(star) x`` with star-orthonormal vectors."""
    ops = operators(mesh)
    K = ops.stiffness(k)
    star = ops.star[k]
    n = K.shape[0]
    nev = int(min(nev, n))
    if n <= DENSE_LIMIT:
        w, V = sla.eigh(K.toarray(), np.diag(star), subset_by_index=[0, nev - 1])
        return w, V
    if nev >= n - 1:
        raise SpectralError("too many eigenpairs requested for the sparse path")
    # Work with the symmetric form D^{-1/2} K D^{-1/2}; shift slightly below zero
    # so the factorised matrix is positive definite even with a harmonic kernel.
    Dm = sp.diags(1.0 / np.sqrt(star))
    A = (Dm @ K @ Dm).tocsc()
    scale = cached_scale(mesh, k)
    sigma = -1e-3 * scale
    v0 = np.ones(n) / np.sqrt(n)
    try:
        w, Y = spla.eigsh(A, k=nev, sigma=sigma, which="LM", v0=v0, tol=0)
    except (spla.ArpackError, spla.ArpackNoConvergence) as exc:
        raise SpectralError(f"shift-invert Lanczos failed: {exc}") from exc
    order = np.argsort(w)
    w, Y = w[order], Y[:, order]
    return w, Dm @ Y


def cached_scale(mesh: SimplicialMesh, k: int) -> float:
    key = ("lambda_max", k)
    if key not in mesh._cache:
        ops = operators(mesh)
        mesh._cache[key] = _largest_eigenvalue(ops.stiffness(k), ops.star[k])
    return mesh._cache[key]


def _star_orthonormalize(V: np.ndarray, star: np.ndarray) -> np.ndarray:
    if V.shape[1] == 0:
        return V
    G = V.T @ (star[:, None] * V)
    L = np.linalg.cholesky(G)
    return np.linalg.solve(L, V.T).T


def harmonic_basis(mesh: SimplicialMesh, k: int, tol: float = KERNEL_TOL) -> HarmonicBasis:
    """Star-orthonormal basis of the discrete harmonic k-cochains.

    Eigenvalues below ``tol * lambda_max`` count as harmonic; the next
    eigenvalue must exceed ``GAP_FACTOR * tol * lambda_max``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    key = ("harmonic", k, tol)
    if key in mesh._cache:
        return mesh._cache[key]
    ops = operators(mesh)
    n = mesh.counts[k]
    scale = cached_scale(mesh, k)
    thresh = tol * scale
    nev = min(8, n)
    while True:
        w, V = lowest_eigenpairs(mesh, k, nev)
        nker = int(np.sum(w < thresh))
        if nker < len(w) or nev >= n:
            break
        nev = min(2 * nev, n)
    if nker < len(w) and w[nker] <= GAP_FACTOR * thresh:
        raise SpectralError(
            f"ambiguous harmonic kernel: eigenvalue {w[nker]:.3e} within the gap {GAP_FACTOR}*{thresh:.3e}"
        )
    vecs = _star_orthonormalize(V[:, :nker], ops.star[k])
    basis = HarmonicBasis(k=k, vectors=vecs, tol=tol, eigenvalues=w, scale=scale)
    mesh._cache[key] = basis
    return basis


def weighted_orthogonality_residual(alpha: Cochain, p: float, basis: HarmonicBasis) -> np.ndarray:
    """``sum m |a|^(p-2) a w_i`` for each harmonic basis element ``w_i``."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    ops = operators(alpha.mesh)
    return basis.vectors.T @ ops.weighted(alpha.k, alpha.values, p)


def project_values(ops, k: int, x: np.ndarray, p: float, Omega: np.ndarray,
                   max_iter: int = 50, damping: float = 0.5, rtol: float = 1e-13) -> np.ndarray:
    """Array-level core of :func:`project_to_constraint`."""
    if Omega.shape[1] == 0:
        return x
    if p == 2:
        # linear case: plain star-orthogonal projection
        return x - Omega @ (Omega.T @ (ops.star[k] * x))
    prim = ops.primal[k]
    dual = ops.dual[k]

    def phi(y):
        return ops.lp_power(k, y, p) / p

    y = x.copy()
    scale = max(ops.lp_power(k, x, p), np.finfo(float).tiny) ** ((p - 1) / p)
    for _ in range(max_iter):
        r = Omega.T @ ops.weighted(k, y, p)
        if np.max(np.abs(r)) <= rtol * scale:
            return y
        wgt = (p - 1) * dual * np.abs(y / prim) ** (p - 2) / prim
        J = Omega.T @ (wgt[:, None] * Omega)
        try:
            step = -np.linalg.solve(J, r)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(J, r, rcond=None)[0]
        # backtrack on the convex potential whose gradient is r
        f0 = phi(y)
        slope = float(r @ step)
        t = 1.0
        trial = y + Omega @ step
        # a predicted decrease below round-off of phi makes the sufficient-decrease
        # test meaningless; that close to the minimiser the full Newton step is safe
        while t > 1e-12 and abs(slope) > 1e-12 * f0:
            trial = y + t * (Omega @ step)
            if phi(trial) <= f0 + 1e-4 * t * slope:
                break
            t *= damping
        y = trial
    r = Omega.T @ ops.weighted(k, y, p)
    if np.max(np.abs(r)) <= 1e3 * rtol * scale:
        return y
    raise ConstraintError(f"projection did not converge: residual {np.max(np.abs(r)):.3e}")


def project_to_constraint(alpha: Cochain, p: float, basis: HarmonicBasis,
                          max_iter: int = 50, damping: float = 0.5) -> Cochain:
    """Shift ``alpha`` along harmonic directions until the weighted residual vanishes."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    ops = operators(alpha.mesh)
    if basis.dim:
        coords = basis.vectors.T @ (ops.star[alpha.k] * alpha.values)
        rest = alpha.values - basis.vectors @ coords
        if np.linalg.norm(rest) <= 1e-12 * max(np.linalg.norm(alpha.values), 1e-300):
            raise ConstraintError("cochain is entirely harmonic; the constraint slice is empty")
    y = project_values(ops, alpha.k, alpha.values, p, basis.vectors, max_iter, damping)
    return Cochain(alpha.mesh, alpha.k, y)
