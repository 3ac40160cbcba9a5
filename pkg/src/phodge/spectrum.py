"""First eigenvalue of the discrete p-Hodge Laplacian.

At p = 2 the problem is the generalised symmetric eigenproblem
``K x = lambda diag(star) x`` on the complement of the harmonic space.  For
p > 2 we minimise the scale-invariant quotient

    R_p(alpha) = E_p(alpha) / ||alpha||_p^p

over cochains normalised to ``||alpha||_p = 1`` that satisfy the weighted
harmonic orthogonality constraint, using preconditioned Polak-Ribiere
nonlinear CG with Armijo backtracking and continuation in p.

Along harmonic shifts the energy is constant and the constraint picks the
shift minimising ``||alpha||_p``, so the constrained quotient is
``E(alpha) / min_c ||alpha + Omega c||_p^p``.  Its gradient at a feasible point
is the plain gradient of ``R_p``, which is what the iteration uses.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dec import Cochain, Operators, operators
from .hodge import (
    HarmonicBasis,
    SpectralError,
    cached_scale,
    harmonic_basis,
    lowest_eigenpairs,
    project_values,
)
from .mesh import SimplicialMesh

__all__ = [
    "SolverOptions",
    "SpectrumResult",
    "solve_p2",
    "solve_p",
    "weak_residual",
    "harmonic_residual",
    "continuation_study",
    "THREADS_ENV",
]

THREADS_ENV = "PHODGE_NUM_THREADS"


@dataclass(frozen=True)
class SolverOptions:
    seed: int = 0
    restarts: int = 4
    max_iters: int = 5000
    tol_rel: float = 1e-9
    tol_grad: float = 1e-7
    continuation_step: float = 0.25
    continuation_steps: tuple = ()
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    init: str = "p2"
    precondition: bool = True
    workers: int | None = None

    def __post_init__(self):
        if self.tol_rel <= 0 or self.tol_grad <= 0:
            raise ValueError("tolerances must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.continuation_step <= 0:
            raise ValueError("continuation_step must be positive")
        if not 0 < self.armijo_c1 < 1 or not 0 < self.backtrack < 1:
            raise ValueError("Armijo parameters must lie in (0, 1)")
        if self.init not in ("p2", "random"):
            raise ValueError(f"init must be 'p2' or 'random', got {self.init!r}")
        object.__setattr__(self, "continuation_steps", tuple(float(q) for q in self.continuation_steps))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["continuation_steps"] = list(self.continuation_steps)
        return d


@dataclass
class SpectrumResult:
    lambda1: float
    eigenform: Cochain
    p: float
    k: int
    iterations: int
    quotient_history: list
    weak_residual: float
    harmonic_residual: float
    orthogonality_residual: float
    converged: bool
    method: str = "ncg"
    restart: int = 0
    grad_norm: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, include_eigenform: bool = False) -> dict:
        d = {
            "lambda1": self.lambda1,
            "p": self.p,
            "k": self.k,
            "iterations": self.iterations,
            "weak_residual": self.weak_residual,
            "harmonic_residual": self.harmonic_residual,
            "orthogonality_residual": self.orthogonality_residual,
            "converged": self.converged,
            "method": self.method,
            "restart": self.restart,
            "grad_norm": self.grad_norm,
            "quotient_history": list(self.quotient_history),
        }
        d.update(self.extra)
        if include_eigenform:
            d["eigenform"] = self.eigenform.values.tolist()
        return d


def _check_p(p: float):
    if not p >= 2:
        raise ValueError(f"p must be >= 2, got {p}")


def _fix_sign(x: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(x)))
    return -x if x[i] < 0 else x


def _residuals(ops: Operators, k: int, x: np.ndarray, lam: float, p: float, Omega: np.ndarray):
    if lam == 0:
        raise ValueError("weak residual is undefined for lambda = 0")
    res = ops.star[k] * ops.p_laplacian(k, x, p) - lam * ops.weighted(k, x, p)
    denom = abs(lam) * ops.lp_power(k, x, p) ** ((p - 1) / p)
    weak = math.sqrt(float(np.sum(res * res / ops.star[k]))) / denom
    harm = float(np.max(np.abs(Omega.T @ res))) / denom if Omega.shape[1] else 0.0
    return weak, harm


def _orth_residual(ops: Operators, k: int, x: np.ndarray, p: float, Omega: np.ndarray) -> float:
    if Omega.shape[1] == 0:
        return 0.0
    scale = ops.lp_power(k, x, p) ** ((p - 1) / p)
    return float(np.max(np.abs(Omega.T @ ops.weighted(k, x, p)))) / scale


def weak_residual(result: SpectrumResult, mesh: SimplicialMesh | None = None) -> float:
    """Relative dual-norm residual of the weak eigen-equation at ``result``."""
    mesh = result.eigenform.mesh if mesh is None else mesh
    ops = operators(mesh)
    Omega = harmonic_basis(mesh, result.k).vectors
    return _residuals(ops, result.k, result.eigenform.values, result.lambda1, result.p, Omega)[0]


def harmonic_residual(result: SpectrumResult, mesh: SimplicialMesh | None = None) -> float:
    """Largest harmonic component of the weak residual (the Lagrange multiplier test)."""
    mesh = result.eigenform.mesh if mesh is None else mesh
    ops = operators(mesh)
    Omega = harmonic_basis(mesh, result.k).vectors
    return _residuals(ops, result.k, result.eigenform.values, result.lambda1, result.p, Omega)[1]


def _p2_pairs(mesh: SimplicialMesh, k: int, extra: int):
    basis = harmonic_basis(mesh, k)
    n = mesh.counts[k]
    if n <= basis.dim:
        raise SpectralError(f"degree-{k} cochains are all harmonic; no nonzero eigenvalue")
    nev = min(basis.dim + extra, n)
    w, V = lowest_eigenpairs(mesh, k, nev)
    return basis, w[basis.dim:], V[:, basis.dim:]


def solve_p2(mesh: SimplicialMesh, k: int) -> SpectrumResult:
    """Smallest nonzero eigenvalue of the p = 2 Hodge Laplacian on k-cochains."""
    ops = operators(mesh)
    basis, w, V = _p2_pairs(mesh, k, 1)
    Omega = basis.vectors
    x = V[:, 0]
    x = x - Omega @ (Omega.T @ (ops.star[k] * x))
    x = _fix_sign(x / math.sqrt(float(np.sum(ops.star[k] * x * x))))
    lam = float(w[0])
    weak, harm = _residuals(ops, k, x, lam, 2.0, Omega)
    return SpectrumResult(
        lambda1=lam, eigenform=Cochain(mesh, k, x), p=2.0, k=k, iterations=0,
        quotient_history=[lam], weak_residual=weak, harmonic_residual=harm,
        orthogonality_residual=_orth_residual(ops, k, x, 2.0, Omega),
        converged=bool(np.isfinite(lam) and lam > 0), method="eigensolver",
    )


class _Problem:
    """Quotient, gradient and feasibility map at fixed (mesh, k, p)."""

    def __init__(self, ops: Operators, k: int, p: float, Omega: np.ndarray, precond):
        self.ops, self.k, self.p, self.Omega, self.precond = ops, k, p, Omega, precond

    def feasible(self, x):
        y = project_values(self.ops, self.k, x, self.p, self.Omega)
        return y / self.ops.lp_power(self.k, y, self.p) ** (1.0 / self.p)

    def quotient(self, x):
        return self.ops.energy(self.k, x, self.p) / self.ops.lp_power(self.k, x, self.p)

    def gradient(self, x, R):
        ops, k, p = self.ops, self.k, self.p
        N = ops.lp_power(k, x, p)
        return (ops.gradient(k, x, p) - R * p * ops.weighted(k, x, p)) / N

    def grad_norm(self, g, R):
        # equals the weak residual when ||x||_p = 1
        return math.sqrt(float(np.sum(g * g / self.ops.star[self.k]))) / (self.p * R)

    def apply_precond(self, g):
        if self.precond is None:
            return g / self.ops.star[self.k]
        return self.precond(g)


def _ncg(prob: _Problem, x0: np.ndarray, opts: SolverOptions):
    x = prob.feasible(x0)
    R = prob.quotient(x)
    g = prob.gradient(x, R)
    z = prob.apply_precond(g)
    gz = float(g @ z)
    direction = -z
    history = [R]
    gnorm = prob.grad_norm(g, R)
    if gnorm < opts.tol_grad:
        return x, R, history, 0, True, gnorm
    t_prev = 1.0
    converged = False
    failures = 0
    it = 0
    for it in range(1, opts.max_iters + 1):
        slope = float(g @ direction)
        if slope >= 0:
            direction, slope = -z, -gz
        t = min(2.0 * t_prev, 1e6)
        accepted = False
        while t > 1e-30:
            trial = prob.feasible(x + t * direction)
            Rt = prob.quotient(trial)
            if Rt <= R + opts.armijo_c1 * t * slope:
                accepted = True
                break
            t *= opts.backtrack
        if not accepted:
            failures += 1
            if failures >= 2 or gnorm < opts.tol_grad:
                converged = gnorm < opts.tol_grad
                break
            direction = -z
            continue
        failures = 0
        t_prev = t
        x_new, R_new = trial, Rt
        g_new = prob.gradient(x_new, R_new)
        z_new = prob.apply_precond(g_new)
        gz_new = float(g_new @ z_new)
        beta = max(0.0, float(g_new @ (z_new - z)) / gz) if gz > 0 else 0.0
        rel = abs(R - R_new) / abs(R_new)
        x, R, g, z, gz = x_new, R_new, g_new, z_new, gz_new
        direction = -z + beta * direction
        history.append(R)
        gnorm = prob.grad_norm(g, R)
        if rel < opts.tol_rel and gnorm < opts.tol_grad:
            converged = True
            break
    return x, R, history, it, converged, gnorm


def _stage_grid(targets, opts: SolverOptions, start: float = 2.0):
    """Continuation p values with a flag marking requested targets."""
    grid = []
    cur = start
    explicit = sorted(q for q in opts.continuation_steps if q > start)
    for t in targets:
        if explicit:
            inner = [q for q in explicit if cur < q < t]
        else:
            nsteps = max(1, math.ceil((t - cur) / opts.continuation_step - 1e-9))
            inner = list(np.linspace(cur, t, nsteps + 1)[1:-1]) if t > cur else []
        grid.extend((float(q), False) for q in inner)
        grid.append((float(t), True))
        cur = t
    return grid


def _workers(opts: SolverOptions) -> int:
    if opts.workers is not None:
        return max(1, int(opts.workers))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


class _Setup:
    def __init__(self, mesh: SimplicialMesh, k: int, opts: SolverOptions):
        self.mesh, self.k, self.opts = mesh, k, opts
        self.ops = operators(mesh)
        self.basis: HarmonicBasis = harmonic_basis(mesh, k)
        self.Omega = self.basis.vectors
        self.precond = None
        if opts.precondition:
            K = self.ops.stiffness(k)
            shift = 1e-3 * cached_scale(mesh, k)
            lu = spla.splu((K + shift * sp.diags(self.ops.star[k])).tocsc())
            self.precond = lu.solve
        self.p2 = None
        self.cluster = None
        if opts.init == "p2":
            self.p2 = solve_p2(mesh, k)
            _, w, V = _p2_pairs(mesh, k, 8)
            self.cluster = (w, V)

    def start(self, r: int) -> np.ndarray:
        n = self.mesh.counts[self.k]
        rng = np.random.default_rng([self.opts.seed, r])
        if self.opts.init == "random":
            return rng.standard_normal(n)
        if r == 0:
            return self.p2.eigenform.values.copy()
        w, V = self.cluster
        near = w <= w[0] * 1.05
        coef = np.where(near, 1.0, 0.1) * rng.standard_normal(len(w))
        return V @ coef

    def problem(self, p: float) -> _Problem:
        return _Problem(self.ops, self.k, p, self.Omega, self.precond)


def _run_chain(setup: _Setup, r: int, targets) -> list[SpectrumResult]:
    ops, k, Omega = setup.ops, setup.k, setup.Omega
    x = setup.start(r)
    out = []
    history: list = []
    iters = 0
    converged_all = True
    for p, is_target in _stage_grid(targets, setup.opts):
        x, R, hist, it, conv, gnorm = _ncg(setup.problem(p), x, setup.opts)
        history.extend(hist)
        iters += it
        converged_all = conv
        if is_target:
            x = _fix_sign(x)
            weak, harm = _residuals(ops, k, x, R, p, Omega)
            out.append(SpectrumResult(
                lambda1=float(R), eigenform=Cochain(setup.mesh, k, x.copy()), p=p, k=k,
                iterations=iters, quotient_history=history, weak_residual=weak,
                harmonic_residual=harm, orthogonality_residual=_orth_residual(ops, k, x, p, Omega),
                converged=bool(converged_all and np.isfinite(R)), method="ncg", restart=r,
                grad_norm=gnorm,
            ))
            history, iters = [], 0
    return out


def _pick(results: list[SpectrumResult]) -> SpectrumResult:
    conv = [res for res in results if res.converged]
    pool = conv if conv else results
    # min quotient; ties broken by lowest restart index
    return min(pool, key=lambda res: (res.lambda1, res.restart))


def _chains(mesh, k, targets, opts):
    for p in targets:
        _check_p(p)
    if list(targets) != sorted(targets):
        raise ValueError("p values must be sorted ascending")
    setup = _Setup(mesh, k, opts)
    nw = _workers(opts)
    if nw > 1 and opts.restarts > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            chains = list(pool.map(lambda r: _run_chain(setup, r, targets), range(opts.restarts)))
    else:
        chains = [_run_chain(setup, r, targets) for r in range(opts.restarts)]
    return [_pick([c[i] for c in chains]) for i in range(len(targets))]


def solve_p(mesh: SimplicialMesh, k: int, p: float, opts: SolverOptions | None = None) -> SpectrumResult:
    """Constrained minimisation of the p-quotient; best of ``opts.restarts`` chains."""
    opts = SolverOptions() if opts is None else opts
    _check_p(p)
    return _chains(mesh, k, [float(p)], opts)[0]


def continuation_study(mesh: SimplicialMesh, k: int, p_list, opts: SolverOptions | None = None) -> list[SpectrumResult]:
    """lambda_1(p) along ascending ``p_list`` (starting at 2) with chained warm starts."""
    opts = SolverOptions() if opts is None else opts
    p_list = [float(q) for q in p_list]
    if not p_list or p_list[0] != 2.0:
        raise ValueError("p_list must start at 2")
    return _chains(mesh, k, p_list, opts)
