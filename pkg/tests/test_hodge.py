import numpy as np
import pytest

from phodge.dec import Cochain, inner2, operators, p_energy
from phodge.hodge import (
    ConstraintError,
    harmonic_basis,
    lowest_eigenpairs,
    project_to_constraint,
    weighted_orthogonality_residual,
)
from phodge.mesh import build_flat_torus


@pytest.mark.parametrize("fixture, betti", [("ico2", (1, 0, 1)), ("torus8", (1, 2, 1))])
def test_betti_numbers(request, fixture, betti):
    mesh = request.getfixturevalue(fixture)
    assert tuple(harmonic_basis(mesh, k).dim for k in range(3)) == betti


def test_harmonic_basis_is_star_orthonormal_and_harmonic(torus8):
    ops = operators(torus8)
    for k in range(3):
        H = harmonic_basis(torus8, k)
        G = H.vectors.T @ (ops.star[k][:, None] * H.vectors)
        np.testing.assert_allclose(G, np.eye(H.dim), atol=1e-12)
        for c in H.cochains(torus8):
            assert p_energy(c, 2) < 1e-20
            assert p_energy(c, 3) < 1e-20


def test_zero_form_harmonics_are_constants(ico2):
    v = harmonic_basis(ico2, 0).vectors[:, 0]
    assert np.ptp(v) < 1e-10 * np.abs(v).max()


def test_eigenpairs_sorted(ico1):
    w, V = lowest_eigenpairs(ico1, 1, 6)
    assert np.all(np.diff(w) >= -1e-12)
    assert V.shape == (ico1.counts[1], 6)


def test_basis_cached(torus8):
    assert harmonic_basis(torus8, 1) is harmonic_basis(torus8, 1)
    with pytest.raises(ValueError):
        harmonic_basis(torus8, 1, tol=0)


def test_residual_at_p2_is_l2_inner_product(torus8, rng):
    H = harmonic_basis(torus8, 1)
    a = Cochain(torus8, 1, rng.standard_normal(torus8.counts[1]))
    res = weighted_orthogonality_residual(a, 2, H)
    ref = [inner2(a, h) for h in H.cochains(torus8)]
    np.testing.assert_allclose(res, ref, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("p", [2.0, 2.5, 3.0, 4.5])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_projection_meets_constraint(torus8, rng, k, p):
    H = harmonic_basis(torus8, k)
    a = Cochain(torus8, k, rng.standard_normal(torus8.counts[k]) + 0.7)
    b = project_to_constraint(a, p, H)
    res = weighted_orthogonality_residual(b, p, H)
    lp = operators(torus8).lp_power(k, b.values, p) ** ((p - 1) / p)
    assert np.max(np.abs(res)) < 1e-10 * lp
    # only harmonic directions move, so the energy is unchanged
    assert np.isclose(p_energy(b, p), p_energy(a, p), rtol=1e-10)


def test_projection_leaves_feasible_input_unchanged(torus8, rng):
    H = harmonic_basis(torus8, 1)
    a = project_to_constraint(Cochain(torus8, 1, rng.standard_normal(torus8.counts[1])), 3.0, H)
    b = project_to_constraint(a, 3.0, H)
    np.testing.assert_allclose(b.values, a.values, atol=1e-13 * np.abs(a.values).max())


def test_projection_minimises_lp_norm_over_harmonic_shifts(torus8, rng):
    ops = operators(torus8)
    H = harmonic_basis(torus8, 1)
    b = project_to_constraint(Cochain(torus8, 1, rng.standard_normal(torus8.counts[1])), 3.0, H)
    base = ops.lp_power(1, b.values, 3.0)
    for _ in range(10):
        shift = H.vectors @ rng.standard_normal(H.dim) * 0.05
        assert ops.lp_power(1, b.values + shift, 3.0) >= base


def test_entirely_harmonic_input_rejected(torus8):
    H = harmonic_basis(torus8, 1)
    with pytest.raises(ConstraintError):
        project_to_constraint(H.cochains(torus8)[0], 3.0, H)


def test_trivial_kernel_is_noop(ico2, rng):
    H = harmonic_basis(ico2, 1)
    assert H.dim == 0
    a = Cochain(ico2, 1, rng.standard_normal(ico2.counts[1]))
    assert np.array_equal(project_to_constraint(a, 3.0, H).values, a.values)


def test_p_below_two_rejected(torus8):
    H = harmonic_basis(torus8, 0)
    a = Cochain(torus8, 0, np.arange(torus8.counts[0], dtype=float))
    with pytest.raises(ValueError, match="p must be"):
        project_to_constraint(a, 1.5, H)
    with pytest.raises(ValueError, match="p must be"):
        weighted_orthogonality_residual(a, 1.0, H)


def test_sparse_path_matches_dense(monkeypatch):
    import phodge.hodge as hodge
    mesh = build_flat_torus(10)
    dense = hodge.lowest_eigenpairs(mesh, 1, 6)[0]
    monkeypatch.setattr(hodge, "DENSE_LIMIT", 10)
    mesh2 = build_flat_torus(10)
    sparse = hodge.lowest_eigenpairs(mesh2, 1, 6)[0]
    np.testing.assert_allclose(sparse[2:], dense[2:], rtol=1e-8)
    assert np.all(np.abs(sparse[:2]) < 1e-8 * dense[-1])
