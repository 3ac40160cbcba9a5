import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from phodge.bounds import (
    BoundReport,
    bound_report,
    compare,
    constant_C,
    gallot_meyer_bound,
    lower_bound,
    weitzenbock_constant,
)
from phodge.spectrum import SpectrumResult


def test_constant_values():
    assert constant_C(2, 1) == 0.5
    assert constant_C(4, 1) == 0.75
    assert constant_C(3, 1) == constant_C(3, 2) == 2 / 3


@given(st.integers(2, 12).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))))
def test_constant_symmetric_under_duality(nk):
    n, k = nk
    assert constant_C(n, k) == constant_C(n, n - k)


def test_bound_known_values():
    assert lower_bound(2, 1, 2, 1) == pytest.approx(2.0, rel=1e-15)
    assert lower_bound(2, 1, 3, 1) == pytest.approx(math.sqrt(2), rel=1e-14)
    assert lower_bound(2, 1, 4, 1) == pytest.approx(8 / 9, rel=1e-14)
    assert lower_bound(4, 1, 2, 1) == pytest.approx(4.0, rel=1e-15)


def test_bound_nonpositive_curvature_is_vacuous():
    assert lower_bound(2, 1, 3, 0.0) == 0.0
    rep = bound_report(2, 1, 3, -1.0, lambda1=0.1)
    assert rep.vacuous and rep.bound_value == 0 and rep.margin is None and rep.satisfied


def test_gallot_meyer():
    assert gallot_meyer_bound(4, 2, 1) == 6
    assert gallot_meyer_bound(2, 1, 1) == 2
    with pytest.raises(ValueError):
        gallot_meyer_bound(4, 3, 1)


def test_weitzenbock():
    assert weitzenbock_constant(2, 1, 1) == 2
    assert weitzenbock_constant(5, 2, 0.5) == 4


def test_invalid_arguments():
    for args in [(1, 1, 2, 1), (3, 0, 2, 1), (3, 3, 2, 1)]:
        with pytest.raises(ValueError):
            lower_bound(*args)
    with pytest.raises(ValueError, match="p must be"):
        lower_bound(2, 1, 1.9, 1)
    with pytest.raises(ValueError):
        bound_report(2, 1, 3, 1, slack=1.0)
    with pytest.raises(ValueError):
        bound_report(2, 1, 3, 1, lambda1=float("nan"))


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(2, 8))
def test_monotone_in_curvature(h1, h2, p):
    lo, hi = sorted((h1, h2))
    assert lower_bound(3, 1, p, lo) <= lower_bound(3, 1, p, hi) * (1 + 1e-14)


@given(st.floats(0.1, 10), st.floats(2, 8))
def test_homogeneity_in_curvature(H, p):
    assert lower_bound(2, 1, p, 2 * H) == pytest.approx(2 ** (p / 2) * lower_bound(2, 1, p, H), rel=1e-12)


def test_p2_reduction_matches_gallot_meyer():
    for n in range(2, 11):
        for k in range(1, n // 2 + 1):
            t = lower_bound(n, k, 2, 1.0)
            ref = k * (n - k) / constant_C(n, k)
            assert abs(t - ref) <= 1e-12 * ref


def test_report_roundtrip_and_certification():
    rep = bound_report(2, 1, 3.0, 1.0, lambda1=2.08)
    assert rep.satisfied and rep.margin == pytest.approx(2.08 / math.sqrt(2))
    assert BoundReport.from_json(rep.to_json()) == rep
    assert not bound_report(2, 1, 3.0, 1.0, lambda1=1.0).satisfied
    # slack admits values slightly below the bound
    assert bound_report(2, 1, 2.0, 1.0, lambda1=1.95).satisfied


def _result(converged=True, k=1, p=3.0):
    import numpy as np
    return SpectrumResult(lambda1=2.0, eigenform=np.zeros(3), p=p, k=k, iterations=1,
                          quotient_history=[2.0], weak_residual=0.0, harmonic_residual=0.0,
                          orthogonality_residual=0.0, converged=converged, method="ncg",
                          restart=0, grad_norm=0.0)


def test_compare():
    assert compare(_result(), 2, 1, 3.0, 1.0).satisfied
    with pytest.raises(ValueError, match="unconverged"):
        compare(_result(converged=False), 2, 1, 3.0, 1.0)
    with pytest.raises(ValueError):
        compare(_result(k=0), 2, 1, 3.0, 1.0)
