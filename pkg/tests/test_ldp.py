import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from wetting import ldp, walks

mpmath.mp.dps = 40


def _lazy_rate_mp(g, x):
    """Legendre transform of log(1 - 2g + 2g cosh t) solved in high precision."""
    g, x = mpmath.mpf(g), mpmath.mpf(x)
    f = lambda t: 2 * g * mpmath.sinh(t) / (1 - 2 * g + 2 * g * mpmath.cosh(t)) - x  # noqa: E731
    t = mpmath.findroot(f, mpmath.asinh(x / (2 * g)))
    return float(t * x - mpmath.log(1 - 2 * g + 2 * g * mpmath.cosh(t)))


@pytest.mark.parametrize("x", [0.05, 0.3, 0.5, 0.9])
def test_lazy_rate_against_high_precision(x):
    rf = ldp.rate_function(walks.make_law("lazy", gamma=0.4), +1)
    np.testing.assert_allclose(ldp.rate(rf, x), _lazy_rate_mp(0.4, x), rtol=1e-11)


def test_rate_edges():
    law = walks.make_law("lazy", gamma=0.4)
    rf = ldp.rate_function(law, +1)
    assert ldp.rate(rf, 0.0) == 0.0
    # at the edge of the support only the all-up path remains
    np.testing.assert_allclose(ldp.rate(rf, 1.0), -math.log(0.4), rtol=1e-12)
    assert math.isinf(ldp.rate(rf, 1.5))


def test_saturated_rate_is_affine():
    law = walks.make_law("almost_geometric", theta=3.0)
    rf = ldp.rate_function(law, +1)
    assert rf.case_tag == "finite_radius_affine"
    x1, x2 = rf.rho + 0.5, rf.rho + 1.5
    slope = (ldp.rate(rf, x2) - ldp.rate(rf, x1)) / (x2 - x1)
    np.testing.assert_allclose(slope, rf.t0, rtol=1e-10)


@given(st.floats(min_value=0.01, max_value=0.85))
def test_legendre_duality(t):
    law = walks.make_law("geometric", gamma=0.4)
    rf = ldp.rate_function(law, +1)
    lam, d1, _ = walks.lmgf_derivatives(law, t)
    np.testing.assert_allclose(ldp.rate(rf, d1), t * d1 - lam, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(ldp.lambda_inverse(rf, lam), t, rtol=1e-8)


@given(st.lists(st.floats(min_value=0.0, max_value=0.95), min_size=3, max_size=3, unique=True))
def test_rate_is_convex(xs):
    rf = ldp.rate_function(walks.make_law("lazy", gamma=0.3), +1)
    x0, x1, x2 = sorted(xs)
    if x2 - x0 < 1e-6:
        return
    w = (x2 - x1) / (x2 - x0)
    assert ldp.rate(rf, x1) <= w * ldp.rate(rf, x0) + (1 - w) * ldp.rate(rf, x2) + 1e-12


def test_rate_derivatives_match_finite_differences():
    rf = ldp.rate_function(walks.make_law("geometric", gamma=0.4), -1)
    x, h = 0.7, 1e-5
    d1, d2 = ldp.rate_derivatives(rf, x)
    np.testing.assert_allclose(d1, (ldp.rate(rf, x + h) - ldp.rate(rf, x - h)) / (2 * h), rtol=1e-7)
    fd2 = (ldp.rate(rf, x + h) - 2 * ldp.rate(rf, x) + ldp.rate(rf, x - h)) / h ** 2
    np.testing.assert_allclose(d2, fd2, rtol=1e-4)


def test_local_ldp_and_chernov():
    law = walks.make_law("lazy", gamma=0.4)
    rep = ldp.verify_local_ldp(law, 0.5, [50, 100, 400, 800], +1)
    assert rep.chernov_holds
    assert np.all(np.diff(np.abs(rep.gap)) < 0)
    rep = ldp.verify_local_ldp(law, 1.0, [10, 20], +1)
    assert rep.exact_edge
