import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from wetting import oracles, renewal, walks, well
from wetting._special import polylog_exp

mpmath.mp.dps = 40


def test_laplace_coefficients_are_the_binomial_series():
    # 1 - sqrt(1 - z) expanded by mpmath
    coeffs = mpmath.taylor(lambda z: 1 - mpmath.sqrt(1 - z), 0, 12)
    f = oracles.closed_form_model("laplace", gamma=1.0).fplus_fn(12)
    np.testing.assert_allclose(f[1:], [float(c) for c in coeffs[1:]], rtol=1e-13)


@pytest.mark.parametrize("s,mu", [(1.5, 0.01), (1.5, 2.0), (2.0, 0.3), (1.25, 1e-4), (0.5, 0.7)])
def test_polylog_against_mpmath(s, mu):
    np.testing.assert_allclose(polylog_exp(s, mu), float(mpmath.polylog(s, mpmath.exp(-mu))), rtol=1e-12)


def test_known_critical_points():
    # Gaussian: f_n = n^{-3/2} / sqrt(2 pi), so kappa = zeta(3/2) / sqrt(2 pi)
    np.testing.assert_allclose(oracles.closed_form("gaussian", "lambda_c"),
                               float(mpmath.sqrt(2 * mpmath.pi) / mpmath.zeta(1.5)), rtol=1e-14)
    # alpha = 1: f_n = 1/(pi n^2), kappa = pi/6
    np.testing.assert_allclose(oracles.closed_form_model("zeta", alpha=1.0).lambda_c, 6 / math.pi, rtol=1e-14)
    np.testing.assert_allclose(oracles.closed_form("laplace", "F", 2.0, gamma=1.0), math.log(4 / 3), rtol=1e-14)


def test_glaplace_closed_form_solves_the_equation():
    m = oracles.closed_form_model("glaplace", gamma=1.0)
    for lam in (m.lambda_c * 1.01, 5.0, 12.0):
        F = m.F(lam)
        target = mpmath.mpf(1) / lam
        r = mpmath.sqrt(1 - mpmath.exp(-F))
        np.testing.assert_allclose(float(1 - mpmath.sqrt((1 + r) / 2)), float(target), rtol=1e-12)


@pytest.mark.parametrize("family", ["lazy", "geometric"])
def test_lattice_closed_forms_match_renewal(family):
    cf = oracles.closed_form_model(family, gamma=0.4)
    rm = renewal.renewal_model(walks.make_law(family, gamma=0.4), n_max=500)
    np.testing.assert_allclose(cf.kappa, rm.kappa, rtol=1e-13)
    for lam in (cf.lambda_c * 1.05, 3.0, 9.0):
        np.testing.assert_allclose(cf.F(lam), renewal.free_energy(rm, lam), rtol=1e-10)


@given(st.floats(min_value=0.0, max_value=0.9))
def test_lambda_inverse_roundtrip(t):
    for fam, kw in (("lazy", {"gamma": 0.4}), ("geometric", {"gamma": 0.4}), ("laplace", {}),
                    ("glaplace", {}), ("gaussian", {})):
        m = oracles.closed_form_model(fam, **kw)
        np.testing.assert_allclose(m.Lambda_inverse(m.Lambda(t)), t, rtol=1e-9, atol=1e-12)


def test_well_formula_matches_variational_solution():
    cf = oracles.closed_form_model("geometric", gamma=0.4)
    wm = well.well_model(walks.make_law("geometric", gamma=0.4))
    for lam, a in [(3.0, 0.05), (5.0, 0.2), (2.0, 0.01)]:
        np.testing.assert_allclose(cf.F_well(lam, a), well.psi_closed_form(wm, lam, a).F_well, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(cf.a_c(lam), well.critical_depth(wm, lam), rtol=1e-12)


def test_zeta_critical_constant_matches_numerics():
    derived, stated = oracles.zeta_critical_constants(2.0, 1 / math.sqrt(2 * math.pi))
    m = oracles.closed_form_model("gaussian")
    u = np.array([4e-3, 2e-3, 1e-3, 5e-4])
    ratios = [m.F(m.lambda_c + x) / x ** 2 for x in u]
    np.testing.assert_allclose(renewal.richardson(u, ratios), derived, rtol=2e-3)
    assert abs(stated / derived - 1) > 0.5


def test_errors():
    with pytest.raises(ValueError):
        oracles.closed_form_model("zeta", alpha=3.0)
    with pytest.raises(ValueError):
        oracles.closed_form("lazy", "nope", gamma=0.4)
    with pytest.raises(ValueError):
        oracles.closed_form_model("zeta", alpha=1.5).F_well(2.0, 0.1)
    with pytest.raises(ValueError):
        oracles.closed_form_model("lazy", gamma=0.4, theta=1.0)
