import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wetting import oracles, walks, well


@pytest.fixture(scope="module")
def lazy():
    return well.well_model(walks.make_law("lazy", gamma=0.4))


@pytest.fixture(scope="module")
def ag():
    return well.well_model(walks.make_law("almost_geometric", theta=3.0))


def test_benchmark_value_against_closed_form(lazy):
    sol = well.psi_closed_form(lazy, 3.0, 0.05)
    np.testing.assert_allclose(sol.F_well, oracles.well_closed_form("lazy", 3.0, 0.05, gamma=0.4), rtol=1e-13)
    assert sol.regime == "Wet-Cramer"
    np.testing.assert_allclose([sol.u_star, sol.v_star], [0.1, 0.9], rtol=1e-12)


@pytest.mark.parametrize("lam,a", [(2.0, 0.02), (3.0, 0.1), (5.0, 0.3), (8.0, 0.45), (3.0, 0.2)])
def test_closed_form_vs_brute_force(lazy, lam, a):
    sol = well.psi_closed_form(lazy, lam, a)
    brute = well.psi_brute_force(lazy, lam, a, grid_n=400)
    np.testing.assert_allclose(sol.psi, brute, atol=1e-9)


def test_asymmetric_depths_and_law():
    model = well.well_model(walks.make_law("custom", table={-2: 0.1, -1: 0.2, 0: 0.3, 1: 0.4}))
    for lam, a, b in [(3.0, 0.05, 0.1), (4.0, 0.1, 0.02)]:
        sol = well.psi_closed_form(model, lam, a, b=b)
        brute = well.psi_brute_force(model, lam, a, grid_n=400, b=b)
        np.testing.assert_allclose(sol.psi, brute, atol=1e-9)


def test_a_zero_gives_flat_free_energy(lazy):
    sol = well.psi_closed_form(lazy, 3.0, 0.0)
    np.testing.assert_allclose(sol.F_well, lazy.F(3.0), rtol=1e-15)


def test_dry_beyond_maximal_depth(lazy):
    assert well.max_depth(lazy) == pytest.approx(0.5)
    sol = well.psi_closed_form(lazy, 3.0, 0.6)
    assert sol.regime == "Dry" and sol.F_well == 0.0


def test_saturated_regime(ag):
    lm, lp = well.saturation_points(ag)
    assert lm == lp and math.isfinite(lm)
    sol = well.psi_closed_form(ag, 3.0, 0.08)
    assert sol.regime == "Wet-SaturatedBoth"
    assert sol.U_star == (0.0, 0.0) and sol.V_star == (1.0, 1.0)
    np.testing.assert_allclose(sol.psi, well.psi_brute_force(ag, 3.0, 0.08, grid_n=400), atol=1e-9)
    # the saturation point solves F(lambda) = Lambda(t0)
    np.testing.assert_allclose(ag.F(lm), ag.rate_plus.lambda_t0, rtol=1e-12)


@given(st.floats(min_value=1.8, max_value=10.0), st.floats(min_value=0.0, max_value=0.45),
       st.floats(min_value=0.0, max_value=0.04))
def test_free_energy_decreases_with_depth(lam, a, da):
    model = _LAZY
    f1 = well.psi_closed_form(model, lam, a).F_well
    f2 = well.psi_closed_form(model, lam, a + da).F_well
    assert f2 <= f1 + 1e-14
    assert f1 <= model.F(lam) + 1e-14


_LAZY = well.well_model(walks.make_law("lazy", gamma=0.4))


@given(st.floats(min_value=1.75, max_value=20.0))
def test_critical_depth_is_the_wetting_threshold(lam):
    ac = well.critical_depth(_LAZY, lam)
    assert 0 < ac < 0.5
    np.testing.assert_allclose(well.psi_closed_form(_LAZY, lam, ac).psi, 0.0, atol=1e-12)
    np.testing.assert_allclose(well.critical_lambda(_LAZY, ac), lam, rtol=1e-9)


def test_critical_depth_against_closed_form(lazy):
    for lam in (2.0, 3.0, 6.0):
        np.testing.assert_allclose(well.critical_depth(lazy, lam),
                                   oracles.closed_form_model("lazy", gamma=0.4).a_c(lam), rtol=1e-12)


def test_transition_constant_small_depth(lazy):
    # C_a / a approaches sqrt(8 c3) as a -> 0
    c = well.transition_constants(lazy, 0.0025)
    c3 = lazy.renewal.kappa ** 4 / (2 * lazy.renewal.ladder_positive ** 2)
    np.testing.assert_allclose(c.C_a / 0.0025, math.sqrt(8 * c3), rtol=0.02)
    with pytest.raises(ValueError):
        well.transition_constants(lazy, 0.7)


def test_phase_diagram_bands(ag):
    pd = well.phase_diagram(ag, [1.0, 1.1, 2.0])
    assert pd.band == ["delocalized", "cramer", "saturated_both"]
    assert pd.a_c[0] == 0.0 and pd.a_c[1] < pd.a_c[2]
    with pytest.raises(ValueError):
        well.phase_diagram(ag, [2.0, 1.0])
