import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wetting import oracles, renewal, walks

from _enumerate import first_return, flat_partition


@pytest.fixture(scope="module")
def lazy_model():
    return renewal.renewal_model(walks.make_law("lazy", gamma=0.4), n_max=2000)


def test_first_return_table_matches_enumeration():
    law = walks.make_law("custom", table={-2: 0.1, -1: 0.2, 0: 0.3, 1: 0.4})
    f = renewal.first_return_table(law, 8)
    brute = [first_return(law, n) for n in range(1, 9)]
    np.testing.assert_allclose(f[1:], brute, rtol=1e-13, atol=1e-300)
    # ladder atom equals f_n by time reversal
    np.testing.assert_allclose(renewal.ladder_atom_table(law, 8), f, rtol=1e-12, atol=1e-300)


def test_kappa_and_critical_point(lazy_model):
    g = 0.4
    np.testing.assert_allclose(lazy_model.kappa, 1 - g * 1.0, rtol=1e-14)  # 1 - 2g * (1/2) for the lazy walk
    np.testing.assert_allclose(lazy_model.lambda_c, 1 / (1 - g), rtol=1e-14)
    assert lazy_model.kappa_table < lazy_model.kappa
    assert lazy_model.kappa - lazy_model.kappa_table < lazy_model.kappa_tail_bound


def test_generating_function_against_table(lazy_model):
    theta = 0.05
    f = lazy_model.fplus0
    n = np.arange(len(f))
    direct = float(np.dot(f, np.exp(-theta * n)))
    np.testing.assert_allclose(lazy_model.gen(theta), direct, rtol=1e-12)
    h = 1e-6
    fd = (lazy_model.gen(theta + h) - lazy_model.gen(theta - h)) / (2 * h)
    np.testing.assert_allclose(lazy_model.gen_prime(theta), fd, rtol=1e-7)


@given(st.floats(min_value=1.7, max_value=40.0))
def test_free_energy_solves_its_equation(lam):
    model = renewal.renewal_model(walks.make_law("lazy", gamma=0.4), n_max=200)
    F = renewal.free_energy(model, lam)
    assert F > 0
    np.testing.assert_allclose(model.gen(F), 1 / lam, rtol=1e-13)


def test_free_energy_is_zero_below_lambda_c(lazy_model):
    assert renewal.free_energy(lazy_model, 1.0) == 0.0
    assert renewal.free_energy(lazy_model, lazy_model.lambda_c) == 0.0
    with pytest.raises(ValueError):
        renewal.free_energy(lazy_model, -1.0)


def test_free_energy_derivative(lazy_model):
    lam, h = 3.0, 1e-5
    fd = (renewal.free_energy(lazy_model, lam + h) - renewal.free_energy(lazy_model, lam - h)) / (2 * h)
    np.testing.assert_allclose(renewal.free_energy_derivative(lazy_model, lam), fd, rtol=1e-8)


@pytest.mark.parametrize("N", [1, 4, 7])
def test_flat_partition_matches_enumeration(N):
    law = walks.make_law("lazy", gamma=0.3)
    model = renewal.renewal_model(law, n_max=50)
    np.testing.assert_allclose(renewal.flat_partition(model, 2.5, N), math.log(flat_partition(law, 2.5, N)), atol=1e-14,
                               rtol=1e-12)


def test_tilted_renewal_is_a_probability(lazy_model):
    tr = renewal.tilted_renewal(lazy_model, 3.0, 400)
    np.testing.assert_allclose(tr.Ktilde.sum(), 1.0, atol=1e-15)
    n = np.arange(len(tr.Ktilde))
    np.testing.assert_allclose(np.dot(n, tr.Ktilde), tr.m_lambda, rtol=1e-12)
    # renewal theorem: u_n -> 1/m
    np.testing.assert_allclose(tr.mass[-1], 1 / tr.m_lambda, rtol=1e-12)
    with pytest.raises(ValueError):
        renewal.tilted_renewal(lazy_model, 1.0, 10)


def test_contact_number_law(lazy_model):
    cl = renewal.contact_number_law(lazy_model, 3.0, 400)
    np.testing.assert_allclose(cl.prob.sum(), 1.0, rtol=1e-12)
    np.testing.assert_allclose(cl.mean / 400, 1 / cl.m_lambda, rtol=2e-2)
    assert cl.scaled_discrepancy() < 0.05


def test_richardson_is_exact_on_polynomials():
    u = np.array([0.4, 0.2, 0.1, 0.05])
    vals = 1.5 + 2 * u - 3 * u ** 2 + u ** 3
    np.testing.assert_allclose(renewal.richardson(u, vals), 1.5, rtol=1e-12)


def test_critical_constant_and_closed_form_limit(lazy_model):
    cf = oracles.closed_form_model("lazy", gamma=0.4)
    rep = renewal.critical_asymptotics(lazy_model, [1e-1, 5e-2, 2e-2, 1e-2, 5e-3], free_energy_fn=cf.F)
    np.testing.assert_allclose(rep.predicted, (1 - 0.4) ** 4 / 0.4, rtol=1e-12)
    assert rep.relative_error < 1e-6
    assert rep.exercise_constant == pytest.approx(0.4 * (3 - 1.6))
