import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wetting import exact, renewal, walks, well

from _enumerate import flat_partition, paths, well_partition as brute_well


@pytest.fixture(scope="module")
def lazy():
    return well.well_model(walks.make_law("lazy", gamma=0.4))


@pytest.mark.parametrize("N,a", [(6, 0.0), (8, 0.25), (9, 0.34), (10, 0.2)])
def test_well_dp_matches_enumeration(N, a):
    law = walks.make_law("lazy", gamma=0.3)
    D = math.floor(a * N)
    logZ, _ = exact.well_dp(law, 2.5, a, N)
    np.testing.assert_allclose(logZ, math.log(brute_well(law, 2.5, N, D)), rtol=1e-12, atol=1e-14)


def test_three_factor_matches_monolithic_dp():
    model = well.well_model(walks.make_law("custom", table={-2: 0.1, -1: 0.2, 0: 0.3, 1: 0.4}))
    for N, a in [(40, 0.1), (60, 0.2), (7, 0.3)]:
        mono, _ = exact.well_dp(model, 3.0, a, N)
        split, info = exact.well_partition(model, 3.0, a, N)
        np.testing.assert_allclose(split, mono, rtol=1e-12)
        np.testing.assert_allclose(np.logaddexp(info.log_Z_bar, info.log_Z_check), split, rtol=1e-12)


def test_zero_depth_is_the_flat_model(lazy):
    z, _ = exact.well_partition(lazy, 3.0, 0.0, 200)
    np.testing.assert_allclose(z, renewal.flat_partition(lazy.renewal, 3.0, 200), rtol=1e-13)


def test_flat_dp_table_matches_enumeration():
    law = walks.make_law("lazy", gamma=0.25)
    tab = exact.flat_dp_table(law, 2.0, 8)
    for N in (1, 5, 8):
        np.testing.assert_allclose(tab[N], math.log(flat_partition(law, 2.0, N)), rtol=1e-12, atol=1e-14)


def test_q_table_matches_enumeration():
    law = walks.make_law("custom", table={-1: 0.4, 0: 0.3, 1: 0.2, 2: 0.1})
    q = exact.q_table(law, 2, 7)
    for n in range(1, 8):
        brute = sum(p for h, p in paths(law, n) if h[-1] == 2 and np.all(h[1:] > 0))
        np.testing.assert_allclose(q[n], brute, rtol=1e-12, atol=1e-300)
    np.testing.assert_array_equal(exact.q_table(law, 0, 5)[1:], 0.0)


def test_q_table_below_chernov_envelope():
    law = walks.make_law("geometric", gamma=0.4)
    from wetting import ldp
    rf = ldp.rate_function(law, +1)
    n = np.arange(1, 301)
    lq = exact.log_q_table(law, 60, 300)[1:]
    bound = -n * np.array([ldp.rate(rf, 60 / k) for k in n])
    assert np.all(lq <= bound + 1e-9)


@given(st.floats(min_value=0.05, max_value=0.95))
def test_skip_free_survival_is_linear(x):
    law = walks.make_law("lazy", gamma=0.4)
    assert exact.skip_free_survival(law, x) == x


def test_survival_probability_lazy_oracle():
    law = walks.make_law("lazy", gamma=0.4)
    np.testing.assert_allclose(exact.survival_probability(law, 0.5), 0.5, atol=1e-8)
    np.testing.assert_allclose(exact.survival_probability(law, 0.2, sign=-1), 0.2, atol=1e-8)
    with pytest.raises(ValueError):
        exact.skip_free_survival(walks.make_law("geometric", gamma=0.4), 0.5)


def test_lr_joint_law_normalization(lazy):
    law = exact.lr_joint_law(lazy, 3.0, 0.05, 400)
    np.testing.assert_allclose(law.total, 1.0, rtol=1e-12)
    np.testing.assert_allclose(law.marginal_L().sum() + law.dry, 1.0, rtol=1e-12)
    means = law.wet_mean()
    np.testing.assert_allclose(np.array(means) / 400, [0.1, 0.9], atol=0.01)


def test_lrh_moments_against_prediction(lazy):
    lrh = exact.lrh_joint_law(lazy, 3.0, 0.05, 1000)
    mu, cov = lrh.wet_moments()
    c = lrh.lr.constants
    np.testing.assert_allclose(mu[:2] / 1000, [c.u_star, c.v_star], atol=2e-3)
    np.testing.assert_allclose(mu[2] / 1000, (c.v_star - c.u_star) / c.m_lambda, rtol=5e-3)
    np.testing.assert_allclose(cov / 1000, c.covariance, rtol=0.1, atol=0.02)
    np.testing.assert_allclose(lrh.marginal_H().sum(), 1.0 - lrh.lr.dry, rtol=1e-10)


def test_gaussian_constants_benchmark(lazy):
    c = exact.gaussian_constants(lazy, 3.0, 0.05)
    np.testing.assert_allclose(c.sigma1 ** 2, 0.7 / 3, rtol=1e-10)
    np.testing.assert_allclose(c.c0_well, 2 * math.log(2), rtol=1e-12)
    np.testing.assert_allclose(c.c1_well, 1.5, rtol=1e-12)
    with pytest.raises(ValueError):
        exact.gaussian_constants(lazy, 3.0, 0.2)


def test_dry_phase_ratio(lazy):
    _, split = exact.well_partition(lazy, 3.0, 0.2, 300)
    assert split.wet_to_dry < 1e-3
    assert split.cap_tail_bound < 1e-12
