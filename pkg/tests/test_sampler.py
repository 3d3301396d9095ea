from collections import Counter

import numpy as np
import pytest
from scipy import stats

from wetting import exact, renewal, sampler, walks, well

from _enumerate import paths


@pytest.fixture(scope="module")
def lazy():
    return well.well_model(walks.make_law("lazy", gamma=0.4))


def _exact_path_law(law, lam, N, D):
    out = {}
    for h, p in paths(law, N):
        if h[-1] != 0 or h.min() < -D:
            continue
        out[tuple(int(x) for x in h)] = p * lam ** int(np.count_nonzero(h[1:] == -D))
    z = sum(out.values())
    return {k: v / z for k, v in out.items()}


def _chisquare_pvalue(draws, law):
    keys = list(law)
    counts = Counter(draws)
    assert set(counts) <= set(keys)
    obs = np.array([counts.get(k, 0) for k in keys], dtype=float)
    exp = np.array([law[k] for k in keys]) * len(draws)
    keep = exp >= 5
    obs = np.append(obs[keep], obs[~keep].sum())
    exp = np.append(exp[keep], exp[~keep].sum())
    if exp[-1] == 0:
        obs, exp = obs[:-1], exp[:-1]
    return stats.chisquare(obs, exp).pvalue


@pytest.mark.parametrize("N,a", [(6, 1 / 3), (7, 0.0)])
def test_well_paths_follow_the_exact_law(N, a):
    law = walks.make_law("lazy", gamma=0.3)
    model = well.well_model(law, n_max=50)
    ws = sampler.WellSampler(model, 2.0, a, N)
    draws = [tuple(int(x) for x in p.heights) for p in ws.sample_paths(6000, seed=11)]
    exact_law = _exact_path_law(law, 2.0, N, ws.depth)
    assert _chisquare_pvalue(draws, exact_law) > 1e-4


def test_paths_are_reproducible_and_stream_stable(lazy):
    ws = sampler.WellSampler(lazy, 3.0, 0.05, 200)
    a = ws.sample_paths(5, seed=7)
    b = ws.sample_paths(8, seed=7)
    for p, q in zip(a, b):
        np.testing.assert_array_equal(p.heights, q.heights)
    c = ws.sample_paths(5, seed=8)
    assert any(not np.array_equal(p.heights, q.heights) for p, q in zip(a, c))


def test_path_invariants(lazy):
    ws = sampler.WellSampler(lazy, 3.0, 0.1, 300)
    for p in ws.sample_paths(10, seed=1):
        assert p.heights[0] == 0 and p.heights[-1] == 0
        assert p.heights.min() >= -p.depth
        assert np.all(np.abs(np.diff(p.heights)) <= 1)
        np.testing.assert_array_equal(np.nonzero(p.heights == -p.depth)[0], p.contacts)
        assert p.H == len(p.contacts) and p.L <= p.R


def test_excursions_are_positive_bridges():
    law = walks.make_law("geometric", gamma=0.4)
    rng = sampler.make_rng(3)
    ex = sampler.sample_excursion(law, 30, rng, size=200)
    assert ex.shape == (200, 31)
    assert np.all(ex[:, 0] == 0) and np.all(ex[:, -1] == 0)
    assert np.all(ex[:, 1:-1] > 0)


def test_excursion_law_small_n():
    law = walks.make_law("lazy", gamma=0.3)
    n = 5
    rng = sampler.make_rng(5)
    draws = [tuple(int(x) for x in p) for p in sampler.sample_excursion(law, n, rng, size=8000)]
    target = {}
    for h, p in paths(law, n):
        if h[-1] == 0 and np.all(h[1:-1] > 0):
            target[tuple(int(x) for x in h)] = p
    z = sum(target.values())
    target = {k: v / z for k, v in target.items()}
    assert _chisquare_pvalue(draws, target) > 1e-4


def test_contacts_follow_the_flat_contact_law():
    model = renewal.renewal_model(walks.make_law("lazy", gamma=0.4), n_max=100)
    tr = renewal.tilted_renewal(model, 3.0, 60)
    rng = sampler.make_rng(9)
    counts = np.array([len(sampler.sample_contacts(tr, 60, rng)) for _ in range(4000)])
    cl = renewal.contact_number_law(model, 3.0, 60)
    target = {int(k): p for k, p in zip(cl.k, cl.prob) if p > 0}
    assert _chisquare_pvalue(list(counts), target) > 1e-4


def test_observables_summary(lazy):
    ws = sampler.WellSampler(lazy, 3.0, 0.05, 500)
    wet, L, R, H = ws.sample_observables(20000, seed=4)
    s = sampler.summarize(wet, L, R, H, 500)
    mu, _ = exact.lrh_joint_law(lazy, 3.0, 0.05, 500).wet_moments()
    for i, k in enumerate("LRH"):
        assert abs(s[f"mean_{k}"] - mu[i] / 500) < 4 * s[f"se_{k}"]
