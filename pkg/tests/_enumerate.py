"""Brute-force path enumeration used as an independent oracle on tiny systems."""

import itertools

import numpy as np


def paths(law, n, start=0):
    """Yield (heights, probability) for every n-step path of a bounded law."""
    steps = law.support
    probs = law.pmf
    keep = probs > 0
    steps, probs = steps[keep], probs[keep]
    for idx in itertools.product(range(len(steps)), repeat=n):
        inc = steps[list(idx)]
        h = start + np.concatenate(([0], np.cumsum(inc)))
        yield h, float(np.prod(probs[list(idx)]))


def first_return(law, n):
    """P(S_1 > 0, ..., S_{n-1} > 0, S_n = 0)."""
    return sum(p for h, p in paths(law, n) if h[-1] == 0 and np.all(h[1:-1] > 0))


def well_partition(law, lam, N, depth):
    """Sum over paths 0 -> 0 staying >= -depth of lam^(#visits to -depth in 1..N)."""
    z = 0.0
    for h, p in paths(law, N):
        if h[-1] != 0 or h.min() < -depth:
            continue
        z += p * lam ** int(np.count_nonzero(h[1:] == -depth))
    return z


def flat_partition(law, lam, N):
    return well_partition(law, lam, N, 0)
