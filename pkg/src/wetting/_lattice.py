"""Log-scaled forward sweeps of a lattice walk killed on the non-positive half-line."""

import math

import numpy as np


def default_cap(law, n_steps, start=0):
    """Height cap beyond which paths of length n_steps carry negligible mass."""
    return int(start + 8.0 * law.sigma * math.sqrt(max(n_steps, 1)) + 2 * law.k_max + 10)


def positive_sweep(law, n_steps, start=0, read=(0,), cap=None, read_all=False):
    """Walk from ``start`` >= 0 constrained to stay > 0 at times 1..n-1.

    At each time n = 1..n_steps the (unconstrained-at-time-n) mass at the
    heights in ``read`` is recorded before heights <= 0 are killed.  Returns
    ``log_reads`` of shape (n_steps + 1, len(read)) with row 0 holding the
    initial condition.  With ``read_all`` the full log-slices at heights
    0..cap are returned as a list as well.
    """
    read = np.asarray(read, dtype=int)
    if cap is None:
        cap = default_cap(law, n_steps, start)
    cap = max(cap, int(read.max()) + 1, start + 1)
    pmf, kmin = law.pmf, law.kmin
    v = np.zeros(cap + 1)
    v[start] = 1.0
    log_reads = np.full((n_steps + 1, len(read)), -math.inf)
    log_reads[0, read == start] = 0.0
    slices = [] if read_all else None
    log_scale = 0.0
    for n in range(1, n_steps + 1):
        new = np.convolve(v, pmf)
        # new[j] is the mass at height j + kmin
        vals = new[read - kmin]
        with np.errstate(divide="ignore"):
            log_reads[n] = np.log(vals) + log_scale
        v = new[-kmin: -kmin + cap + 1].copy()
        if read_all:
            with np.errstate(divide="ignore"):
                slices.append(np.log(v) + log_scale)
        v[0] = 0.0
        peak = v.max()
        if peak <= 0.0:
            log_reads[n + 1:] = -math.inf
            break
        v /= peak
        log_scale += math.log(peak)
    if read_all:
        return log_reads, slices
    return log_reads


def negative_sweep_return(law, n_steps, cap=None):
    """log P(S_1 < 0, ..., S_{n-1} < 0, S_n = 0) for n = 0..n_steps."""
    return positive_sweep(law.reflected(), n_steps, start=0, read=(0,), cap=cap)[:, 0]
