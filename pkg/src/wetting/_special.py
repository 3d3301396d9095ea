"""Polylogarithm on the positive real axis below 1, vectorized over the argument.

``polylog_exp(s, mu)`` returns Li_s(e^{-mu}) = sum_{j>=1} j^{-s} e^{-mu j} for
real ``s`` and ``mu >= 0``.  Large ``mu`` uses the defining series directly;
small ``mu`` uses the expansion of Li_s around z = 1 in powers of log z, which
converges for |mu| < 2 pi.
"""

import functools
import math

import numpy as np
from scipy import special

_SERIES_CUTOFF = 1.5
_SERIES_TERMS = 40


def _direct(s, mu):
    jmax = int(math.ceil(40.0 / float(np.min(mu)))) + 1
    j = np.arange(1, jmax + 1, dtype=float)
    terms = np.exp(-np.outer(mu, j) - s * np.log(j)[None, :])
    return terms.sum(axis=1)


@functools.lru_cache(maxsize=64)
def _series_coefficients(s):
    """Coefficients c_k of sum_k c_k (-mu)^k and the integer-order flag."""
    is_int = float(s).is_integer() and s >= 1
    n = int(s) if is_int else None
    coef = np.empty(_SERIES_TERMS)
    fact = 1.0
    for k in range(_SERIES_TERMS):
        if k > 0:
            fact *= k
        if is_int and k == n - 1:
            coef[k] = sum(1.0 / i for i in range(1, n)) / fact
        else:
            coef[k] = special.zeta(s - k) / fact
    return coef, n


def _near_one(s, mu):
    coef, n = _series_coefficients(float(s))
    x = -mu
    out = np.full_like(mu, coef[-1])
    for c in coef[-2::-1]:
        out = out * x + c
    if n is not None:
        out -= (-mu) ** (n - 1) / math.factorial(n - 1) * np.log(mu)
    else:
        out += special.gamma(1.0 - s) * mu ** (s - 1.0)
    return out


def polylog_exp(s, mu):
    """Li_s(exp(-mu)) for real s and mu >= 0 (array or scalar mu)."""
    scalar = np.ndim(mu) == 0
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if np.any(mu < 0):
        raise ValueError("mu must be non-negative")
    out = np.empty_like(mu)
    zero = mu == 0
    if np.any(zero):
        out[zero] = special.zeta(s) if s > 1 else math.inf
    big = mu >= _SERIES_CUTOFF
    if np.any(big):
        out[big] = _direct(s, mu[big])
    small = ~zero & ~big
    if np.any(small):
        out[small] = _near_one(s, mu[small])
    return float(out[0]) if scalar else out


def shifted_zeta_series(s, mu):
    """sum_{x>=0} (1+x)^{-s} e^{-mu x}, i.e. e^{mu} Li_s(e^{-mu})."""
    return polylog_exp(s, mu) * np.exp(mu)
