"""Cramér rate functions I_+ and I_- of a walk increment, with their derivatives.

``I_+(x) = sup_{t>=0} (tx - Lambda_+(t))`` and similarly for ``I_-``.  The
four regimes of the saturation table are tagged on the ``RateFunction``:

* ``unbounded_steep``: t0 = inf and x_bar = inf
* ``finite_radius_steep``: t0 < inf and rho = inf
* ``finite_radius_affine``: t0 < inf and rho < inf, affine beyond rho
* ``bounded_support``: t0 = inf and x_bar = rho < inf, infinite beyond rho

plus ``degenerate`` when t0 = 0 (I vanishes identically).
"""

from dataclasses import dataclass
import math

import numpy as np

from . import walks

CASE_TAGS = (
    "unbounded_steep",
    "finite_radius_steep",
    "finite_radius_affine",
    "bounded_support",
    "degenerate",
)
_T_CAP = 700.0


@dataclass(frozen=True, eq=False)
class RateFunction:
    law: walks.IncrementLaw
    sign: int
    profile: walks.MgfProfile
    case_tag: str

    @property
    def t0(self):
        return self.profile.t0_plus if self.sign > 0 else self.profile.t0_minus

    @property
    def rho(self):
        return self.profile.rho_plus if self.sign > 0 else self.profile.rho_minus

    @property
    def lambda_t0(self):
        return self.profile.lambda_at_t0_plus if self.sign > 0 else self.profile.lambda_at_t0_minus

    @property
    def x_bar(self):
        return self.law.x_bar_plus if self.sign > 0 else self.law.x_bar_minus

    def lmgf(self, t):
        return walks.lmgf_derivatives(self.law, t, self.sign)

    def __call__(self, x):
        return rate(self, x)


def rate_function(law, sign=+1):
    prof = walks.mgf_profile(law)
    t0 = prof.t0_plus if sign > 0 else prof.t0_minus
    rho = prof.rho_plus if sign > 0 else prof.rho_minus
    xbar = law.x_bar_plus if sign > 0 else law.x_bar_minus
    if t0 == 0:
        tag = "degenerate"
    elif math.isinf(t0):
        tag = "unbounded_steep" if math.isinf(xbar) else "bounded_support"
    else:
        tag = "finite_radius_steep" if math.isinf(rho) else "finite_radius_affine"
    return RateFunction(law, 1 if sign > 0 else -1, prof, tag)


def rate_pair(law):
    """(I_-, I_+) as RateFunction objects."""
    return rate_function(law, -1), rate_function(law, +1)


def _invert(fun, target, hi, rel_tol=1e-14, max_iter=200):
    """Solve fun(t)[0] = target for increasing fun on [0, hi], vectorized.

    ``fun`` returns (value, derivative).  ``hi`` may be inf, in which case the
    bracket is doubled until it straddles the target.
    """
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    if math.isinf(hi):
        up = np.ones_like(target)
        for _ in range(12):
            v, _ = fun(up)
            need = v < target
            if not np.any(need) or np.all(up >= _T_CAP):
                break
            lo = np.where(need, up, lo)
            up = np.where(need, np.minimum(2.0 * up, _T_CAP), up)
    else:
        up = np.full_like(target, hi)
    t = 0.5 * (lo + up)
    for _ in range(max_iter):
        v, d = fun(t)
        low = v < target
        lo = np.where(low, t, lo)
        up = np.where(low, up, t)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = t - (v - target) / d
        ok = np.isfinite(newton) & (newton > lo) & (newton < up)
        t_new = np.where(ok, newton, 0.5 * (lo + up))
        done = np.abs(t_new - t) <= rel_tol * np.maximum(np.abs(t_new), 1e-300)
        t = t_new
        if np.all(done | (up - lo <= rel_tol * up)):
            break
    return t


def _tx(rf, x):
    """t_x = (Lambda')^{-1}(x) for 0 < x < rho, vectorized."""

    def fun(t):
        _, l1, l2 = rf.lmgf(t)
        return l1, l2

    return _invert(fun, x, rf.t0)


def _as_array(x):
    scalar = np.ndim(x) == 0
    return scalar, np.atleast_1d(np.asarray(x, dtype=float))


def rate(rf, x):
    """I(x) for x >= 0; returns inf outside the effective domain."""
    scalar, x = _as_array(x)
    if np.any(x < 0):
        raise ValueError("rate functions are defined for x >= 0")
    out = np.zeros_like(x)
    if rf.case_tag == "degenerate":
        return float(out[0]) if scalar else out
    xbar, rho, t0 = rf.x_bar, rf.rho, rf.t0
    out[x > xbar] = math.inf
    if math.isfinite(xbar):
        at = x == xbar
        edge = -xbar if rf.sign < 0 else xbar
        out[at] = -math.log(rf.law.prob(edge))
    inner = (x > 0) & (x < rho) & (x < xbar)
    if np.any(inner):
        tx = _tx(rf, x[inner])
        lam = rf.lmgf(tx)[0]
        out[inner] = x[inner] * tx - lam
    if math.isfinite(t0):
        aff = (x >= rho) & (x <= xbar) & ~(x == xbar)
        out[aff] = x[aff] * t0 - rf.lambda_t0
    return float(out[0]) if scalar else out


def rate_derivatives(rf, x):
    """(I'(x), I''(x)); left derivatives at x = x_bar (both inf there)."""
    scalar, x = _as_array(x)
    if np.any(x < 0) or np.any(x > rf.x_bar):
        raise ValueError("x outside [0, x_bar]")
    d1 = np.zeros_like(x)
    d2 = np.zeros_like(x)
    if rf.case_tag == "degenerate":
        return (float(d1[0]), float(d2[0])) if scalar else (d1, d2)
    inner = (x < rf.rho) & (x < rf.x_bar)
    if np.any(inner):
        tx = np.where(x[inner] > 0, _tx(rf, np.maximum(x[inner], 1e-300)), 0.0)
        d1[inner] = tx
        d2[inner] = 1.0 / rf.lmgf(tx)[2]
    aff = ~inner & (x < rf.x_bar)
    d1[aff] = rf.t0
    d2[aff] = 0.0
    edge = x == rf.x_bar
    d1[edge] = rf.t0 if math.isfinite(rf.t0) and rf.rho < rf.x_bar else math.inf
    d2[edge] = 0.0 if math.isfinite(rf.t0) and rf.rho < rf.x_bar else math.inf
    return (float(d1[0]), float(d2[0])) if scalar else (d1, d2)


def lambda_inverse(rf, y):
    """Left-continuous inverse of Lambda, clamped at t0."""
    scalar, y = _as_array(y)
    if np.any(y < 0):
        raise ValueError("y must be non-negative")
    out = np.zeros_like(y)
    t0 = rf.t0
    if t0 == 0:
        return float(out[0]) if scalar else out
    lam_t0 = rf.lambda_t0
    clamp = y >= lam_t0
    out[clamp] = t0
    inner = (y > 0) & ~clamp
    if np.any(inner):

        def fun(t):
            l0, l1, _ = rf.lmgf(t)
            return l0, l1

        out[inner] = _invert(fun, y[inner], t0)
    return float(out[0]) if scalar else out


def lambda_prime(rf, t):
    """Lambda'(t), with Lambda'(t0) = rho."""
    scalar, t = _as_array(t)
    out = np.asarray(rf.lmgf(t)[1], dtype=float)
    if math.isfinite(rf.t0):
        out = np.where(t >= rf.t0, rf.rho, out)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------- local LDP check


def log_walk_distribution(law, n_max):
    """log P(S_n = k) for 1 <= n <= n_max via repeated convolution.

    Returns ``(kmin, logp)`` where ``logp[n-1][i]`` is log P(S_n = n*kmin + i).
    Each slice is rescaled so that tiny large-deviation masses keep full
    relative precision.
    """
    kmin = law.kmin
    out = []
    cur = law.pmf.copy()
    log_scale = 0.0
    for n in range(1, n_max + 1):
        if n > 1:
            cur = np.convolve(cur, law.pmf)
        peak = cur.max()
        cur = cur / peak
        log_scale += math.log(peak)
        with np.errstate(divide="ignore"):
            out.append(np.log(cur) + log_scale)
    return kmin, out


@dataclass
class LocalLdpReport:
    x: float
    rate: float
    n: np.ndarray
    local_exponent: np.ndarray
    gap: np.ndarray
    chernov_log_ratio: np.ndarray
    chernov_holds: bool
    exact_edge: bool

    def rows(self):
        return list(zip(self.n.tolist(), self.local_exponent.tolist(), self.gap.tolist(),
                        self.chernov_log_ratio.tolist()))


def verify_local_ldp(law, x, n_grid, sign=+1):
    """Compare -(1/n) log P(S_n = floor(xn)) with I(x) and test Chernov's bound.

    The Chernov column is log P(S_n >= xn) + n I(x); it must be <= 0 up to
    rounding.  At x = x_bar the local exponent equals I(x_bar) exactly.
    """
    lw = law if sign > 0 else law.reflected()
    rf = rate_function(lw, +1)
    n_grid = np.asarray(sorted(set(int(n) for n in n_grid)))
    I = rate(rf, x)
    kmin, logs = log_walk_distribution(lw, int(n_grid.max()))
    loc, chern = [], []
    for n in n_grid:
        lp = logs[n - 1]
        k0 = n * kmin
        j = int(math.floor(x * n + 1e-12)) - k0
        loc.append(-lp[j] / n if 0 <= j < len(lp) else math.inf)
        jc = int(math.ceil(x * n - 1e-12)) - k0
        tail = lp[max(jc, 0):]
        tail = tail[np.isfinite(tail)]
        if len(tail) == 0:
            chern.append(-math.inf)
        else:
            m = tail.max()
            chern.append(m + math.log(np.exp(tail - m).sum()) + n * I)
    loc = np.array(loc)
    chern = np.array(chern)
    slack = 1e-12 * np.maximum(1.0, n_grid * I)
    holds = bool(np.all(chern <= slack))
    edge = bool(x == rf.x_bar and np.allclose(loc, I, rtol=1e-12, atol=0))
    return LocalLdpReport(float(x), float(I), n_grid, loc, loc - I, chern, holds, edge)
