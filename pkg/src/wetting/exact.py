"""Exact finite-N partition functions and laws of the square-well model.

Heights are measured from the bottom of the well, so the walk starts and
ends at depth D = floor(aN), must stay >= 0 and collects a factor lambda at
every visit of 0 (times 1..N).  With L and R the first and last contact,

    Z = Zbar + sum_{l <= r} Zcheck(l, r),
    Zcheck(l, r) = lambda * Q_-(l, D) * Z_{r-l, lambda} * Q_+(N - r, D),

where Q_+(n, x) = P(S_1 > 0, ..., S_{n-1} > 0, S_n = x) and Q_- is the same
for the reflected walk.  The factor lambda pays for the contact at l itself,
which the flat partition function Z_{r-l} does not count.  Everything is
carried in log form.
"""

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np
from scipy import special

from . import _lattice, ldp, renewal, walks, well


def _as_well(model):
    if isinstance(model, walks.IncrementLaw):
        return well.well_model(model)
    return model


def _depth(a, N):
    return int(math.floor(a * N + 1e-12))


def _logsumexp(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -math.inf
    return float(special.logsumexp(x)) if np.isfinite(x).any() else -math.inf


# ---------------------------------------------------------------- DP tables


@dataclass
class DPTable:
    """Time x height masses with one log-scale factor per time slice.

    The true value at (n, h) is ``slices[n, h] * exp(log_scale[n])``; heights
    run over 0..cap measured from the bottom of the well.
    """

    N: int
    depth: int
    cap: int
    slices: np.ndarray = field(repr=False)
    log_scale: np.ndarray = field(repr=False)

    def log_value(self, n, h):
        v = self.slices[n, h]
        return math.log(v) + self.log_scale[n] if v > 0 else -math.inf


def height_cap(law, N, depth):
    """Height cap above the rim used by every well DP."""
    return int(depth + 8.0 * law.sigma * math.sqrt(max(N, 1)) + 2 * law.k_max + 10)


def default_excursion_cap(law, n):
    """Height cap for excursions of length n."""
    return int(8.0 * law.sigma * math.sqrt(max(n, 1)) + 2 * law.k_max + 10)


def cap_tail_bound(law, N, depth, cap):
    """Chernov bound N exp(-N I_+(h/N)) on an excursion of h = cap - depth above the rim."""
    h = cap - depth
    rf = ldp.rate_function(law, +1)
    x = h / N
    if x > rf.x_bar:
        return 0.0
    return float(min(1.0, N * math.exp(-N * ldp.rate(rf, x))))


def well_dp(model, lam, a, N, keep_slices=False):
    """Monolithic forward DP over (time, height) with weight lambda at height 0.

    Returns (log Z, DPTable or None).  This is the reference against which the
    three-factor assembly of ``well_partition`` is checked.
    """
    model = _as_well(model)
    law = model.law
    D = _depth(a, N)
    cap = height_cap(law, N, D)
    pmf, kmin = law.pmf, law.kmin
    v = np.zeros(cap + 1)
    v[D] = 1.0
    log_scale = 0.0
    slices = np.zeros((N + 1, cap + 1)) if keep_slices else None
    scales = np.zeros(N + 1)
    if keep_slices:
        slices[0] = v
    for n in range(1, N + 1):
        new = np.convolve(v, pmf)
        v = new[-kmin: -kmin + cap + 1].copy()
        v[0] *= lam
        peak = v.max()
        if peak <= 0:
            return -math.inf, None
        v /= peak
        log_scale += math.log(peak)
        scales[n] = log_scale
        if keep_slices:
            slices[n] = v
    logZ = math.log(v[D]) + log_scale if v[D] > 0 else -math.inf
    table = DPTable(N, D, cap, slices, scales) if keep_slices else None
    return logZ, table


def flat_dp_table(law, lam, N, cap=None):
    """log Z_{n,lambda} for n = 0..N of the flat model, by one forward path DP.

    Independent of the renewal route: the walk itself is propagated over
    heights 0..cap with weight lambda at 0, and Z_n is read at height 0.
    """
    if cap is None:
        cap = height_cap(law, N, 0)
    pmf, kmin = law.pmf, law.kmin
    v = np.zeros(cap + 1)
    v[0] = 1.0
    log_scale = 0.0
    out = np.full(N + 1, -math.inf)
    out[0] = 0.0
    for n in range(1, N + 1):
        new = np.convolve(v, pmf)
        v = new[-kmin: -kmin + cap + 1].copy()
        v[0] *= lam
        peak = v.max()
        v /= peak
        log_scale += math.log(peak)
        if v[0] > 0:
            out[n] = math.log(v[0]) + log_scale
    return out


# ---------------------------------------------------------------- Q tables


def log_q_table(law, x_target, n_max, sign=+1, cap=None):
    """log Q_sign(n, x) for n = 0..n_max from one constrained forward sweep.

    Q_+(n, x) = P(S_1 > 0, ..., S_n > 0, S_n = x) and Q_- is the same for -S.
    For x = 0 the constraint at time n cannot hold, so Q(n, 0) = 0 for n >= 1;
    first returns to 0 live in ``renewal.first_return_table``.
    """
    x_target = int(x_target)
    if x_target < 0 or n_max < 1:
        raise ValueError("need x_target >= 0 and n_max >= 1")
    lw = law if sign > 0 else law.reflected()
    out = np.full(n_max + 1, -math.inf)
    if x_target == 0:
        out[0] = 0.0
        return out
    if cap is None:
        cap = height_cap(law, n_max, x_target)
    return _lattice.positive_sweep(lw, n_max, start=0, read=(x_target,), cap=cap)[:, 0]


def q_table(law, x_target, n_max, sign=+1, cap=None):
    """Q_sign(n, x) for n = 0..n_max (may underflow to 0; see ``log_q_table``)."""
    return np.exp(log_q_table(law, x_target, n_max, sign, cap))


def _first_hit_left(law, D, N, cap):
    """log P(walk from height D first touches 0 at time l), l = 0..N.

    By time reversal this is Q_-(l, D); for D = 0 it is the first-return law.
    """
    if D == 0:
        with np.errstate(divide="ignore"):
            out = np.log(renewal.ladder_atom_table(law, N))
        out[0] = -math.inf
        return out
    return log_q_table(law, D, N, sign=-1, cap=cap)


# ---------------------------------------------------------------- partition function


@dataclass
class WetDrySplit:
    """Log partition function split into no-contact and contact parts.

    ``lr`` holds log Zcheck(l, r) on the block l0 <= l, r0 <= r (or None);
    entries outside the wedge l <= r are -inf.
    """

    N: int
    depth: int
    lam: float
    a: float
    log_Z_bar: float
    log_Z_check: float
    log_Z: float
    l0: int
    r_hi: int
    lr: Optional[np.ndarray] = field(default=None, repr=False)
    note: str = ""
    cap: int = 0
    cap_tail_bound: float = 0.0

    @property
    def Z_bar(self):
        return math.exp(self.log_Z_bar)

    @property
    def Z_check(self):
        return math.exp(self.log_Z_check)

    @property
    def wet_to_dry(self):
        """Zcheck / Zbar."""
        return math.exp(self.log_Z_check - self.log_Z_bar)


def _feasible_range(law, D, N):
    """Smallest l and largest r allowed by the maximal step sizes."""
    kd, ku = -law.kmin, law.kmax
    l0 = max(1, -(-D // kd)) if D > 0 else 1
    r_hi = N - (-(-D // ku) if D > 0 else 0)
    return l0, r_hi


def well_partition(model, lam, a, N, keep_lr=False):
    """(log Z_{N,lambda}^a, WetDrySplit) by the three-factor assembly."""
    model = _as_well(model)
    if N < 2 or lam <= 0 or a < 0:
        raise ValueError("need N >= 2, lambda > 0, a >= 0")
    law = model.law
    D = _depth(a, N)
    cap = height_cap(law, N, D)
    tail = cap_tail_bound(law, N, D, cap)
    if D > 0:
        log_bar = float(_lattice.positive_sweep(law, N, start=D, read=(D,), cap=cap)[N, 0])
    else:
        log_bar = -math.inf
    l0, r_hi = _feasible_range(law, D, N)
    note = ""
    if l0 > r_hi:
        note = "depth beyond reach: no contact is possible"
        return log_bar, WetDrySplit(N, D, lam, a, log_bar, -math.inf, log_bar, l0, r_hi,
                                    None, note, cap, tail)
    lqm = _first_hit_left(law, D, N, cap)
    if D > 0:
        lqp = log_q_table(law, D, N, sign=+1, cap=cap)
    else:
        lqp = np.full(N + 1, -math.inf)
        lqp[0] = 0.0
    lz = renewal.flat_partition_table(model.renewal, lam, N)
    loglam = math.log(lam)
    ls = np.arange(l0, r_hi + 1)
    rs = np.arange(l0, r_hi + 1)
    block = np.full((len(ls), len(rs)), -math.inf) if keep_lr else None
    row_tot = np.full(len(ls), -math.inf)
    for i, l in enumerate(ls):
        r = rs[i:]
        vals = loglam + lqm[l] + lz[r - l] + lqp[N - r]
        row_tot[i] = _logsumexp(vals)
        if keep_lr:
            block[i, i:] = vals
    log_check = _logsumexp(row_tot)
    log_Z = float(np.logaddexp(log_bar, log_check))
    if math.isinf(log_check):
        note = "no contact configuration has positive weight"
    return log_Z, WetDrySplit(N, D, lam, a, log_bar, log_check, log_Z, l0, r_hi, block, note,
                              cap, tail)


# ---------------------------------------------------------------- survival constants


def survival_probability(law, x, sign=+1, tol=1e-8, m_start=64, m_limit=1 << 16):
    """p_x = P_{t_x}(S_i > 0 for all i >= 1) under the tilt with mean x.

    P_t(S_1 > 0, ..., S_M > 0) is computed exactly for M = m_start, 2 m_start, ...
    until two successive values differ by less than ``tol``.  ``sign = -1``
    works with the reflected law, as needed for the left ramp.
    """
    lw = law if sign > 0 else law.reflected()
    rf = ldp.rate_function(lw, +1)
    if not 0 < x < rf.rho:
        raise ValueError("x must lie in (0, rho)")
    t, _ = ldp.rate_derivatives(rf, x)
    tl = walks.tilt(lw, t)
    pmf, kmin = tl.pmf, tl.kmin
    v = np.zeros(1)
    v[0] = 1.0
    offset = 0  # v[i] is the mass at height offset + i
    prev = None
    M, done = 0, m_start
    while True:
        while M < done:
            new = np.convolve(v, pmf)
            offset += kmin
            cut = max(0, 1 - offset)
            new = new[cut:]
            offset += cut
            v = new
            M += 1
        total = float(v.sum())
        if prev is not None and abs(prev - total) < tol:
            return total
        if done >= m_limit:
            return total
        prev = total
        done *= 2


def skip_free_survival(law, x, sign=+1):
    """Exact p_x = x for laws with steps in {-1, 0, 1}: the ruin formula p - q."""
    lw = law if sign > 0 else law.reflected()
    if lw.kmin < -1 or lw.kmax > 1:
        raise ValueError("law is not skip-free")
    return float(x)


# ---------------------------------------------------------------- Gaussian constants


@dataclass
class GaussianConstants:
    lam: float
    a: float
    u_star: float
    v_star: float
    sigma1: float
    sigma2: float
    sigma3: float
    c0_well: float
    c0_stated: float
    c1_well: float
    c1_stated: float
    m_lambda: float
    sigma_lambda2: float
    p_minus: float
    p_plus: float
    F_well: float

    @property
    def covariance(self):
        """Covariance matrix of the limit (Z1, Z2, Z3)."""
        s1, s2, s3, m = self.sigma1 ** 2, self.sigma2 ** 2, self.sigma3 ** 2, self.m_lambda
        return np.array([
            [s1, 0.0, -s1 / m],
            [0.0, s2, s2 / m],
            [-s1 / m, s2 / m, (s1 + s2) / m ** 2 + s3],
        ])


def gaussian_constants(model, lam, a):
    """Fluctuation and prefactor constants of the wet phase inside Cramer's window.

    sigma1^2 = u*^3 / (a^2 I_-''(a/u*)) and similarly sigma2.  The contact
    count given the wet stretch has variance (v*-u*) N Var(tau)/m^3, so
    sigma3 = sqrt(v*-u*) sqrt(Var(tau)/m) / m.  c0_well = I_-'(a/u*) + I_+'(a/vbar*)
    is the derivative of the ramp cost in the depth; c0_stated is
    I_-(a/u*) + I_+(a/vbar*).  c1_well = (lambda/m) p_- p_+ u* vbar* / a^2 and
    c1_stated = (1/m) a^2 u* vbar* p_- p_+.
    """
    model = _as_well(model)
    if not a > 0:
        raise ValueError("need a > 0")
    if not lam < min(model.lambda_minus, model.lambda_plus):
        raise ValueError("lambda outside Cramer's window: a ramp is saturated")
    if lam < well.critical_lambda(model, a) * (1.0 - 1e-12):
        raise ValueError("lambda below lambda_c(a): dry phase")
    sol = well.psi_closed_form(model, lam, a)
    if sol.u_star is None or sol.v_star is None:
        raise ValueError("maximizer is not unique")
    u, v = sol.u_star, sol.v_star
    vb = 1.0 - v
    rm, rp = model.rate_minus, model.rate_plus
    xm, xp = a / u, a / vb
    Im1, Im2 = ldp.rate_derivatives(rm, xm)
    Ip1, Ip2 = ldp.rate_derivatives(rp, xp)
    s1 = math.sqrt(u ** 3 / (a * a * Im2))
    s2 = math.sqrt(vb ** 3 / (a * a * Ip2))
    tr = renewal.tilted_renewal(model.renewal, lam, 1)
    m = tr.m_lambda
    s3 = math.sqrt(v - u) * math.sqrt(tr.sigma_lambda2 / m) / m
    law = model.law
    if law.kmin >= -1 and law.kmax <= 1:
        pm, pp = skip_free_survival(law, xm, -1), skip_free_survival(law, xp, +1)
    else:
        pm, pp = survival_probability(law, xm, -1), survival_probability(law, xp, +1)
    c0 = Im1 + Ip1
    c0s = ldp.rate(rm, xm) + ldp.rate(rp, xp)
    c1 = lam / m * pm * pp * u * vb / (a * a)
    c1s = 1.0 / m * a * a * u * vb * pm * pp
    return GaussianConstants(lam, a, u, v, s1, s2, s3, c0, c0s, c1, c1s, m, tr.sigma_lambda2,
                             pm, pp, sol.F_well)


# ---------------------------------------------------------------- joint laws


@dataclass
class LRJointLaw:
    """P(L_N = l, R_N = r) on the block l0 <= l, r <= r_hi, plus the dry atom."""

    N: int
    depth: int
    l0: int
    prob: np.ndarray = field(repr=False)
    dry: float
    split: WetDrySplit = field(repr=False)
    constants: Optional[GaussianConstants] = None

    @property
    def ls(self):
        return np.arange(self.l0, self.l0 + self.prob.shape[0])

    @property
    def rs(self):
        return np.arange(self.l0, self.l0 + self.prob.shape[1])

    @property
    def total(self):
        return float(self.prob.sum()) + self.dry

    def marginal_L(self):
        return self.prob.sum(axis=1)

    def marginal_R(self):
        return self.prob.sum(axis=0)

    def wet_mean(self):
        """(E[L | wet], E[R | wet])."""
        w = self.prob.sum()
        return (float(np.dot(self.ls, self.marginal_L()) / w),
                float(np.dot(self.rs, self.marginal_R()) / w))

    def gaussian_discrepancy(self, width=3.0):
        """sup over the +-width sigma window of |2 pi N s1 s2 P(l, r) - Gaussian|.

        Returns (sup, scaled table, Gaussian table) restricted to the window.
        """
        c = self.constants
        if c is None:
            raise ValueError("no Gaussian constants (outside Cramer's window)")
        N = self.N
        sq = math.sqrt(N)
        li = np.nonzero(np.abs(self.ls - c.u_star * N) <= width * c.sigma1 * sq)[0]
        ri = np.nonzero(np.abs(self.rs - c.v_star * N) <= width * c.sigma2 * sq)[0]
        P = self.prob[np.ix_(li, ri)]
        zl = (self.ls[li] - c.u_star * N) / (c.sigma1 * sq)
        zr = (self.rs[ri] - c.v_star * N) / (c.sigma2 * sq)
        G = np.exp(-0.5 * zl[:, None] ** 2 - 0.5 * zr[None, :] ** 2)
        S = 2.0 * math.pi * N * c.sigma1 * c.sigma2 * P
        return float(np.max(np.abs(S - G))), S, G


def lr_joint_law(model, lam, a, N, constants=True):
    """Exact law of (L_N, R_N) with the no-contact atom."""
    model = _as_well(model)
    logZ, split = well_partition(model, lam, a, N, keep_lr=True)
    if split.lr is None:
        prob = np.zeros((0, 0))
    else:
        prob = np.exp(split.lr - logZ)
    dry = math.exp(split.log_Z_bar - logZ) if np.isfinite(split.log_Z_bar) else 0.0
    consts = None
    if constants and a > 0:
        try:
            consts = gaussian_constants(model, lam, a)
        except ValueError:
            consts = None
    return LRJointLaw(N, split.depth, split.l0, prob, dry, split, consts)


@dataclass
class LRHJointLaw:
    """Joint law of (L_N, R_N, H_N) as P(l, r) times the exact law of H given r - l.

    Given a first contact at l and a last one at r, H_N = 1 + H_{r-l} where
    H_n counts contacts in (0, n] under the flat model of length n.
    """

    lr: LRJointLaw
    cond: np.ndarray = field(repr=False)  # cond[n, j] = P_{n,lambda}(H_n = j)
    m_lambda: float = math.nan

    def prob(self, l, r, k):
        i, j = l - self.lr.l0, r - self.lr.l0
        if not (0 <= i < self.lr.prob.shape[0] and 0 <= j < self.lr.prob.shape[1]) or k < 1:
            return 0.0
        n = r - l
        if n < 0 or k - 1 > n:
            return 0.0
        return float(self.lr.prob[i, j] * self.cond[n, k - 1])

    def _cond_moments(self):
        j = np.arange(self.cond.shape[1])
        m1 = self.cond @ j
        m2 = self.cond @ (j * j)
        return 1.0 + m1, 1.0 + 2.0 * m1 + m2

    def wet_moments(self):
        """Means and covariance of (L, R, H) conditionally on at least one contact."""
        P = self.lr.prob
        w = P.sum()
        ls = self.lr.ls.astype(float)[:, None]
        rs = self.lr.rs.astype(float)[None, :]
        n = np.clip(rs - ls, 0, None).astype(int)
        h1, h2 = self._cond_moments()
        H1 = h1[n]
        H2 = h2[n]
        EL = float((P * ls).sum() / w)
        ER = float((P * rs).sum() / w)
        EH = float((P * H1).sum() / w)
        cov = np.empty((3, 3))
        cov[0, 0] = (P * ls * ls).sum() / w - EL * EL
        cov[1, 1] = (P * rs * rs).sum() / w - ER * ER
        cov[2, 2] = (P * H2).sum() / w - EH * EH
        cov[0, 1] = cov[1, 0] = (P * ls * rs).sum() / w - EL * ER
        cov[0, 2] = cov[2, 0] = (P * ls * H1).sum() / w - EL * EH
        cov[1, 2] = cov[2, 1] = (P * rs * H1).sum() / w - ER * EH
        return np.array([EL, ER, EH]), cov

    def marginal_H(self):
        P = self.lr.prob
        out = np.zeros(self.cond.shape[1] + 1)
        ls, rs = self.lr.ls, self.lr.rs
        for i, l in enumerate(ls):
            for jj in range(i, len(rs)):
                p = P[i, jj]
                if p == 0:
                    continue
                n = rs[jj] - l
                out[1: n + 2] += p * self.cond[n, : n + 1]
        return out


def lrh_joint_law(model, lam, a, N):
    """Exact joint law of (L_N, R_N, H_N)."""
    model = _as_well(model)
    if lam <= model.lambda_c:
        raise ValueError("lambda must exceed lambda_c")
    lr = lr_joint_law(model, lam, a, N)
    tr = renewal.tilted_renewal(model.renewal, lam, N)
    T = renewal.contact_table(tr.Ktilde, N)
    mass = T.sum(axis=0)
    cond = (T / mass[None, :]).T  # cond[n, k]
    return LRHJointLaw(lr, cond, tr.m_lambda)


# ---------------------------------------------------------------- prefactor


@dataclass
class PrefactorReport:
    N: np.ndarray
    frac: np.ndarray
    log_Z: np.ndarray
    ratio: np.ndarray
    ratio_stated: np.ndarray
    constants: GaussianConstants
    stabilization: float
    relative_error: float

    def rows(self):
        return list(zip(self.N.tolist(), self.frac.tolist(), self.ratio.tolist(),
                        self.ratio_stated.tolist()))


def partition_prefactor(model, lam, a, N_grid):
    """Z e^{-N F(lambda,a) - c0 {aN}} along ``N_grid`` against the predicted c1.

    ``ratio`` uses c0_well and ``ratio_stated`` uses c0_stated.  The
    stabilization figure is max/min - 1 of ``ratio`` over the last decade of
    the grid (N >= N_max / 2 when the grid spans less than a decade).
    """
    model = _as_well(model)
    N_grid = np.asarray(sorted(int(n) for n in N_grid))
    c = gaussian_constants(model, lam, a)
    logs, fr = [], []
    for N in N_grid:
        lz, _ = well_partition(model, lam, a, int(N))
        logs.append(lz)
        fr.append(a * N - _depth(a, N))
    logs, fr = np.array(logs), np.array(fr)
    base = logs - N_grid * c.F_well
    ratio = np.exp(base - c.c0_well * fr)
    ratio_st = np.exp(base - c.c0_stated * fr)
    top = N_grid[-1]
    last = N_grid >= max(top / 10.0, N_grid[0]) if top / N_grid[0] >= 10 else N_grid >= top / 2.0
    stab = float(ratio[last].max() / ratio[last].min() - 1.0)
    err = float(abs(ratio[-1] / c.c1_well - 1.0))
    return PrefactorReport(N_grid, fr, logs, ratio, ratio_st, c, stab, err)
