"""Integer-valued increment laws, their log-moment generating functions and tilts.

Built-in families are the symmetric lazy walk, the symmetric geometric walk and
the "almost geometric" law with pmf proportional to (1+|x|)^{-theta} e^{-|x|}.
Arbitrary finite tables are accepted as custom laws.  Unbounded laws are
truncated once their two-sided tail mass drops below ``TAIL_TARGET``.

Extended reals are IEEE floats: ``math.inf`` is an exact tag, never a large
sentinel, so comparisons against it are exact.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from ._special import shifted_zeta_series

TAIL_TARGET = 1e-14
MEAN_TOL = 1e-12
FAMILIES = ("lazy", "geometric", "almost_geometric", "custom")


@dataclass(frozen=True, eq=False)
class IncrementLaw:
    """A centered, aperiodic, integer-valued step distribution.

    ``pmf[i]`` is P(X = kmin + i).  ``x_bar_plus``/``x_bar_minus`` are the
    extremes of the support of the untruncated family (possibly ``inf``).
    """

    family: str
    params: dict
    kmin: int
    pmf: np.ndarray
    x_bar_plus: float
    x_bar_minus: float
    k_max: int
    tail_mass_bound: float
    aperiodic: bool = True
    reflected_from: str = field(default="", repr=False)

    @property
    def kmax(self):
        return self.kmin + len(self.pmf) - 1

    @property
    def support(self):
        return np.arange(self.kmin, self.kmax + 1)

    def prob(self, k):
        i = int(k) - self.kmin
        if 0 <= i < len(self.pmf):
            return float(self.pmf[i])
        return 0.0

    @property
    def mean(self):
        return float(np.dot(self.support, self.pmf))

    @property
    def variance(self):
        k = self.support.astype(float)
        return float(np.dot(k * k, self.pmf)) - self.mean ** 2

    @property
    def sigma(self):
        return math.sqrt(self.variance)

    @property
    def symmetric(self):
        return self.kmin == -self.kmax and np.array_equal(self.pmf, self.pmf[::-1])

    def reflected(self):
        """Law of -X."""
        if self.family != "custom" and self.symmetric:
            return self
        return IncrementLaw(
            family="custom",
            params={"table": "reflected"},
            kmin=-self.kmax,
            pmf=self.pmf[::-1].copy(),
            x_bar_plus=self.x_bar_minus,
            x_bar_minus=self.x_bar_plus,
            k_max=self.k_max,
            tail_mass_bound=self.tail_mass_bound,
            aperiodic=self.aperiodic,
            reflected_from=self.family,
        )

    def describe(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items() if k != "table")
        return f"{self.family}({inner})"


@dataclass(frozen=True)
class MgfProfile:
    """Saturation data of Lambda_+ and Lambda_-."""

    t0_plus: float
    t0_minus: float
    rho_plus: float
    rho_minus: float
    lambda_at_t0_plus: float
    lambda_at_t0_minus: float


@dataclass(frozen=True, eq=False)
class TiltedLaw:
    """Exponential tilt pmf(x) e^{tx - Lambda(t)} of a base law."""

    base: IncrementLaw
    t: float
    kmin: int
    pmf: np.ndarray
    mean: float
    variance: float

    @property
    def support(self):
        return np.arange(self.kmin, self.kmin + len(self.pmf))


# ---------------------------------------------------------------- construction


def _geometric_c(gamma):
    return (1.0 - gamma) / (1.0 + gamma)


def _almost_geometric_weight(theta, k):
    k = np.abs(np.asarray(k, dtype=float))
    return np.exp(-theta * np.log1p(k) - k)


def _almost_geometric_c(theta):
    # direct summation until the remaining terms are below 1e-17
    total, x = 1.0, 1
    while True:
        w = float(_almost_geometric_weight(theta, x))
        total += 2.0 * w
        if w < 1e-17 and x > abs(theta):
            break
        x += 1
    return 1.0 / total


def family_pmf(law, k):
    """Untruncated pmf of the family at integer points ``k``."""
    k = np.asarray(k)
    if law.family == "geometric":
        g = law.params["gamma"]
        return _geometric_c(g) * g ** np.abs(k).astype(float)
    if law.family == "almost_geometric":
        th = law.params["theta"]
        return law.params["c_theta"] * _almost_geometric_weight(th, k)
    i = k - law.kmin
    inside = (i >= 0) & (i < len(law.pmf))
    return np.where(inside, law.pmf[np.clip(i, 0, len(law.pmf) - 1)], 0.0)


def family_log_pmf(law, k):
    """Log of ``family_pmf``, computed without underflow for far-out ``k``."""
    k = np.asarray(k)
    with np.errstate(divide="ignore"):
        if law.family == "geometric":
            g = law.params["gamma"]
            return math.log(_geometric_c(g)) + np.abs(k) * math.log(g)
        if law.family == "almost_geometric":
            ka = np.abs(k).astype(float)
            return math.log(law.params["c_theta"]) - law.params["theta"] * np.log1p(ka) - ka
        return np.log(family_pmf(law, k))


def _truncate_symmetric(weights_fn, c):
    """Smallest K with two-sided tail mass below TAIL_TARGET, and that mass."""
    # find a point where the weights are negligible, then read tails inwards
    far = 1
    while True:
        far_w = c * float(weights_fn(far))
        if far_w < 1e-30:
            break
        far *= 2
    ks = np.arange(1, far + 1)
    w = c * weights_fn(ks)
    tails = 2.0 * (np.cumsum(w[::-1])[::-1])  # tails[i] = mass of |k| >= i+1
    tails = np.append(tails, 0.0)
    K = int(np.argmax(tails <= TAIL_TARGET))
    return K, float(tails[K])


def _finalize_symmetric(family, params, K, c, weights_fn, tail, xbar):
    ks = np.arange(-K, K + 1)
    pmf = c * weights_fn(ks)
    pmf = pmf / pmf.sum()
    pmf = 0.5 * (pmf + pmf[::-1])  # exact symmetry, hence exact centering
    return IncrementLaw(family, params, -K, pmf, xbar, xbar, K, tail)


def _aperiodic(kmin, pmf):
    ks = kmin + np.nonzero(pmf > 0)[0]
    if len(ks) < 2:
        return False
    g = 0
    for d in np.diff(ks):
        g = math.gcd(g, int(d))
    return g == 1


def make_law(family, params=None, **kwargs):
    """Build a centered increment law.

    ``make_law("lazy", gamma=0.4)``, ``make_law("geometric", gamma=0.5)``,
    ``make_law("almost_geometric", theta=3)`` or
    ``make_law("custom", table={-1: 0.3, 0: 0.4, 1: 0.3})``.
    """
    p = dict(params or {})
    p.update(kwargs)
    family = family.lower().replace("-", "_")
    if family == "lazy":
        g = float(p["gamma"])
        if not 0.0 < g < 0.5:
            raise ValueError(f"lazy walk needs 0 < gamma < 1/2, got {g}")
        pmf = np.array([g, 1.0 - 2.0 * g, g])
        return IncrementLaw("lazy", {"gamma": g}, -1, pmf, 1.0, 1.0, 1, 0.0)
    if family == "geometric":
        g = float(p["gamma"])
        if not 0.0 < g < 1.0:
            raise ValueError(f"geometric walk needs 0 < gamma < 1, got {g}")
        c = _geometric_c(g)
        fn = lambda k: g ** np.abs(np.asarray(k, dtype=float))  # noqa: E731
        K, tail = _truncate_symmetric(fn, c)
        return _finalize_symmetric("geometric", {"gamma": g}, K, c, fn, tail, math.inf)
    if family == "almost_geometric":
        th = float(p["theta"])
        if not math.isfinite(th):
            raise ValueError("theta must be a finite real")
        c = _almost_geometric_c(th)
        fn = lambda k: _almost_geometric_weight(th, k)  # noqa: E731
        K, tail = _truncate_symmetric(fn, c)
        return _finalize_symmetric(
            "almost_geometric", {"theta": th, "c_theta": c}, K, c, fn, tail, math.inf
        )
    if family == "custom":
        table = p["table"]
        if isinstance(table, dict):
            items = sorted((int(k), float(v)) for k, v in table.items())
        else:
            items = sorted((int(k), float(v)) for k, v in table)
        if not items:
            raise ValueError("empty custom table")
        ks = [k for k, _ in items]
        if len(set(ks)) != len(ks):
            raise ValueError("duplicate support points in custom table")
        kmin, kmax = ks[0], ks[-1]
        pmf = np.zeros(kmax - kmin + 1)
        for k, v in items:
            if v < 0:
                raise ValueError("negative probability in custom table")
            pmf[k - kmin] = v
        total = pmf.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"custom table sums to {total}, not 1")
        pmf = pmf / total
        mean = float(np.dot(np.arange(kmin, kmax + 1), pmf))
        if abs(mean) > MEAN_TOL:
            raise ValueError(f"custom table has mean {mean}; the walk must be centered")
        if not _aperiodic(kmin, pmf):
            raise ValueError("custom table defines a periodic walk")
        nz = np.nonzero(pmf)[0]
        lo, hi = kmin + nz[0], kmin + nz[-1]
        pmf = pmf[nz[0]: nz[-1] + 1]
        return IncrementLaw(
            "custom", {"table": dict(items)}, int(lo), pmf, float(hi), float(-lo),
            int(max(hi, -lo)), 0.0,
        )
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


# ---------------------------------------------------------------- log-MGF


def _expm1_minus_x(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-2
    xs = np.where(small, x, 0.0)
    series = xs * xs * (0.5 + xs * (1 / 6 + xs * (1 / 24 + xs * (1 / 120 + xs / 720))))
    return np.where(small, series, np.expm1(np.where(small, 0.0, x)) - x)


def _table_lmgf(kmin, pmf, t):
    """(Lambda, Lambda', Lambda'') of a finite table at t >= 0 (array t)."""
    k = (kmin + np.arange(len(pmf))).astype(float)
    t = np.asarray(t, dtype=float)[:, None]
    kmax = k[-1]
    small = (t[:, 0] * max(abs(k[0]), abs(kmax))) < 30.0
    lam = np.empty(t.shape[0])
    tk = t * k[None, :]
    mean = float(np.dot(k, pmf))
    if np.any(small):
        inc = _expm1_minus_x(tk[small]) @ pmf + t[small, 0] * mean
        lam[small] = np.log1p(inc)
    big = ~small
    if np.any(big):
        w = np.exp(tk[big] - t[big] * kmax) @ pmf
        lam[big] = np.log(w) + t[big, 0] * kmax
    w = np.exp(tk - t * kmax) * pmf[None, :]
    z = w.sum(axis=1)
    d1 = (w @ k) / z
    d2 = (w @ (k * k)) / z - d1 ** 2
    return lam, d1, np.maximum(d2, 0.0)


def _lazy_lmgf(g, t):
    t = np.asarray(t, dtype=float)
    lam = np.empty_like(t)
    mod = t < 20.0
    sh = np.sinh(t[mod] / 2.0)
    lam[mod] = np.log1p(4.0 * g * sh * sh)
    e1, e2 = np.exp(-t[~mod]), np.exp(-2.0 * t[~mod])
    lam[~mod] = t[~mod] + np.log(g + (1.0 - 2.0 * g) * e1 + g * e2)
    e1, e2 = np.exp(-t), np.exp(-2.0 * t)
    den = g + (1.0 - 2.0 * g) * e1 + g * e2
    d1 = g * (1.0 - e2) / den
    d2 = g * (1.0 + e2) / den - d1 ** 2
    return lam, d1, np.maximum(d2, 0.0)


def _geometric_lmgf(g, t):
    t = np.asarray(t, dtype=float)
    t0 = -math.log(g)
    kap = 2.0 * g / (1.0 - g) ** 2
    inside = t < t0
    tt = np.where(inside, t, 0.0)
    sh = np.sinh(tt / 2.0)
    den = 1.0 - kap * 2.0 * sh * sh
    lam = np.where(inside, -np.log(np.where(inside, den, 1.0)), math.inf)
    d1 = np.where(inside, kap * np.sinh(tt) / den, math.inf)
    d2 = np.where(inside, kap * np.cosh(tt) / den + (kap * np.sinh(tt) / den) ** 2, math.inf)
    return lam, d1, d2


def _almost_geometric_lmgf(law, t):
    th, c = law.params["theta"], law.params["c_theta"]
    t = np.asarray(t, dtype=float)
    lam = np.full_like(t, math.inf)
    d1 = np.full_like(t, math.inf)
    d2 = np.full_like(t, math.inf)
    near = (t > 0.5) & (t <= 1.0)
    low = t <= 0.5
    if np.any(low):
        K = 200
        ks = np.arange(-K, K + 1)
        pmf = family_pmf(law, ks)
        l0, l1, l2 = _table_lmgf(-K, pmf, t[low])
        lam[low], d1[low], d2[low] = l0, l1, l2
    if np.any(near):
        tn = t[near]
        mu_a, mu_b = 1.0 - tn, 1.0 + tn
        A = lambda s, mu: shifted_zeta_series(s, mu)  # noqa: E731
        m0 = c * (A(th, mu_a) + A(th, mu_b) - 1.0)
        m1 = c * ((A(th - 1, mu_a) - A(th, mu_a)) - (A(th - 1, mu_b) - A(th, mu_b)))

        def B(mu):
            return A(th - 2, mu) - 2.0 * A(th - 1, mu) + A(th, mu)

        m2 = c * (B(mu_a) + B(mu_b))
        with np.errstate(invalid="ignore"):
            lam[near] = np.log(m0)
            d1[near] = np.where(np.isfinite(m0), m1 / m0, math.inf)
            d2[near] = np.where(np.isfinite(m1), m2 / m0 - (m1 / m0) ** 2, math.inf)
    return lam, d1, d2


def lmgf_derivatives(law, t, sign=+1):
    """(Lambda, Lambda', Lambda'') for Lambda_+ (sign=+1) or Lambda_- (sign=-1).

    Values beyond the radius of convergence are ``inf``.  Closed forms are used
    for the built-in families; custom tables use exact finite sums.
    """
    scalar = np.ndim(t) == 0
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    lw = law if sign > 0 else law.reflected()
    if lw.family == "lazy":
        out = _lazy_lmgf(lw.params["gamma"], t)
    elif lw.family == "geometric":
        out = _geometric_lmgf(lw.params["gamma"], t)
    elif lw.family == "almost_geometric":
        out = _almost_geometric_lmgf(lw, t)
    else:
        out = _table_lmgf(lw.kmin, lw.pmf, t)
    if scalar:
        return tuple(float(o[0]) for o in out)
    return out


def log_mgf(law, t, sign=+1):
    """Lambda_+(t) = log E e^{tX} (sign=+1) or Lambda_-(t) = log E e^{-tX}."""
    return lmgf_derivatives(law, t, sign)[0]


def truncated_log_mgf(law, t, sign=+1):
    """Log-MGF of the truncated pmf actually used by the lattice algorithms."""
    lw = law if sign > 0 else law.reflected()
    out = _table_lmgf(lw.kmin, lw.pmf, np.atleast_1d(t))[0]
    return float(out[0]) if np.ndim(t) == 0 else out


def radius(law, sign=+1):
    lw = law if sign > 0 else law.reflected()
    if lw.family == "geometric":
        return -math.log(lw.params["gamma"])
    if lw.family == "almost_geometric":
        return 1.0
    return math.inf


def mgf_profile(law):
    """Radii t0, limiting slopes rho and Lambda(t0) for both directions."""
    vals = {}
    for sign, tag in ((+1, "plus"), (-1, "minus")):
        lw = law if sign > 0 else law.reflected()
        t0 = radius(law, sign)
        if math.isinf(t0):
            rho = lw.x_bar_plus
            lam_t0 = math.inf
        else:
            lam_t0, rho, _ = lmgf_derivatives(law, t0, sign)
        vals[tag] = (t0, rho, lam_t0)
    return MgfProfile(
        t0_plus=vals["plus"][0], t0_minus=vals["minus"][0],
        rho_plus=vals["plus"][1], rho_minus=vals["minus"][1],
        lambda_at_t0_plus=vals["plus"][2], lambda_at_t0_minus=vals["minus"][2],
    )


def tilt(law, t):
    """Tilted law P_t(X=x) proportional to e^{tx} P(X=x).

    The support is widened for unbounded families so that the tilted tail
    beyond it is below 1e-18.  Accepts a TiltedLaw, in which case tilts add.
    """
    if isinstance(law, TiltedLaw):
        base, kmin, w0, s = law.base, law.kmin, law.pmf, law.t
    else:
        base, s = law, 0.0
        kmin, w0 = None, None
    total = s + t
    t0p, t0m = radius(base, +1), radius(base, -1)
    if not (-t0m < total < t0p):
        raise ValueError(f"tilt {total} outside the radius of convergence ({-t0m}, {t0p})")
    if w0 is None:
        if base.family in ("geometric", "almost_geometric"):
            hi = base.kmax + (int(math.ceil(45.0 / (t0p - total))) if total > 0 else 0)
            lo = base.kmin - (int(math.ceil(45.0 / (t0m + total))) if total < 0 else 0)
            hi, lo = min(hi, 10 ** 6), max(lo, -(10 ** 6))
            kmin = lo
            logw = family_log_pmf(base, np.arange(lo, hi + 1))
        else:
            kmin = base.kmin
            with np.errstate(divide="ignore"):
                logw = np.log(base.pmf)
    else:
        with np.errstate(divide="ignore"):
            logw = np.log(w0)
    k = np.arange(kmin, kmin + len(logw)).astype(float)
    logw = logw + t * k
    w = np.exp(logw - np.max(logw))
    pmf = w / w.sum()
    mean = float(np.dot(k, pmf))
    var = float(np.dot((k - mean) ** 2, pmf))
    return TiltedLaw(base, total, kmin, pmf, mean, var)
