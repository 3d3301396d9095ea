"""Integrable wetting models with closed-form free energies.

Each family carries whatever is explicit for it: the critical point, the free
energy F(lambda), the log-MGF Lambda and its inverse, and for symmetric walks
with an explicit Lambda the square-well free energy

    F(lambda, a) = (F(lambda) - 2 a Lambda^{-1}(F(lambda)))_+ .

Families
--------
lazy(gamma)        P(X = +-1) = gamma, P(X = 0) = 1 - 2 gamma
geometric(gamma)   P(X = k) proportional to gamma^|k|
laplace(gamma)     density gamma/2 e^{-gamma |x|}, renewal level only
gaussian           standard normal steps, renewal level only
glaplace(gamma)    generalized Laplace with nu = 2 and sigma = sqrt(2)/gamma
zeta(alpha)        symmetric strictly alpha-stable steps, kernel K(n) ~ n^{-1-1/alpha}

The continuous families have f_n = f_n^+(0) = p_{S_n}(0)/n, a density rather
than a probability, and P(H_1 > 0) = 1.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np
from scipy import optimize, special

from . import renewal, walks
from ._special import polylog_exp

FAMILIES = ("lazy", "geometric", "laplace", "gaussian", "glaplace", "zeta")
QUANTITIES = ("lambda_c", "kappa", "F", "Lambda", "Lambda_inverse", "F_well", "a_c", "Kcal")
_WELL_FAMILIES = ("lazy", "geometric", "laplace", "gaussian", "glaplace")


@dataclass(frozen=True, eq=False)
class ClosedFormModel:
    family: str
    params: dict
    kappa: float
    sigma2: float
    ladder_positive: float
    gen: Callable = field(repr=False)
    gen_prime: Callable = field(repr=False)
    fplus_fn: Callable = field(repr=False)
    free_energy_fn: Callable = field(repr=False)
    lmgf_fn: Optional[Callable] = field(default=None, repr=False)
    lmgf_inverse_fn: Optional[Callable] = field(default=None, repr=False)

    @property
    def lambda_c(self):
        return 1.0 / self.kappa

    @property
    def has_well(self):
        return self.family in _WELL_FAMILIES

    def F(self, lam):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        if lam <= self.lambda_c:
            return 0.0
        return self.free_energy_fn(lam)

    def Kcal(self, theta):
        return self.gen(theta) / self.kappa

    def Lambda(self, t):
        if self.lmgf_fn is None:
            raise ValueError(f"{self.family} has no finite exponential moments")
        return self.lmgf_fn(t)

    def Lambda_inverse(self, x):
        if self.lmgf_inverse_fn is None:
            raise ValueError(f"{self.family} has no finite exponential moments")
        if x < 0:
            raise ValueError("x must be non-negative")
        return self.lmgf_inverse_fn(x)

    def F_well(self, lam, a):
        if not self.has_well:
            raise ValueError(f"no square-well formula for {self.family}")
        if a < 0:
            raise ValueError("a must be non-negative")
        F = self.F(lam)
        if a == 0 or F == 0:
            return F
        return max(F - 2.0 * a * self.Lambda_inverse(F), 0.0)

    def a_c(self, lam):
        if not self.has_well:
            raise ValueError(f"no square-well formula for {self.family}")
        F = self.F(lam)
        if F == 0:
            return 0.0
        return F / (2.0 * self.Lambda_inverse(F))

    def renewal(self, n_max=4000):
        """RenewalModel view; lattice families are rebuilt from their walk."""
        if self.family in ("lazy", "geometric"):
            return renewal.renewal_model(walks.make_law(self.family, **self.params), n_max=n_max)
        f = self.fplus_fn(n_max)
        return renewal.RenewalModel(
            name=_describe(self.family, self.params),
            kappa=self.kappa,
            sigma2=self.sigma2,
            ladder_positive=self.ladder_positive,
            fplus0=f,
            gen=self.gen,
            gen_prime=self.gen_prime,
            fplus_fn=self.fplus_fn,
            kappa_table=float(f.sum()),
        )


def _describe(family, params):
    inner = ", ".join(f"{k}={v}" for k, v in params.items())
    return f"{family}({inner})"


def _log_gamma_ratio_table(n_max, nu):
    """log(Gamma(n nu - 1/2) / Gamma(n nu + 1)) for n = 1..n_max."""
    n = np.arange(1, n_max + 1, dtype=float)
    return special.gammaln(n * nu - 0.5) - special.gammaln(n * nu + 1.0)


def _with_zero(values):
    return np.concatenate(([0.0], values))


def _vector(fun):
    def wrapped(theta):
        scalar = np.ndim(theta) == 0
        out = fun(np.atleast_1d(np.asarray(theta, dtype=float)))
        return float(out[0]) if scalar else out

    return wrapped


def _root_free_energy(gen):
    def solve(lam):
        target = 1.0 / lam
        hi = 1.0
        while gen(hi) > target:
            hi *= 2.0
        return optimize.brentq(lambda th: gen(th) - target, 0.0, hi, xtol=1e-300, rtol=1e-15)

    return solve


# ---------------------------------------------------------------- lattice families


def _acosh1p(y):
    """acosh(1 + y) without cancellation for small y."""
    return math.log1p(y + math.sqrt(y * (y + 2.0)))


def _lazy(gamma):
    if not 0 < gamma < 0.5:
        raise ValueError("lazy walk needs 0 < gamma < 1/2")

    def x_lambda(lam):
        # positive root of (lam-1) x^2 - lam (lam-1)(1-2 gamma) x - lam^2 gamma^2
        A = lam - 1.0
        B = -lam * (lam - 1.0) * (1.0 - 2.0 * gamma)
        C = -(lam * gamma) ** 2
        return (-B + math.sqrt(B * B - 4.0 * A * C)) / (2.0 * A)

    def lmgf(t):
        return math.log1p(4.0 * gamma * math.sinh(0.5 * t) ** 2)

    def lmgf_inv(x):
        return _acosh1p(math.expm1(x) / (2.0 * gamma))

    law = walks.make_law("lazy", gamma=gamma)
    rm = renewal.renewal_model(law, n_max=64)
    return dict(
        kappa=1.0 - gamma, sigma2=2.0 * gamma, ladder_positive=gamma,
        gen=rm.gen, gen_prime=rm.gen_prime,
        fplus_fn=lambda n_max: renewal.first_return_table(law, n_max),
        free_energy_fn=lambda lam: math.log(x_lambda(lam)),
        lmgf_fn=lmgf, lmgf_inverse_fn=lmgf_inv,
    )


def _geometric(gamma):
    if not 0 < gamma < 1:
        raise ValueError("geometric walk needs 0 < gamma < 1")
    k = 2.0 * gamma / (1.0 - gamma) ** 2
    t0 = -math.log(gamma)

    def F(lam):
        return math.log(lam * (lam - 1.0) * (1.0 - gamma) ** 2 / (lam * (1.0 - gamma ** 2) - 1.0))

    def lmgf(t):
        if abs(t) >= t0:
            return math.inf
        return -math.log1p(-2.0 * k * math.sinh(0.5 * t) ** 2)

    def lmgf_inv(x):
        return _acosh1p(-math.expm1(-x) / k)

    law = walks.make_law("geometric", gamma=gamma)
    rm = renewal.renewal_model(law, n_max=64)
    return dict(
        kappa=1.0 - gamma, sigma2=2.0 * gamma / (1.0 - gamma) ** 2, ladder_positive=gamma,
        gen=rm.gen, gen_prime=rm.gen_prime,
        fplus_fn=lambda n_max: renewal.first_return_table(law, n_max),
        free_energy_fn=F, lmgf_fn=lmgf, lmgf_inverse_fn=lmgf_inv,
    )


# ---------------------------------------------------------------- continuous families


def _laplace(gamma):
    if gamma <= 0:
        raise ValueError("Laplace walk needs gamma > 0")

    @_vector
    def gen(th):
        with np.errstate(divide="ignore"):
            return gamma * -np.expm1(0.5 * np.log(-np.expm1(-th)))

    @_vector
    def gen_prime(th):
        with np.errstate(divide="ignore"):
            return -0.5 * gamma * np.exp(-th) / np.sqrt(-np.expm1(-th))

    def fplus(n_max):
        logs = _log_gamma_ratio_table(n_max, 1.0)
        return _with_zero(gamma / (2.0 * math.sqrt(math.pi)) * np.exp(logs))

    def F(lam):
        gl = gamma * lam
        return math.log(gl * gl / (2.0 * gl - 1.0))

    def lmgf(t):
        return math.inf if abs(t) >= gamma else -math.log1p(-(t / gamma) ** 2)

    return dict(
        kappa=gamma, sigma2=2.0 / gamma ** 2, ladder_positive=1.0,
        gen=gen, gen_prime=gen_prime, fplus_fn=fplus, free_energy_fn=F,
        lmgf_fn=lmgf, lmgf_inverse_fn=lambda x: gamma * math.sqrt(-math.expm1(-x)),
    )


def _glaplace(gamma):
    if gamma <= 0:
        raise ValueError("generalized Laplace walk needs gamma > 0")
    nu = 2.0

    @_vector
    def gen(th):
        r = np.sqrt(-np.expm1(-th))
        return gamma * (1.0 - np.sqrt(0.5 * (1.0 + r)))

    @_vector
    def gen_prime(th):
        r = np.sqrt(-np.expm1(-th))
        with np.errstate(divide="ignore"):
            dr = np.exp(-th) / (2.0 * r)
        return -gamma * dr / (2.0 * math.sqrt(2.0) * np.sqrt(1.0 + r))

    def fplus(n_max):
        logs = _log_gamma_ratio_table(n_max, nu)
        return _with_zero(gamma / (2.0 * math.sqrt(math.pi)) * np.exp(logs))

    def F(lam):
        gl = gamma * lam
        return -math.log(4.0 * (gl - 1.0) ** 2 * (2.0 * gl - 1.0) / gl ** 4)

    def lmgf(t):
        return math.inf if abs(t) >= gamma else -nu * math.log1p(-(t / gamma) ** 2)

    return dict(
        kappa=gamma * (1.0 - math.sqrt(0.5)), sigma2=2.0 * nu / gamma ** 2, ladder_positive=1.0,
        gen=gen, gen_prime=gen_prime, fplus_fn=fplus, free_energy_fn=F,
        lmgf_fn=lmgf, lmgf_inverse_fn=lambda x: gamma * math.sqrt(-math.expm1(-x / nu)),
    )


def stable_density_at_zero(alpha):
    """p(0) for the symmetric alpha-stable law with characteristic function exp(-|t|^alpha)."""
    return special.gamma(1.0 + 1.0 / alpha) / math.pi


def _zeta(alpha, f0=None):
    if not 0 < alpha <= 2:
        raise ValueError("zeta renewal needs 0 < alpha <= 2")
    s = 1.0 + 1.0 / alpha
    f0 = stable_density_at_zero(alpha) if f0 is None else f0

    @_vector
    def gen(th):
        return f0 * polylog_exp(s, th)

    @_vector
    def gen_prime(th):
        return -f0 * polylog_exp(s - 1.0, th)

    def fplus(n_max):
        n = np.arange(1, n_max + 1, dtype=float)
        return _with_zero(f0 * n ** (-s))

    return dict(
        kappa=f0 * float(special.zeta(s)),
        sigma2=1.0 / (2.0 * math.pi * f0 ** 2) if alpha == 2 else math.inf,
        ladder_positive=1.0,
        gen=gen, gen_prime=gen_prime, fplus_fn=fplus,
        free_energy_fn=_root_free_energy(gen),
    )


def _gaussian():
    d = _zeta(2.0, f0=1.0 / math.sqrt(2.0 * math.pi))
    d.update(
        lmgf_fn=lambda t: 0.5 * t * t,
        lmgf_inverse_fn=lambda x: math.sqrt(2.0 * x),
    )
    return d


def closed_form_model(family, **params):
    """Build the ClosedFormModel of a family.

    ``lazy`` and ``geometric`` take ``gamma``; ``laplace`` and ``glaplace``
    take ``gamma`` (default 1); ``zeta`` takes ``alpha`` and optionally the
    stable density at zero ``f0``; ``gaussian`` takes nothing.
    """
    if family in ("lazy", "geometric"):
        gamma = float(params.pop("gamma"))
        parts = _lazy(gamma) if family == "lazy" else _geometric(gamma)
        kept = {"gamma": gamma}
    elif family in ("laplace", "glaplace"):
        gamma = float(params.pop("gamma", 1.0))
        parts = _laplace(gamma) if family == "laplace" else _glaplace(gamma)
        kept = {"gamma": gamma}
    elif family == "gaussian":
        parts = _gaussian()
        kept = {}
    elif family == "zeta":
        alpha = float(params.pop("alpha"))
        f0 = params.pop("f0", None)
        parts = _zeta(alpha, f0)
        kept = {"alpha": alpha} if f0 is None else {"alpha": alpha, "f0": float(f0)}
    else:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if params:
        raise ValueError(f"unexpected parameters for {family}: {sorted(params)}")
    return ClosedFormModel(family=family, params=kept, **parts)


def closed_form(family, quantity, *args, **params):
    """Evaluate one closed-form quantity, e.g. closed_form("laplace", "F", 2.0, gamma=1)."""
    if quantity not in QUANTITIES:
        raise ValueError(f"unknown quantity {quantity!r}; expected one of {QUANTITIES}")
    model = closed_form_model(family, **params)
    if quantity in ("lambda_c", "kappa"):
        if args:
            raise ValueError(f"{quantity} takes no arguments")
        return getattr(model, quantity)
    return getattr(model, quantity)(*args)


def well_closed_form(family, lam, a, **params):
    """F(lambda, a) for the families with an explicit Lambda^{-1}."""
    return closed_form_model(family, **params).F_well(lam, a)


def zeta_critical_constants(alpha, f0=None):
    """(derived, stated) constants c in F(lambda_c + u) ~ c u^alpha for 1 < alpha <= 2.

    The derived one comes from Li_s(e^{-mu}) = zeta(s) + Gamma(1-s) mu^{s-1} + ...
    with s = 1 + 1/alpha, giving c = (kappa^2 / (f0 alpha Gamma(1 - 1/alpha)))^alpha.
    The stated one is (f0 / (alpha Gamma(1/alpha)))^alpha.
    """
    if not 1 < alpha <= 2:
        raise ValueError("need 1 < alpha <= 2")
    f0 = stable_density_at_zero(alpha) if f0 is None else f0
    kappa = f0 * float(special.zeta(1.0 + 1.0 / alpha))
    derived = (kappa ** 2 / (f0 * alpha * special.gamma(1.0 - 1.0 / alpha))) ** alpha
    stated = (f0 / (alpha * special.gamma(1.0 / alpha))) ** alpha
    return float(derived), float(stated)
