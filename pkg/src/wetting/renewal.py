"""Renewal reduction of the flat-wall wetting model and its free energy.

Returns of the walk to the wall form a renewal with sub-probability kernel
f_n = f_n^+(0) = P(S_1 > 0, ..., S_{n-1} > 0, S_n = 0), total mass kappa and
K(n) = f_n / kappa.  Everything downstream is expressed through the generating
function G(theta) = sum_n f_n e^{-theta n} = kappa * Kcal(theta).

For lattice laws G is evaluated without truncation through the ladder
identity 1 - G(theta) = exp(-J(theta)), J(theta) = sum_n e^{-theta n} P(S_n=0)/n,
and J is written as a Fourier integral of the characteristic function.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np
from scipy import optimize

from . import _lattice, walks

_GL_NODES = 32
_DYADIC_PIECES = 44
_KTILDE_CUTOFF = 1e-18


# ---------------------------------------------------------------- ladder integral


class _LadderIntegral:
    """J(theta) and J'(theta) for a lattice law by dyadic Gauss-Legendre quadrature.

    |1 - s phi(u)|^2 = A^2 + B^2 with A = (1-s) + s c(u), B = s d(u),
    c(u) = sum p_k 2 sin^2(ku/2), d(u) = sum p_k sin(ku).  The innermost
    piece [0, b] uses c(u) ~ sigma^2 u^2 / 2 and is integrated in closed form.
    """

    def __init__(self, law):
        x, w = np.polynomial.legendre.leggauss(_GL_NODES)
        nodes, weights = [], []
        for j in range(_DYADIC_PIECES):
            lo, hi = math.pi * 2.0 ** (-j - 1), math.pi * 2.0 ** (-j)
            nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
            weights.append(0.5 * (hi - lo) * w)
        self.u = np.concatenate(nodes)
        self.w = np.concatenate(weights)
        self.b = math.pi * 2.0 ** (-_DYADIC_PIECES)
        k = law.support.astype(float)
        ku = np.outer(self.u, k)
        self.c = (2.0 * np.sin(0.5 * ku) ** 2) @ law.pmf
        self.d = np.sin(ku) @ law.pmf
        self.half_var = 0.5 * law.variance

    def _parts(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))[:, None]
        s = np.exp(-theta)
        one_minus_s = -np.expm1(-theta)
        A = one_minus_s + s * self.c[None, :]
        B = s * self.d[None, :]
        return theta, s, one_minus_s, A, B

    def J(self, theta):
        _, s, oms, A, B = self._parts(theta)
        body = (-0.5 * np.log(A * A + B * B)) @ self.w
        c0 = oms[:, 0]
        d0 = s[:, 0] * self.half_var
        b = self.b
        with np.errstate(divide="ignore", invalid="ignore"):
            at = np.where(c0 > 0, 2.0 * np.sqrt(c0 / d0) * np.arctan(b * np.sqrt(d0 / np.where(c0 > 0, c0, 1.0))), 0.0)
        tip = -(b * np.log(c0 + d0 * b * b) - 2.0 * b + at)
        return (body + tip) / math.pi

    def J_prime(self, theta):
        _, s, oms, A, B = self._parts(theta)
        integrand = -(A * s * (1.0 - self.c[None, :]) - B * s * self.d[None, :]) / (A * A + B * B)
        body = integrand @ self.w
        c0 = oms[:, 0]
        d0 = s[:, 0] * self.half_var
        with np.errstate(divide="ignore", invalid="ignore"):
            tip = np.where(
                c0 > 0,
                -s[:, 0] * np.arctan(self.b * np.sqrt(d0 / np.where(c0 > 0, c0, 1.0)))
                / np.sqrt(np.where(c0 > 0, c0, 1.0) * d0),
                -math.inf,
            )
        return (body + tip) / math.pi


# ---------------------------------------------------------------- model


@dataclass(frozen=True, eq=False)
class RenewalModel:
    """Return-time renewal of a walk (or of a closed-form oracle family).

    ``fplus0[n]`` holds f_n^+(0) for 0 <= n <= n_max (entry 0 is 0).
    ``gen`` and ``gen_prime`` evaluate G and G' without truncation.
    ``ladder_positive`` is P(H_1 > 0), the probability that the first entry
    into the non-positive half-line overshoots 0.
    """

    name: str
    kappa: float
    sigma2: float
    ladder_positive: float
    fplus0: np.ndarray
    gen: Callable = field(repr=False)
    gen_prime: Callable = field(repr=False)
    law: Optional[walks.IncrementLaw] = field(default=None, repr=False)
    fplus_fn: Optional[Callable] = field(default=None, repr=False)
    kappa_table: float = math.nan
    kappa_tail_bound: float = math.nan

    @property
    def n_max(self):
        return len(self.fplus0) - 1

    @property
    def lambda_c(self):
        return 1.0 / self.kappa

    @property
    def tail_constant(self):
        """c1 with f_n ~ c1 n^{-3/2} in the finite-variance case."""
        return self.ladder_positive / math.sqrt(2.0 * math.pi * self.sigma2)

    def fplus(self, n_max):
        """f_n^+(0) for n = 0..n_max, extending the stored table when needed."""
        if n_max <= self.n_max:
            return self.fplus0[: n_max + 1]
        if self.fplus_fn is not None:
            return self.fplus_fn(n_max)
        return first_return_table(self.law, n_max)

    def K(self, n):
        return self.fplus(int(np.max(n)))[np.asarray(n)] / self.kappa


def first_return_table(law, n_max):
    """f_n^+(0) for n = 0..n_max by a single positivity-constrained sweep."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    logs = _lattice.positive_sweep(law, n_max, start=0, read=(0,))[:, 0]
    out = np.exp(logs)
    out[0] = 0.0
    return out


def ladder_atom_table(law, n_max):
    """P(S_1 < 0, ..., S_{n-1} < 0, S_n = 0): the mirror sweep, equal to f_n by time reversal."""
    out = np.exp(_lattice.negative_sweep_return(law, n_max))
    out[0] = 0.0
    return out


def _kappa_tail(f):
    """Bound on sum_{n > n_max} f_n from a C n^{-3/2} envelope fitted on the last decade."""
    n_max = len(f) - 1
    lo = max(1, n_max // 10)
    n = np.arange(lo, n_max + 1)
    C = float(np.max(f[lo:] * n ** 1.5))
    return C * 2.0 / math.sqrt(n_max)


def renewal_model(law, n_max=4000):
    """RenewalModel of a lattice increment law."""
    ladder = _LadderIntegral(law)

    def gen(theta):
        scalar = np.ndim(theta) == 0
        out = -np.expm1(-ladder.J(theta))
        return float(out[0]) if scalar else out

    def gen_prime(theta):
        scalar = np.ndim(theta) == 0
        th = np.atleast_1d(theta)
        out = ladder.J_prime(th) * np.exp(-ladder.J(th))
        return float(out[0]) if scalar else out

    kappa = gen(0.0)
    f = first_return_table(law, n_max)
    return RenewalModel(
        name=law.describe(),
        kappa=kappa,
        sigma2=law.variance,
        ladder_positive=1.0 - kappa,
        fplus0=f,
        gen=gen,
        gen_prime=gen_prime,
        law=law,
        kappa_table=float(f.sum()),
        kappa_tail_bound=_kappa_tail(f),
    )


# ---------------------------------------------------------------- free energy


def laplace_K(model, theta):
    """Kcal(theta) = E[e^{-theta tau_1}] for the normalized kernel K."""
    return model.gen(theta) / model.kappa


def free_energy(model, lam):
    """F(lambda): the root of G(theta) = 1/lambda, or 0 when lambda <= 1/kappa."""
    if np.ndim(lam) > 0:
        return np.array([free_energy(model, float(x)) for x in np.ravel(lam)]).reshape(np.shape(lam))
    lam = float(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    target = 1.0 / lam
    if target >= model.kappa:
        return 0.0

    def g(theta):
        return model.gen(theta) - target

    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    return optimize.brentq(g, 0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=500)


def mean_tilted_interarrival(model, lam, F=None):
    """m_lambda = -lambda G'(F(lambda)), the mean of the tilted inter-arrival law."""
    F = free_energy(model, lam) if F is None else F
    return -lam * model.gen_prime(F)


def free_energy_derivative(model, lam):
    """F'(lambda) = 1 / (lambda m_lambda) in the localized phase, 0 below lambda_c."""
    if lam <= model.lambda_c:
        return 0.0
    return 1.0 / (lam * mean_tilted_interarrival(model, lam))


@dataclass
class TiltedRenewal:
    parent: RenewalModel
    lam: float
    F: float
    Ktilde: np.ndarray
    m_lambda: float
    sigma_lambda2: float
    mass: np.ndarray
    truncation_mass: float

    @property
    def n_cut(self):
        return len(self.Ktilde) - 1


def _tilted_kernel(model, lam, F, n_limit):
    n_cut = int(math.ceil((45.0 + 1.5 * math.log(max(n_limit, 2))) / F)) if F > 0 else n_limit
    n_cut = max(1, min(n_cut, n_limit))
    f = model.fplus(n_cut)
    n = np.arange(n_cut + 1)
    Kt = lam * f * np.exp(-F * n)
    above = np.nonzero(Kt >= _KTILDE_CUTOFF)[0]
    last = int(above[-1]) if len(above) else 1
    return Kt[: last + 1]


def renewal_mass(kernel, N):
    """u_n = P(n in tau) for n = 0..N from u_n = sum_m kernel[m] u_{n-m}."""
    u = np.zeros(N + 1)
    u[0] = 1.0
    kk = kernel[1:]
    L = len(kk)
    for n in range(1, N + 1):
        j = min(n, L)
        u[n] = np.dot(kk[:j], u[n - 1:: -1][:j])
    return u


def tilted_renewal(model, lam, N_max):
    """Tilted renewal with kernel lambda f_n e^{-F n}, truncated below 1e-18."""
    if lam <= model.lambda_c:
        raise ValueError("tilted renewal requires lambda > lambda_c")
    F = free_energy(model, lam)
    Kt = _tilted_kernel(model, lam, F, max(model.n_max, N_max))
    n = np.arange(len(Kt))
    m = mean_tilted_interarrival(model, lam, F)
    var = float(np.dot(n * n, Kt) - np.dot(n, Kt) ** 2)
    mass = renewal_mass(Kt, N_max)
    return TiltedRenewal(model, lam, F, Kt, m, var, mass, 1.0 - float(Kt.sum()))


def flat_partition_table(model, lam, N):
    """log Z_{n,lambda} for n = 0..N by the renewal convolution, in tilted form."""
    F = free_energy(model, lam)
    f = model.fplus(N)
    n = np.arange(N + 1)
    kernel = lam * f * np.exp(-F * n)
    z = renewal_mass(kernel, N)
    with np.errstate(divide="ignore"):
        return np.log(z) + F * n


def flat_partition(model, lam, N):
    """log Z_{N,lambda}."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return float(flat_partition_table(model, lam, N)[N])


# ---------------------------------------------------------------- contact number


def contact_table(kernel, N):
    """T[k, n] = P(tau_k = n) for 0 <= k, n <= N under the given kernel."""
    T = np.zeros((N + 1, N + 1))
    T[0, 0] = 1.0
    cur = T[0]
    for k in range(1, N + 1):
        nxt = np.convolve(cur, kernel)[: N + 1]
        T[k] = nxt
        cur = nxt
        if cur.sum() < 1e-300:
            break
    return T


@dataclass
class ContactLaw:
    N: int
    k: np.ndarray
    prob: np.ndarray
    gaussian: np.ndarray
    m_lambda: float
    sigma_eff: float
    mean: float
    table: Optional[np.ndarray] = field(default=None, repr=False)
    mass: Optional[np.ndarray] = field(default=None, repr=False)

    def scaled_discrepancy(self):
        """sup_k |(sqrt(N)/m) P(H_N = k) - phi((N - k m)/sqrt(N))|."""
        scaled = math.sqrt(self.N) / self.m_lambda * self.prob
        return float(np.max(np.abs(scaled - self.gaussian)))


def contact_number_law(model, lam, N, keep_table=False):
    """Exact law of H_N under the flat wetting measure, with its Gaussian prediction.

    The Gaussian is phi_s((N - k m)/sqrt(N)) with s^2 = Var(tau~)/m, which is
    the local limit of (sqrt(N)/m) P(H_N = k).
    """
    tr = tilted_renewal(model, lam, N)
    T = contact_table(tr.Ktilde, N)
    mass = T.sum(axis=0)
    prob = T[:, N] / mass[N]
    k = np.arange(N + 1)
    m = tr.m_lambda
    s = math.sqrt(tr.sigma_lambda2 / m)
    y = (N - k * m) / math.sqrt(N)
    gauss = np.exp(-0.5 * (y / s) ** 2) / (s * math.sqrt(2.0 * math.pi))
    return ContactLaw(
        N, k, prob, gauss, m, s, float(np.dot(k, prob)),
        table=T if keep_table else None, mass=mass if keep_table else None,
    )


# ---------------------------------------------------------------- critical behaviour


def richardson(u, values):
    """Polynomial (Neville) extrapolation of values(u) to u = 0."""
    u = np.asarray(u, dtype=float)
    p = np.array(values, dtype=float)
    n = len(u)
    for j in range(1, n):
        p[: n - j] = (u[j:] * p[: n - j] - u[: n - j] * p[1: n - j + 1]) / (u[j:] - u[: n - j])
    return float(p[0])


@dataclass
class CriticalReport:
    u: np.ndarray
    ratio: np.ndarray
    extrapolated: float
    predicted: float
    relative_error: float
    transient_slope: Optional[float]
    exercise_constant: Optional[float] = None


def critical_constant(model):
    """c3 = kappa^4 / (2 P(H_1 > 0)^2)."""
    return 0.5 * model.kappa ** 4 / model.ladder_positive ** 2


def critical_asymptotics(model, u_grid, free_energy_fn=None):
    """F(lambda_c + u)/u^2 on ``u_grid``, extrapolated to u = 0 and compared with c3 sigma^2."""
    u = np.asarray(u_grid, dtype=float)
    if np.any(u <= 0) or np.any(np.diff(u) >= 0):
        raise ValueError("u_grid must be positive and decreasing")
    fe = free_energy_fn or (lambda lam: free_energy(model, lam))
    lc = model.lambda_c
    ratio = np.array([fe(lc + x) / x ** 2 for x in u])
    extra = richardson(u, ratio)
    pred = critical_constant(model) * model.sigma2
    slope = None
    f = model.fplus0
    if len(f) > 20:
        # transient renewal: f_n decays faster than n^{-2}
        n = np.arange(len(f))
        tail = np.polyfit(np.log(n[len(f) // 2:]), np.log(np.maximum(f[len(f) // 2:], 1e-300)), 1)[0]
        if tail < -2.2:
            slope = model.kappa ** 2 / float(np.dot(n, f))
    exercise = None
    if model.law is not None and model.law.family == "lazy":
        g = model.law.params["gamma"]
        exercise = g * (3.0 - 4.0 * g)
    return CriticalReport(u, ratio, extra, pred, abs(extra / pred - 1.0), slope, exercise)
