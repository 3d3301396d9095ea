"""Square-well variational problem.

For depth fraction ``a`` the free energy is max(psi, 0) where

    psi(lambda, a) = sup_{0<=u<=v<=1} (v-u) F(lambda) - u I_-(a/u) - (1-v) I_+(a/(1-v)).

``psi_closed_form`` evaluates it through the inverses of Lambda_+-,
``psi_brute_force`` maximizes g directly on a grid and serves as an oracle.
A separate right depth ``b`` is accepted everywhere a depth is.
"""

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np
from scipy import optimize

from . import ldp, renewal, walks

REGIMES = (
    "Dry",
    "Wet-Cramer",
    "Wet-SaturatedLeft",
    "Wet-SaturatedRight",
    "Wet-SaturatedBoth",
    "BoundaryCase",
)


@dataclass(frozen=True, eq=False)
class WellModel:
    """A lattice law with its renewal model, rate functions and saturation points."""

    law: walks.IncrementLaw
    renewal: renewal.RenewalModel
    rate_minus: ldp.RateFunction
    rate_plus: ldp.RateFunction
    lambda_minus: float
    lambda_plus: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def profile(self):
        return self.rate_plus.profile

    @property
    def lambda_c(self):
        return self.renewal.lambda_c

    def F(self, lam):
        lam = float(lam)
        if lam not in self._cache:
            self._cache[lam] = renewal.free_energy(self.renewal, lam)
        return self._cache[lam]


def _saturation_point(model_renewal, rf):
    t0, lam_t0 = rf.t0, rf.lambda_t0
    if t0 == 0 or math.isinf(t0) or math.isinf(lam_t0):
        return math.inf
    return 1.0 / model_renewal.gen(lam_t0)


def well_model(law, n_max=4000):
    rm = renewal.renewal_model(law, n_max=n_max)
    r_minus, r_plus = ldp.rate_pair(law)
    return WellModel(
        law, rm, r_minus, r_plus,
        _saturation_point(rm, r_minus), _saturation_point(rm, r_plus),
    )


def saturation_points(model):
    """(lambda_-, lambda_+) solving F(lambda) = Lambda(t0); inf when not reachable.

    Since G(F(lambda)) = 1/lambda, the root is lambda = 1/G(Lambda(t0)).
    """
    return model.lambda_minus, model.lambda_plus


def max_depth(model):
    """a_bar = (1/x_bar_- + 1/x_bar_+)^{-1} with 1/inf = 0."""
    inv = 1.0 / model.law.x_bar_minus + 1.0 / model.law.x_bar_plus
    return math.inf if inv == 0 else 1.0 / inv


# ---------------------------------------------------------------- g and its pieces


def perspective(rf, a, w):
    """w I(a/w) for w >= 0, with the limit a t0 at w = 0."""
    scalar = np.ndim(w) == 0
    w = np.atleast_1d(np.asarray(w, dtype=float))
    out = np.zeros_like(w)
    if a == 0:
        return float(out[0]) if scalar else out
    zero = w <= 0
    out[zero] = a * rf.t0
    pos = ~zero
    out[pos] = w[pos] * ldp.rate(rf, a / w[pos])
    return float(out[0]) if scalar else out


def g_value(model, lam, a, u, v, b=None):
    """g_{lambda,a}(u, v); -inf where the ramps are infeasible."""
    b = a if b is None else b
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u > v) or np.any(u < 0) or np.any(v > 1):
        raise ValueError("need 0 <= u <= v <= 1")
    F = model.F(lam)
    val = (v - u) * F - perspective(model.rate_minus, a, u) - perspective(model.rate_plus, b, 1.0 - v)
    return float(val) if np.ndim(val) == 0 else val


def _lambda_at_tx(rf, x):
    """Lambda(t_x) = x I'(x) - I(x), i.e. minus the derivative of w I(a/w)."""
    if x == 0:
        return 0.0
    if x >= rf.x_bar:
        return math.inf
    d1, _ = ldp.rate_derivatives(rf, x)
    if math.isfinite(rf.t0) and x >= rf.rho:
        return rf.lambda_t0
    return float(rf.lmgf(d1)[0])


# ---------------------------------------------------------------- closed form


@dataclass
class WellSolution:
    lam: float
    a: float
    b: float
    F: float
    psi: float
    F_well: float
    regime: str
    U_star: tuple
    V_star: tuple
    w_minus: float
    w_plus: float
    u_star: Optional[float]
    v_star: Optional[float]
    s_minus: float
    s_plus: float
    lambda_minus: float
    lambda_plus: float
    contact_angles: tuple


def _diagonal_min(model, a, b):
    """min over u of u I_-(a/u) + (1-u) I_+(b/(1-u)) and its argmin."""
    rm, rp = model.rate_minus, model.rate_plus
    lo = a / rm.x_bar if math.isfinite(rm.x_bar) else 0.0
    hi = 1.0 - (b / rp.x_bar if math.isfinite(rp.x_bar) else 0.0)

    def obj(u):
        return perspective(rm, a, u) + perspective(rp, b, 1.0 - u)

    def slope(u):
        xm = a / u if u > 0 else math.inf
        xp = b / (1.0 - u) if u < 1 else math.inf
        left = _lambda_at_tx(rm, xm) if u > 0 else math.inf
        right = _lambda_at_tx(rp, xp) if u < 1 else math.inf
        if math.isinf(left) and math.isinf(right):
            return 0.0
        return right - left

    if hi - lo <= 1e-15:
        return obj(lo), lo
    eps = 1e-15
    s_lo, s_hi = slope(lo + eps), slope(hi - eps)
    if s_lo >= 0:
        u = lo
    elif s_hi <= 0:
        u = hi
    else:
        u = optimize.brentq(slope, lo + eps, hi - eps, xtol=1e-15, rtol=1e-15)
    return obj(u), u


def _interval(center=None, lo=None, hi=None):
    if center is not None:
        return (center, center)
    return (lo, hi)


def psi_closed_form(model, lam, a, b=None):
    """psi(lambda, a[, b]) with regime, maximizers and contact angles."""
    b = a if b is None else b
    if a < 0 or b < 0 or lam <= 0:
        raise ValueError("need lambda > 0 and a, b >= 0")
    rm, rp = model.rate_minus, model.rate_plus
    F = model.F(lam)
    lm, lp = model.lambda_minus, model.lambda_plus
    s_m = ldp.lambda_inverse(rm, F)
    s_p = ldp.lambda_inverse(rp, F)
    d_m = ldp.lambda_prime(rm, s_m)
    d_p = ldp.lambda_prime(rp, s_p)

    def w_of(depth, slope):
        if depth == 0:
            return 0.0
        return math.inf if slope == 0 else depth / slope

    w_m, w_p = w_of(a, d_m), w_of(b, d_p)
    angles = (math.atan(d_m), math.atan(d_p))
    feas = a / rm.x_bar + b / rp.x_bar
    base = dict(lam=lam, a=a, b=b, F=F, w_minus=w_m, w_plus=w_p, s_minus=s_m, s_plus=s_p,
                lambda_minus=lm, lambda_plus=lp, contact_angles=angles)
    if feas > 1.0:
        return WellSolution(psi=-math.inf, F_well=0.0, regime="Dry", U_star=(), V_star=(),
                            u_star=None, v_star=None, **base)
    # the minimizer of w -> wF + w I(a/w) is 0 once F exceeds Lambda(t0)
    w_eff = (0.0 if lam >= lm else w_m) + (0.0 if lam >= lp else w_p)
    if w_eff <= 1.0 and feas < 1.0:
        psi = F - a * s_m - b * s_p
        if lam < lm:
            U = _interval(w_m)
        elif lam == lm:
            U = _interval(lo=0.0, hi=a / rm.rho)
        else:
            U = _interval(0.0)
        if lam < lp:
            V = _interval(1.0 - w_p)
        elif lam == lp:
            V = _interval(lo=1.0 - b / rp.rho, hi=1.0)
        else:
            V = _interval(1.0)
        if psi < 0 or F == 0:
            regime = "Dry"
        elif lam == lm or lam == lp:
            regime = "BoundaryCase"
        elif lam < lm and lam < lp:
            regime = "Wet-Cramer"
        elif lam > lm and lam > lp:
            regime = "Wet-SaturatedBoth"
        elif lam > lm:
            regime = "Wet-SaturatedLeft"
        else:
            regime = "Wet-SaturatedRight"
    else:
        val, ud = _diagonal_min(model, a, b)
        psi = -val
        U = V = _interval(ud)
        regime = "Dry" if psi < 0 or F == 0 else "BoundaryCase"
    u_star = U[0] if U[0] == U[1] else None
    v_star = V[0] if V[0] == V[1] else None
    return WellSolution(psi=psi, F_well=max(psi, 0.0), regime=regime, U_star=U, V_star=V,
                        u_star=u_star, v_star=v_star, **base)


# ---------------------------------------------------------------- brute force


def _bounded_max(fun, lo, hi):
    if hi - lo <= 0:
        return fun(lo), lo
    res = optimize.minimize_scalar(lambda x: -fun(x), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-13})
    cands = [(fun(lo), lo), (fun(hi), hi), (-res.fun, res.x)]
    return max(cands)


def psi_brute_force(model, lam, a, grid_n=2000, b=None):
    """Maximize g on the triangular grid i/n <= j/n, then refine locally.

    g(u, v) = A(u) + B(v) with A(u) = -uF - u I_-(a/u) and
    B(v) = vF - (1-v) I_+(b/(1-v)), so the grid maximum over u <= v is a
    prefix maximum.  Refinement is a bounded scalar search on each coordinate
    around the best grid point, plus one along the diagonal.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be >= 100")
    b = a if b is None else b
    rm, rp = model.rate_minus, model.rate_plus
    F = model.F(lam)
    x = np.linspace(0.0, 1.0, grid_n + 1)
    with np.errstate(invalid="ignore"):
        A = -x * F - perspective(rm, a, x)
        B = x * F - perspective(rp, b, 1.0 - x)
    A = np.where(np.isnan(A), -math.inf, A)
    B = np.where(np.isnan(B), -math.inf, B)
    pref = np.maximum.accumulate(A)
    arg = np.zeros(len(A), dtype=int)
    best_i = 0
    for j in range(len(A)):
        if A[j] >= A[best_i]:
            best_i = j
        arg[j] = best_i
    tot = pref + B
    j = int(np.argmax(tot))
    if not np.isfinite(tot[j]):
        return -math.inf
    i = int(arg[j])
    h = 1.0 / grid_n

    def fA(u):
        return float(-u * F - perspective(rm, a, u))

    def fB(v):
        return float(v * F - perspective(rp, b, 1.0 - v))

    best = float(tot[j])
    # coordinate refinement
    ua, ub = max(0.0, x[i] - h), min(x[i] + h, x[j])
    va, vb = max(x[j] - h, x[i]), min(1.0, x[j] + h)
    au, u_opt = _bounded_max(fA, ua, ub)
    bv, v_opt = _bounded_max(fB, max(va, u_opt), vb)
    if u_opt <= v_opt:
        best = max(best, au + bv)
    # diagonal refinement
    if j - i <= 2:
        lo, hi = max(0.0, x[i] - 2 * h), min(1.0, x[j] + 2 * h)
        dv, _ = _bounded_max(lambda t: fA(t) + fB(t), lo, hi)
        best = max(best, dv)
    return best


# ---------------------------------------------------------------- critical curve


def critical_depth(model, lam):
    """a_c(lambda) = F / (Lambda_+^{-1}(F) + Lambda_-^{-1}(F)); 0 for lambda <= lambda_c."""
    F = model.F(lam)
    if F <= 0:
        return 0.0
    s = ldp.lambda_inverse(model.rate_minus, F) + ldp.lambda_inverse(model.rate_plus, F)
    return F / s if s > 0 else math.inf


def critical_lambda(model, a):
    """lambda_c(a): the root of a_c(lambda) = a, inf when a >= a_bar."""
    if a <= 0:
        return model.lambda_c
    if a >= max_depth(model):
        return math.inf
    lo = model.lambda_c * (1.0 + 1e-10)
    if critical_depth(model, lo) >= a:
        return lo
    hi = 2.0 * model.lambda_c
    while critical_depth(model, hi) < a:
        hi *= 2.0
        if hi > 1e300:
            return math.inf
    return optimize.brentq(lambda l: critical_depth(model, l) - a, lo, hi, xtol=1e-14, rtol=1e-15)


@dataclass
class TransitionConstants:
    a: float
    lambda_c_a: float
    F_prime: float
    C_a: float
    lambda_minus: float
    lambda_plus: float
    excess_slopes: dict


def transition_constants(model, a):
    """C_a at lambda_c(a) and the excess-free-energy / critical-curve slopes at lambda_-+."""
    if not 0 < a < max_depth(model):
        raise ValueError("need 0 < a < a_bar")
    lca = critical_lambda(model, a)
    fp = renewal.free_energy_derivative(model.renewal, lca)
    F = model.F(lca)
    lm, lp = model.lambda_minus, model.lambda_plus
    rm, rp = model.rate_minus, model.rate_plus
    corr = 0.0
    if lca < lm:
        corr += 1.0 / ldp.lambda_prime(rm, ldp.lambda_inverse(rm, F))
    if lca < lp:
        corr += 1.0 / ldp.lambda_prime(rp, ldp.lambda_inverse(rp, F))
    C_a = fp * (1.0 - a * corr)
    slopes = {}
    t0m, t0p = rm.t0, rp.t0
    if math.isfinite(lm) and math.isfinite(lp) and lm == lp:
        Fl = model.F(lm)
        fpl = renewal.free_energy_derivative(model.renewal, lm)
        inv = 1.0 / rm.rho + 1.0 / rp.rho
        slopes["F_star"] = a * fpl * inv
        slopes["a_c_star"] = Fl * fpl / (t0p + t0m) ** 2 * inv
    else:
        # the first saturation point met is tagged "star", the second "star_star"
        branches = []
        if math.isfinite(lm):
            branches.append((lm, rm, rp))
        if math.isfinite(lp):
            branches.append((lp, rp, rm))
        branches.sort(key=lambda br: br[0])
        for tag, (lam_s, r_sat, r_other) in zip(("star", "star_star"), branches):
            Fl = model.F(lam_s)
            fpl = renewal.free_energy_derivative(model.renewal, lam_s)
            other = ldp.lambda_inverse(r_other, Fl)
            slopes["F_" + tag] = a * fpl / r_sat.rho
            slopes["a_c_" + tag] = Fl * fpl / ((other + r_sat.t0) ** 2 * r_sat.rho)
    return TransitionConstants(a, lca, fp, C_a, lm, lp, slopes)


# ---------------------------------------------------------------- phase diagram


@dataclass
class PhaseDiagram:
    lam: np.ndarray
    F: np.ndarray
    a_c: np.ndarray
    band: list
    lambda_c: float
    lambda_minus: float
    lambda_plus: float

    def rows(self):
        return [
            (float(l), float(f), float(ac), bd)
            for l, f, ac, bd in zip(self.lam, self.F, self.a_c, self.band)
        ]


def _band(model, lam):
    if lam <= model.lambda_c:
        return "delocalized"
    left, right = lam >= model.lambda_minus, lam >= model.lambda_plus
    if left and right:
        return "saturated_both"
    if left:
        return "saturated_left"
    if right:
        return "saturated_right"
    return "cramer"


def phase_diagram(model, lam_grid):
    """Rows (lambda, F(lambda), a_c(lambda), band) with lambda_-+ markers."""
    lam = np.asarray(lam_grid, dtype=float)
    if np.any(np.diff(lam) <= 0):
        raise ValueError("lambda grid must be increasing")
    F = np.array([model.F(l) for l in lam])
    ac = np.array([critical_depth(model, l) for l in lam])
    bands = [_band(model, l) for l in lam]
    return PhaseDiagram(lam, F, ac, bands, model.lambda_c, model.lambda_minus, model.lambda_plus)
