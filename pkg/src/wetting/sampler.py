"""Exact sampling of wetting and square-well paths from DP tables.

Every sampler is a sequential factorization of an exact law: the next height
is drawn with weight pmf(y - x) B_k(y), where B_k is the backward mass of
completing the remaining k steps, so no rejection step is ever needed.

Random numbers come from ``numpy.random.Philox`` seeded through
``SeedSequence(seed, spawn_key=(stream,))``.  Path i of a multi-path run uses
stream i, so a path does not depend on how many others are drawn.  Draws are
inverse-CDF lookups on 64-bit uniforms.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import exact, renewal, walks


def make_rng(seed, stream=0):
    """Philox generator for (seed, stream)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def _categorical(rng, W):
    """One index per row of the non-negative weight matrix W."""
    cdf = np.cumsum(W, axis=1)
    tot = cdf[:, -1]
    if np.any(tot <= 0):
        raise ValueError("a row has no admissible move")
    u = rng.random(W.shape[0]) * tot
    idx = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(idx, W.shape[1] - 1)


def _draw(rng, weights):
    return int(_categorical(rng, np.asarray(weights, dtype=float)[None, :])[0])


# ---------------------------------------------------------------- backward tables


@dataclass
class BackwardTable:
    """B_k(x) for k = 0..n_max and heights x = 0..cap, rescaled per slice.

    ``kind == "first_hit"``: B_k(x) = P_x(S_1 > 0, ..., S_{k-1} > 0, S_k = 0).
    ``kind == "hit_target"``: B_k(x) = P_x(S_1 > 0, ..., S_k > 0, S_k = target).
    """

    law: walks.IncrementLaw = field(repr=False)
    kind: str
    target: int
    cap: int
    slices: np.ndarray = field(repr=False)
    log_scale: np.ndarray = field(repr=False)

    @property
    def n_max(self):
        return self.slices.shape[0] - 1

    def log_value(self, k, x):
        v = self.slices[k, x]
        return math.log(v) + self.log_scale[k] if v > 0 else -math.inf


def _backward(law, n_max, cap, init, kind, target):
    pmf_r = law.pmf[::-1]
    kmax = law.kmax
    slices = np.zeros((n_max + 1, cap + 1))
    scales = np.zeros(n_max + 1)
    slices[0] = init
    for k in range(1, n_max + 1):
        w = slices[k - 1].copy()
        if not (kind == "first_hit" and k == 1):
            w[0] = 0.0
        conv = np.convolve(w, pmf_r)
        # B_k(x) = sum_y pmf(y - x) w(y) sits at conv[x + kmax]
        idx = np.arange(cap + 1) + kmax
        ok = idx < len(conv)
        row = np.zeros(cap + 1)
        row[ok] = conv[idx[ok]]
        peak = row.max()
        if peak > 0:
            row /= peak
            scales[k] = scales[k - 1] + math.log(peak)
        else:
            scales[k] = scales[k - 1]
        slices[k] = row
    return BackwardTable(law, kind, target, cap, slices, scales)


def first_hit_table(law, n_max, cap):
    init = np.zeros(cap + 1)
    init[0] = 1.0
    return _backward(law, n_max, cap, init, "first_hit", 0)


def hit_target_table(law, n_max, cap, target):
    if not 0 < target <= cap:
        raise ValueError("need 0 < target <= cap")
    init = np.zeros(cap + 1)
    init[target] = 1.0
    return _backward(law, n_max, cap, init, "hit_target", target)


def _walk(table, start, n, rng, size=1):
    """Heights (size, n + 1) of walkers driven by ``table`` for n steps."""
    law = table.law
    pmf, sup = law.pmf, law.support
    x = np.full(size, int(start))
    out = np.empty((size, n + 1), dtype=np.int64)
    out[:, 0] = x
    for j in range(1, n + 1):
        k = n - j
        B = table.slices[k]
        y = x[:, None] + sup[None, :]
        inside = (y >= 0) & (y <= table.cap)
        if not (table.kind == "first_hit" and k == 0):
            inside &= y >= 1
        W = np.where(inside, pmf[None, :] * B[np.clip(y, 0, table.cap)], 0.0)
        x = x + sup[_categorical(rng, W)]
        out[:, j] = x
    return out


# ---------------------------------------------------------------- primitive samplers


def sample_excursion(law, n, rng, table=None, size=None):
    """Positive bridge 0 -> 0 of length n (strictly positive on 1..n-1).

    Returns an array of n + 1 heights, or (size, n + 1) when ``size`` is given.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1 and law.prob(0) == 0:
        raise ValueError("a length-1 excursion needs P(X = 0) > 0")
    if table is None or table.n_max < n:
        table = first_hit_table(law, n, exact.default_excursion_cap(law, n))
    if table.slices[n, 0] == 0:
        raise ValueError(f"no excursion of length {n} has positive probability")
    paths = _walk(table, 0, n, rng, 1 if size is None else size)
    return paths[0] if size is None else paths


def _renewal_arrays(model, lam, n):
    """Kernel lambda f_m e^{-F m} and its renewal mass up to n (F = 0 when subcritical)."""
    F = renewal.free_energy(model, lam)
    f = model.fplus(n)
    m = np.arange(len(f))
    kernel = lam * f * np.exp(-F * m)
    return kernel, renewal.renewal_mass(kernel, n)


def sample_contacts(tilted, N, rng, mass=None):
    """Contact set of the flat model of length N from a tilted renewal.

    ``tilted`` is a TiltedRenewal (or a raw kernel array).  Gaps are drawn
    with weight Ktilde(m) u(N - n - m), so N is always the last contact.
    Returns the sorted contact times in 1..N.
    """
    kernel = tilted.Ktilde if isinstance(tilted, renewal.TiltedRenewal) else np.asarray(tilted)
    if mass is None:
        if isinstance(tilted, renewal.TiltedRenewal) and len(tilted.mass) > N:
            mass = tilted.mass
        else:
            mass = renewal.renewal_mass(kernel, N)
    if N == 0:
        return np.zeros(0, dtype=np.int64)
    if mass[N] <= 0:
        raise ValueError(f"N = {N} is not reachable by the renewal")
    out = []
    n = 0
    L = len(kernel) - 1
    while n < N:
        top = min(L, N - n)
        m = np.arange(1, top + 1)
        w = kernel[1: top + 1] * mass[N - n - m]
        n += 1 + _draw(rng, w)
        out.append(n)
    return np.asarray(out, dtype=np.int64)


# ---------------------------------------------------------------- well paths


@dataclass
class PathSample:
    """A well path: absolute heights (wall at -depth), contact times, seed."""

    heights: np.ndarray
    contacts: np.ndarray
    seed: int
    depth: int
    stream: int = 0

    @property
    def N(self):
        return len(self.heights) - 1

    @property
    def L(self):
        return int(self.contacts[0]) if len(self.contacts) else None

    @property
    def R(self):
        return int(self.contacts[-1]) if len(self.contacts) else None

    @property
    def H(self):
        return len(self.contacts)


class WellSampler:
    """Precomputed tables for repeated sampling at fixed (law, lambda, a, N)."""

    def __init__(self, model, lam, a, N):
        model = exact._as_well(model)
        self.model, self.lam, self.a, self.N = model, lam, a, N
        law = model.law
        self.joint = exact.lr_joint_law(model, lam, a, N, constants=False)
        D = self.joint.depth
        self.depth = D
        cap = exact.height_cap(law, N, D)
        self.cap = cap
        self.first_hit = first_hit_table(law, N, cap)
        self.up = hit_target_table(law, N, cap, D) if D > 0 else None
        self.kernel, self.mass = _renewal_arrays(model.renewal, lam, N)
        P = self.joint.prob
        nl, nr = P.shape
        flat = np.concatenate(([self.joint.dry], P.ravel()))
        self._cdf = np.cumsum(flat)
        self._shape = (nl, nr)

    def _draw_lr(self, u):
        idx = np.searchsorted(self._cdf, u * self._cdf[-1], side="right")
        idx = np.minimum(idx, len(self._cdf) - 1)
        wet = idx > 0
        i, j = np.divmod(np.maximum(idx - 1, 0), self._shape[1])
        l0 = self.joint.l0
        return wet, i + l0, j + l0

    def sample(self, rng, seed=0, stream=0):
        N, D = self.N, self.depth
        wet, l, r = self._draw_lr(np.array([rng.random()]))
        h = np.empty(N + 1, dtype=np.int64)
        if not wet[0]:
            if D == 0:
                raise ValueError("dry paths are impossible at depth 0")
            h[:] = _walk(self.up, D, N, rng)[0]
            contacts = np.zeros(0, dtype=np.int64)
        else:
            l, r = int(l[0]), int(r[0])
            h[: l + 1] = _walk(self.first_hit, D, l, rng)[0]
            rel = sample_contacts(self.kernel, r - l, rng, mass=self.mass)
            contacts = np.concatenate(([l], l + rel)).astype(np.int64)
            for s, t in zip(contacts[:-1], contacts[1:]):
                h[s: t + 1] = _walk(self.first_hit, 0, int(t - s), rng)[0]
            if r < N:
                h[r:] = _walk(self.up, 0, N - r, rng)[0]
            else:
                h[r] = 0
        return PathSample(h - D, contacts, seed, D, stream)

    def sample_paths(self, n_paths, seed):
        return [self.sample(make_rng(seed, i), seed, i) for i in range(n_paths)]

    def sample_observables(self, n_paths, seed):
        """(wet, L, R, H) arrays drawn from the exact factorized law of (L, R, H).

        (L, R) comes from the joint law and H - 1 from the exact law of the
        contact count of the flat model of length R - L.  Dry draws have
        L = R = -1 and H = 0.
        """
        rng = make_rng(seed, 0)
        wet, l, r = self._draw_lr(rng.random(n_paths))
        u = rng.random(n_paths)
        H = np.zeros(n_paths, dtype=np.int64)
        L = np.where(wet, l, -1)
        R = np.where(wet, r, -1)
        n = np.where(wet, r - l, -1)
        cond = self._contact_cdf()
        for nn in np.unique(n[n >= 0]):
            sel = n == nn
            cdf = cond[nn]
            k = np.searchsorted(cdf, u[sel] * cdf[-1], side="right")
            H[sel] = 1 + np.minimum(k, nn)
        return wet, L, R, H

    def _contact_cdf(self):
        if not hasattr(self, "_cond"):
            T = renewal.contact_table(self.kernel, self.N)
            self._cond = np.cumsum(T, axis=0).T  # row n: CDF over k of P(tau_k = n)
        return self._cond


def sample_well_path(model, lam, a, N, rng, seed=0):
    """One exact path of the square-well measure."""
    return WellSampler(model, lam, a, N).sample(rng, seed)


def summarize(wet, L, R, H, N):
    """Means and standard errors of L/N, R/N, H/N over the wet draws."""
    out = {"n_paths": int(len(wet)), "wet_fraction": float(np.mean(wet))}
    for name, v in (("L", L), ("R", R), ("H", H)):
        x = v[wet] / N
        out[f"mean_{name}"] = float(x.mean()) if len(x) else math.nan
        out[f"se_{name}"] = float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan
    return out
