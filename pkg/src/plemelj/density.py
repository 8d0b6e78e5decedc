"""Densities on curves, sampled moduli of continuity and a regularity classifier."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from ._tails import tail_verdict
from ._validation import check_increasing, check_int, check_random_state, check_real
from .curve import Curve
from .exceptions import DensityError

DENSITY_NAMES = ("constant", "linear", "holder-power", "dini-log", "step")

#: right end of the logarithmic profile 1/log(x)^2
DINI_LOG_CUT = float(np.exp(-3.0))

HOLDER_FIT_RANGE = (1e-6, 1e-1)
HOLDER_RESIDUAL_MAX = 0.05
HOLDER_ALPHA_MIN = 0.05
DINI_TAIL_LEVELS = np.arange(3, 21)
N_BOOTSTRAP = 16
N_REFINE = 8
REFINE_STEPS = 64


def default_t_grid() -> np.ndarray:
    return 2.0 ** -np.arange(24, -1, -1, dtype=float)


def dini_log_profile(x):
    """``1/log(x)^2`` on ``(0, e^-3)``, 0 for ``x <= 0`` and 1/9 beyond ``e^-3``.

    The bare indicator form drops from 1/9 to 0 at ``e^-3``; continuing with
    the boundary value 1/9 keeps the function continuous (Lipschitz away from
    0) while the behaviour at 0, Dini but not Hölder, is unchanged.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape)
    inner = (x > 0) & (x < DINI_LOG_CUT)
    with np.errstate(divide="ignore"):
        out[inner] = 1.0 / np.log(x[inner]) ** 2
    out[x >= DINI_LOG_CUT] = 1.0 / 9.0
    return out


_TINY = 1e-300


@dataclass(frozen=True)
class Density:
    """A complex function on a curve.

    Builtin densities are functions of the curve point ``s``; tabulated ones
    are functions of the curve parameter and refuse to extrapolate.
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    source: str = "builtin"
    params: tuple = ()
    declared_class: str | None = None
    alpha: float | None = None
    by_parameter: bool = False
    param_range: tuple[float, float] | None = None
    kinks: tuple = ()  # plane points where phi is known to be non-smooth

    def __call__(self, s):
        return np.asarray(self.func(np.asarray(s)), dtype=complex)

    def on(self, c: Curve) -> Callable[[np.ndarray], np.ndarray]:
        """The pulled-back function ``tau -> phi(psi(tau))``."""
        if self.by_parameter:
            self._check_covers(c)
            return lambda tau: self(c.wrap(tau))
        return lambda tau: self(c(tau))

    def at(self, c: Curve, tau: float) -> complex:
        return complex(self.on(c)(np.array([float(tau)]))[0])

    def kink_parameters(self, c: Curve, rtol: float = 1e-9) -> np.ndarray:
        """Curve parameters of the declared kinks that lie on ``c``.

        Integrators use them as panel edges: an adaptive rule cannot reliably
        find a log-type cusp sitting inside a panel on its own.
        """
        out = []
        for k in self.kinks:
            tau, dist = c.nearest_parameter(complex(k))
            if dist <= rtol * max(1.0, abs(k)):
                out.append(tau)
        return np.unique(np.asarray(out, dtype=float))

    def _check_covers(self, c: Curve):
        lo, hi = self.param_range
        a, b = c.domain
        if lo > a + 1e-12 or hi < b - 1e-12:
            raise DensityError(f"tabulated density covers [{lo}, {hi}] but the curve needs [{a}, {b}]")

    @property
    def regularity_tag(self) -> str | None:
        if self.declared_class == "holder":
            return f"holder({self.alpha:g})"
        return self.declared_class


def builtin_density(name: str, params=()) -> Density:
    """Canonical densities.

    * ``constant [c=1]``: ``phi = c``
    * ``linear [a=1, b=0]``: ``phi(s) = a s + b``
    * ``holder-power [alpha, center=0]``: ``|s - center|^alpha``
    * ``dini-log [origin=0]``: :func:`dini_log_profile` of ``Re(s) - origin``
    * ``step``: ``phi(s) = s`` except ``phi(0) = 1``
    """
    params = tuple(check_real(p, "density parameter") for p in params)
    if name == "constant":
        value = params[0] if params else 1.0
        return Density(name, lambda s: np.full(np.shape(s), value, dtype=complex), params=params,
                       declared_class="holder", alpha=1.0)
    if name == "linear":
        slope, offset = (params + (1.0, 0.0)[len(params):])[:2]
        return Density(name, lambda s: slope * np.asarray(s, dtype=complex) + offset, params=params,
                       declared_class="holder", alpha=1.0)
    if name == "holder-power":
        if not params:
            raise DensityError("holder-power needs an exponent")
        alpha = params[0]
        if not 0 < alpha <= 1:
            raise DensityError(f"holder-power exponent must lie in (0, 1], got {alpha}")
        center = params[1] if len(params) > 1 else 0.0
        return Density(name, lambda s: np.abs(np.asarray(s, dtype=complex) - center) ** alpha + 0j,
                       params=params, declared_class="holder", alpha=alpha, kinks=(center,))
    if name == "dini-log":
        origin = params[0] if params else 0.0
        return Density(name, lambda s: dini_log_profile(np.real(s) - origin) + 0j, params=params,
                       declared_class="dini", kinks=(origin, origin + DINI_LOG_CUT))
    if name == "step":
        def step(s):
            s = np.asarray(s, dtype=complex)
            return np.where(s == 0, 1.0 + 0j, s)

        return Density(name, step, declared_class="discontinuous", kinks=(0.0,))
    raise DensityError(f"unknown density {name!r}; expected one of {DENSITY_NAMES}")


def tabulated_density(tau, values, max_gap: float | None = None, name: str = "tabulated") -> Density:
    """Monotone-safe cubic (PCHIP) interpolation of samples ``(tau_k, phi_k)``."""
    tau = check_increasing(tau, "tau")
    values = np.asarray(values, dtype=complex)
    if values.shape != tau.shape:
        raise DensityError("tau and values must have the same length")
    if tau.size < 2:
        raise DensityError("need at least two samples")
    if not np.all(np.isfinite(values)):
        raise DensityError("tabulated values must be finite (unbounded densities are not supported)")
    span = tau[-1] - tau[0]
    limit = 0.05 * span if max_gap is None else max_gap
    if np.max(np.diff(tau)) > limit:
        raise DensityError(f"sample gap {np.max(np.diff(tau)):.3g} exceeds {limit:.3g}")
    re = PchipInterpolator(tau, values.real, extrapolate=False)
    im = PchipInterpolator(tau, values.imag, extrapolate=False)

    def func(t):
        t = np.asarray(t, dtype=float)
        out = re(t) + 1j * im(t)
        if np.any(np.isnan(out)):
            raise DensityError("tabulated density evaluated outside its sample range")
        return out

    return Density(name, func, source="tabulated", by_parameter=True,
                   param_range=(float(tau[0]), float(tau[-1])))


# ---------------------------------------------------------------------------
# modulus of continuity


@dataclass(frozen=True)
class ModulusEstimate:
    grid: np.ndarray
    omega: np.ndarray
    omega_se: np.ndarray
    tail_deltas: np.ndarray
    dini_tail: np.ndarray
    holder_fit: tuple[float, float, float]
    n_pairs: int = 0
    seed: int | None = None
    extra: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_omega(cls, grid, omega, omega_se=None, **kw) -> ModulusEstimate:
        grid = check_increasing(grid, "grid", positive=True)
        omega = np.maximum.accumulate(np.maximum(np.asarray(omega, dtype=float), 0.0))
        if omega.shape != grid.shape:
            raise ValueError("grid and omega must have the same length")
        se = np.zeros_like(omega) if omega_se is None else np.asarray(omega_se, dtype=float)
        deltas, tails = dini_tails(grid, omega)
        return cls(grid, omega, se, deltas, tails, holder_fit(grid, omega), **kw)

    def __call__(self, t):
        """Log-log interpolation of the estimate (exact for power laws; 0 below the grid)."""
        t = np.asarray(t, dtype=float)
        log_w = np.log(np.where(self.omega > 0, self.omega, _TINY))
        out = np.exp(np.interp(np.log(np.maximum(t, _TINY)), np.log(self.grid), log_w, left=np.log(_TINY)))
        return np.where(out > 2 * _TINY, out, 0.0)


def dini_tails(grid, omega, levels=DINI_TAIL_LEVELS):
    """``int_delta^1 omega(t)/t dt`` for ``delta = 2^-k`` (trapezoid in ``log t``)."""
    logs = np.log(grid)
    top = min(0.0, logs[-1])
    deltas, tails = [], []
    for k in levels:
        lo = -k * np.log(2.0)
        if lo < logs[0] - 1e-12 or lo >= top:
            continue
        inside = (logs > lo) & (logs < top)
        xs = np.concatenate([[lo], logs[inside], [top]])
        ys = np.interp(xs, logs, omega)
        deltas.append(2.0 ** -k)
        tails.append(float(np.trapezoid(ys, xs)))
    return np.asarray(deltas), np.asarray(tails)


def holder_fit(grid, omega, fit_range=HOLDER_FIT_RANGE) -> tuple[float, float, float]:
    """Least-squares line through ``log omega`` vs ``log t``: (alpha, C, rms residual)."""
    sel = (grid >= fit_range[0] * (1 - 1e-12)) & (grid <= fit_range[1] * (1 + 1e-12))
    t, w = grid[sel], omega[sel]
    if t.size and np.all(w <= 0):
        return 1.0, 0.0, 0.0
    pos = w > 0
    if pos.sum() < 3:
        return float("nan"), float("nan"), float("inf")
    x, y = np.log(t[pos]), np.log(w[pos])
    slope, icept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + icept)) ** 2)))
    if pos.sum() < sel.sum():
        resid = float("inf")
    return float(slope), float(np.exp(icept)), resid


def _pairs_modulus(dist, vals, grid):
    order = np.argsort(dist, kind="stable")
    d_sorted = dist[order]
    running = np.maximum.accumulate(vals[order])
    idx = np.searchsorted(d_sorted, grid * (1 + 1e-12), side="right") - 1
    return np.where(idx >= 0, running[np.maximum(idx, 0)], 0.0)


def _refine_pairs(c, phi, place, tau1, tau2, vals, t, span, n_steps=REFINE_STEPS):
    """Pattern search on the best pairs at scale ``t``.

    Each pair is shifted as a whole by ``+/- h`` and its far end is moved to
    chord length ``t`` (up to rounding), for ``h`` halving from ``t``; a move is kept when
    it increases ``|phi(x1) - phi(x2)|`` at distance ``<= t``. Every new pair
    is returned so the caller's running maximum (and its bootstrap) sees it.
    """
    out1, out2, outd, outv = [], [], [], []
    sign = np.where(tau2 >= tau1, 1.0, -1.0)
    h = t / np.maximum(np.abs(c.derivative(tau1)), 1e-300)
    for _ in range(n_steps):
        cand1 = place(np.concatenate([tau1 - h, tau1 + h, tau1]))
        s3 = np.tile(sign, 3)
        step = np.clip(s3 * t / np.abs(c.derivative(cand1)), -span, span)
        cand2 = place(cand1 + step)
        d = np.abs(c(cand1) - c(cand2))
        for _ in range(6):  # stretch the parameter step until the chord is t
            step = np.clip(step * np.where(d > 0, t / np.maximum(d, 1e-300), 1.0) * (1 - 1e-13), -span, span)
            cand2 = place(cand1 + step)
            d = np.abs(c(cand1) - c(cand2))
        v = np.abs(phi(cand1) - phi(cand2))
        # the unshifted pair was already recorded; repeating it would pin the bootstrap
        moved = slice(0, 2 * tau1.size)
        out1.append(cand1[moved])
        out2.append(cand2[moved])
        outd.append(d[moved])
        outv.append(v[moved])
        score = np.where(d <= t, v, -1.0).reshape(3, -1)
        pick = np.argmax(score, axis=0)
        cols = np.arange(tau1.size)
        better = score[pick, cols] > vals
        new1 = cand1.reshape(3, -1)[pick, cols]
        new2 = cand2.reshape(3, -1)[pick, cols]
        tau1 = np.where(better, new1, tau1)
        tau2 = np.where(better, new2, tau2)
        vals = np.where(better, score[pick, cols], vals)
        h = h / 2
    return np.concatenate(out1), np.concatenate(out2), np.concatenate(outd), np.concatenate(outv)


def estimate_modulus(d: Density, c: Curve, n_pairs: int = 4000, t_grid=None, seed=0,
                     n_bootstrap: int = N_BOOTSTRAP) -> ModulusEstimate:
    """Sampled modulus of continuity in the Euclidean metric of the plane.

    Scales are visited from coarse to fine. At each scale ``t`` half the pairs
    start uniformly on the curve and half start near the worst pairs found at
    the previous scale; separations are uniform in ``(0, t]`` with a quarter
    placed exactly at ``t``. The best pairs at each scale are then polished
    by a local pattern search. ``omega(t)`` is the running maximum of
    ``|phi(x1) - phi(x2)|`` over every sampled pair with ``|x1 - x2| <= t``,
    which makes it non-decreasing. Being a maximum over finitely many pairs
    it can only under-estimate the true supremum.
    """
    n_pairs = check_int(n_pairs, "n_pairs", minimum=1000)
    grid = default_t_grid() if t_grid is None else check_increasing(t_grid, "t_grid", positive=True)
    rng = check_random_state(seed)
    phi = d.on(c)
    a, b = c.domain
    span = b - a

    def place(tau):
        return c.wrap(tau) if c.closed else np.clip(tau, a, b)

    dist_all, val_all = [], []
    centers = None
    for t in grid[::-1]:
        n_zoom = n_pairs // 2 if centers is not None else 0
        tau1 = rng.uniform(a, b, n_pairs - n_zoom)
        if n_zoom:
            pick = centers[rng.integers(0, centers.size, n_zoom)]
            speed = np.abs(c.derivative(pick))
            tau1 = np.concatenate([tau1, pick + rng.uniform(-2.0, 2.0, n_zoom) * t / speed])
        tau1 = place(tau1)
        frac = np.where(rng.random(tau1.size) < 0.25, 1.0, 1.0 - rng.random(tau1.size))
        sign = np.where(rng.random(tau1.size) < 0.5, -1.0, 1.0)
        step = sign * frac * t / np.abs(c.derivative(tau1))
        step = np.clip(step, -span, span)
        tau2 = place(tau1 + step)
        dist = np.abs(c(tau1) - c(tau2))
        vals = np.abs(phi(tau1) - phi(tau2))
        if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(dist))):
            raise DensityError("density evaluation produced non-finite values")
        ok = dist <= t
        if np.any(ok):
            best = np.argsort(np.where(ok, vals, -1.0))[-N_REFINE:]
            best = best[ok[best]]
            r1, r2, rd, rv = _refine_pairs(c, phi, place, tau1[best], tau2[best], vals[best], t, span)
            tau1, tau2 = np.concatenate([tau1, r1]), np.concatenate([tau2, r2])
            dist, vals = np.concatenate([dist, rd]), np.concatenate([vals, rv])
            best = np.argsort(np.where(dist <= t, vals, -1.0))[-N_REFINE:]
            centers = np.concatenate([tau1[best], tau2[best]])
        dist_all.append(dist)
        val_all.append(vals)
    dist = np.concatenate(dist_all)
    vals = np.concatenate(val_all)
    omega = _pairs_modulus(dist, vals, grid)
    boot = np.empty((n_bootstrap, grid.size))
    for i in range(n_bootstrap):
        idx = rng.integers(0, dist.size, dist.size)
        boot[i] = _pairs_modulus(dist[idx], vals[idx], grid)
    se = boot.std(axis=0, ddof=1) if n_bootstrap > 1 else np.zeros(grid.size)
    return ModulusEstimate.from_omega(grid, omega, se, n_pairs=n_pairs,
                                      seed=seed if isinstance(seed, int) else None)


def modulus_from_samples(x, y, t_grid=None) -> ModulusEstimate:
    """Exact modulus over all pairs of a finite sample (O(n^2); small n only).

    ``x`` are sample locations (real or complex), ``y`` the values.
    """
    x = np.asarray(x)
    x = x.astype(complex) if np.iscomplexobj(x) else x.astype(float)
    y = np.asarray(y, dtype=complex)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D of equal length")
    grid = default_t_grid() if t_grid is None else check_increasing(t_grid, "t_grid", positive=True)
    i, j = np.triu_indices(x.size, k=1)
    dist = np.abs(x[i] - x[j])
    vals = np.abs(y[i] - y[j])
    return ModulusEstimate.from_omega(grid, _pairs_modulus(dist, vals, grid))


@dataclass(frozen=True)
class Regularity:
    label: str
    alpha: float | None = None
    dini_exponent: float | None = None

    def __str__(self):
        if self.label == "holder":
            return f"holder({self.alpha:.3g})"
        return self.label


def classify_regularity(m: ModulusEstimate) -> Regularity:
    """Heuristic Hölder / Dini / inconclusive verdict from a modulus estimate.

    Hölder when the log-log fit on ``[1e-6, 1e-1]`` has RMS residual below
    0.05 and slope at least 0.05. Otherwise Dini when the dyadic increments of
    ``int_delta^1 omega/t`` form a convergent tail (see
    :func:`plemelj._tails.tail_verdict`). This is numerical evidence, not a
    proof.
    """
    alpha, _, resid = m.holder_fit
    if np.isfinite(resid) and resid < HOLDER_RESIDUAL_MAX and alpha >= HOLDER_ALPHA_MIN:
        return Regularity("holder", alpha=float(min(alpha, 1.0)))
    if m.dini_tail.size < 4:
        return Regularity("inconclusive")
    increments = np.diff(np.concatenate([[0.0], m.dini_tail]))
    levels = -np.log2(m.tail_deltas)
    verdict, p = tail_verdict(increments, levels)
    if verdict == "converges":
        return Regularity("dini", dini_exponent=p)
    return Regularity("inconclusive", dini_exponent=p)


def regularity_report(m: ModulusEstimate, r: Regularity | None = None) -> dict:
    r = classify_regularity(m) if r is None else r
    return {
        "class": r.label,
        "alpha": r.alpha if r.alpha is not None else float(m.holder_fit[0]),
        "dini_tail": [float(v) for v in m.dini_tail],
        "residual": float(m.holder_fit[2]),
    }


# ---------------------------------------------------------------------------
# modulus bounds for compositions and products, checked on estimates


@dataclass(frozen=True)
class BoundCheck:
    """``lhs <= rhs + slack`` on a grid; ``slack`` is 3 bootstrap standard errors."""

    grid: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    slack: np.ndarray

    @property
    def violations(self) -> int:
        return int(np.sum(self.lhs > self.rhs + self.slack))


_ROUNDING = 64 * np.finfo(float).eps


def _function_density(name, fn) -> Density:
    return Density(name, lambda s: np.asarray(fn(np.real(s)), dtype=complex))


def composition_bound(phi, psi, M: float, c: Curve, t_grid=None, n_pairs: int = 4000, seed=0,
                      n_bootstrap: int = N_BOOTSTRAP) -> BoundCheck:
    """``omega_{phi o psi}(t) <= omega_phi(M t)`` for ``|psi'| <= M``.

    ``phi`` and ``psi`` are real-variable functions; both moduli are
    estimated on the real segment ``c`` (the ``phi`` estimate directly on the
    scaled grid ``M t``, so no interpolation enters).
    """
    grid = default_t_grid() if t_grid is None else check_increasing(t_grid, "t_grid", positive=True)
    M = check_real(M, "M")
    rng = check_random_state(seed)
    comp = estimate_modulus(_function_density("composition", lambda x: phi(psi(x))), c, n_pairs, grid, rng,
                            n_bootstrap)
    base = estimate_modulus(_function_density("phi", phi), c, n_pairs, M * grid, rng, n_bootstrap)
    slack = 3 * np.hypot(comp.omega_se, base.omega_se) + _ROUNDING * np.maximum(comp.omega, base.omega)
    return BoundCheck(grid, comp.omega, base.omega, slack)


def product_bound(phi, chi, c: Curve, M1: float, M2: float, M3: float, t_grid=None, n_pairs: int = 4000,
                  seed=0, n_bootstrap: int = N_BOOTSTRAP) -> BoundCheck:
    """``omega_{chi phi}(t) <= M2 omega_phi(t) + M1 M3 t`` with ``M1 = sup|phi|``,
    ``M2 = sup|chi|`` and ``M3`` a bound on the difference quotients of ``chi``."""
    grid = default_t_grid() if t_grid is None else check_increasing(t_grid, "t_grid", positive=True)
    rng = check_random_state(seed)
    prod = estimate_modulus(_function_density("product", lambda x: chi(x) * phi(x)), c, n_pairs, grid, rng,
                            n_bootstrap)
    base = estimate_modulus(_function_density("phi", phi), c, n_pairs, grid, rng, n_bootstrap)
    rhs = M2 * base.omega + M1 * M3 * grid
    slack = 3 * np.hypot(prod.omega_se, M2 * base.omega_se) + _ROUNDING * np.maximum(prod.omega, rhs)
    return BoundCheck(grid, prod.omega, rhs, slack)
