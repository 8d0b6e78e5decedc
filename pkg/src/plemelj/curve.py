"""Simple smooth oriented curves in the complex plane and local frames on them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicHermiteSpline, CubicSpline
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing, LineString

from ._validation import as_complex_array, check_positive, check_real
from .exceptions import CurveError, NormalizationError, SelfIntersectionError, SideError

Side = Literal["left", "right", "on-curve"]

CURVE_NAMES = ("segment", "circle", "arc", "parabola-graph")

#: below this |local parameter| the kernel tau/psi(tau) is taken from its Taylor series
H_SWITCH = 1e-4
#: minimum distance allowed between non-adjacent samples of the validation grid
SIMPLICITY_THRESHOLD = 1e-9
ENDPOINT_TOL = 1e-9
ON_CURVE_TOL = 1e-12


def _fd_derivative(fn, tau, h):
    """Fourth-order central difference of ``fn`` at ``tau``."""
    return (-fn(tau + 2 * h) + 8 * fn(tau + h) - 8 * fn(tau - h) + fn(tau - 2 * h)) / (12 * h)


@dataclass(frozen=True)
class Curve:
    """A parameterized curve ``psi: [a, b] -> C``.

    ``param`` and ``deriv`` must be vectorized over float arrays. Closed
    curves wrap their parameter modulo ``b - a``. The constructor samples the
    curve on ``n_check`` points and rejects vanishing derivatives and
    self-intersections; this is a guard on the grid, not a proof.
    """

    kind: str
    param: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    domain: tuple[float, float]
    closed: bool = False
    orientation: int = 1
    deriv2: Callable[[np.ndarray], np.ndarray] | None = None
    deriv3: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = ""
    taylor_order: int = 2
    n_check: int = field(default=4096, repr=False)

    def __post_init__(self):
        a, b = (float(v) for v in self.domain)
        object.__setattr__(self, "domain", (a, b))
        if not b > a:
            raise CurveError(f"empty parameter domain [{a}, {b}]")
        if self.orientation not in (1, -1):
            raise CurveError("orientation must be +1 or -1")
        self._validate()

    # -- evaluation -----------------------------------------------------
    @property
    def period(self) -> float:
        return self.domain[1] - self.domain[0]

    def wrap(self, tau):
        tau = np.asarray(tau, dtype=float)
        if not self.closed:
            return tau
        a = self.domain[0]
        return a + np.mod(tau - a, self.period)

    def __call__(self, tau):
        return self.param(self.wrap(tau))

    def derivative(self, tau, order: int = 1):
        tau = self.wrap(tau)
        if order == 1:
            return self.deriv(tau)
        h = 1e-3 * min(1.0, self.period)
        if order == 2:
            if self.deriv2 is not None:
                return self.deriv2(tau)
            return _fd_derivative(self.deriv, tau, h)
        if order == 3:
            if self.deriv3 is not None:
                return self.deriv3(tau)
            return _fd_derivative(lambda t: self.derivative(t, 2), tau, h)
        raise ValueError("order must be 1, 2 or 3")

    def point(self, tau: float) -> complex:
        return complex(self(np.array([tau]))[0])

    def sample(self, n: int = 1025):
        tau = np.linspace(*self.domain, n)
        return tau, self(tau)

    def length(self) -> float:
        from .quadrature import integrate

        return integrate(lambda t: np.abs(self.deriv(t)), self.domain, 1e-13, 1e-13).value.real

    def is_interior(self, tau: float, tol: float = ENDPOINT_TOL) -> bool:
        if self.closed:
            return True
        a, b = self.domain
        return (tau - a) > tol and (b - tau) > tol

    def nearest_parameter(self, z: complex, n_grid: int = 4097) -> tuple[float, float]:
        """Parameter of the curve point closest to ``z`` and that distance.

        A grid search brackets the minimum; the stationarity condition
        ``Re(conj(psi - z) psi') = 0`` is then solved with ``brentq``, which
        (unlike minimizing the distance itself) resolves the foot point to
        rounding level.
        """
        tau = np.linspace(*self.domain, n_grid)
        d = np.abs(self.param(tau) - z)
        k = int(np.argmin(d))
        best, dist = float(tau[k]), float(d[k])
        step = tau[1] - tau[0]
        lo, hi = tau[k] - step, tau[k] + step
        if not self.closed:
            lo, hi = max(lo, self.domain[0]), min(hi, self.domain[1])

        def slope(t):
            t = np.array([t])
            return float(np.real(np.conj(self.param(self.wrap(t)) - z) * self.derivative(t))[0])

        g_lo, g_hi = slope(lo), slope(hi)
        if g_lo <= 0 <= g_hi and g_lo < g_hi:
            cand = brentq(slope, lo, hi, xtol=1e-17, rtol=4 * np.finfo(float).eps, maxiter=200, disp=False)
        else:
            cand = minimize_scalar(lambda t: abs(self.point(t) - z), bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-15 * max(1.0, abs(tau[k]))}).x
        cand_dist = abs(self.point(float(cand)) - z)
        if cand_dist < dist:
            best, dist = float(cand), float(cand_dist)
        if self.closed:
            best = float(self.wrap(best))
        return best, dist

    def distance(self, z: complex) -> float:
        return self.nearest_parameter(z)[1]

    # -- derived curves -------------------------------------------------
    def reparameterize(self, g, dg, domain, name: str | None = None) -> Curve:
        """Curve ``psi(g(s))`` for an increasing C^1 map ``g`` onto the current domain."""
        return Curve(
            kind=self.kind,
            param=lambda s: self.param(g(s)),
            deriv=lambda s: self.deriv(g(s)) * dg(s),
            domain=tuple(domain),
            closed=self.closed,
            orientation=self.orientation,
            name=name or f"{self.name}-reparameterized",
            taylor_order=self.taylor_order,
            n_check=self.n_check,
        )

    def arclength(self, n_grid: int = 16385) -> Curve:
        """Reparameterize by arc length: cumulative Simpson of |psi'| plus a
        Hermite inverse whose slopes 1/|psi'| are exact at the nodes."""
        tau = np.linspace(*self.domain, n_grid)
        speed = np.abs(self.deriv(tau))
        s = cumulative_simpson(speed, x=tau, initial=0.0)
        inverse = CubicHermiteSpline(s, tau, 1.0 / speed)
        deriv2 = None
        if self.deriv2 is not None:
            def deriv2(sig):
                t = inverse(sig)
                d1, d2 = self.deriv(t), self.deriv2(t)
                sp = np.abs(d1)
                return (d2 / sp - d1 * np.real(d2 * np.conj(d1)) / sp ** 3) / sp

        def deriv(sig):
            d1 = self.deriv(inverse(sig))
            return d1 / np.abs(d1)

        return Curve(
            kind=self.kind,
            param=lambda sig: self.param(inverse(sig)),
            deriv=deriv,
            deriv2=deriv2,
            domain=(0.0, float(s[-1])),
            closed=self.closed,
            orientation=self.orientation,
            name=f"{self.name}-arclength",
            taylor_order=min(self.taylor_order, 1 if deriv2 is None else 2),
            n_check=self.n_check,
        )

    def reversed(self) -> Curve:
        return Curve(
            kind=self.kind, param=self.param, deriv=self.deriv, domain=self.domain, closed=self.closed,
            orientation=-self.orientation, deriv2=self.deriv2, deriv3=self.deriv3,
            name=f"{self.name}-reversed", taylor_order=self.taylor_order, n_check=self.n_check,
        )

    # -- construction guard ---------------------------------------------
    def _validate(self):
        a, b = self.domain
        n = self.n_check
        tau = np.linspace(a, b, n)
        pts = np.asarray(self.param(tau), dtype=complex)
        if pts.shape != tau.shape or not np.all(np.isfinite(pts)):
            raise CurveError("parameterization must return finite complex values of matching shape")
        scale = max(1.0, float(np.max(np.abs(pts))))
        speed = np.abs(np.asarray(self.deriv(tau), dtype=complex))
        if np.any(speed <= 1e-12 * scale):
            k = int(np.argmin(speed))
            raise CurveError(f"vanishing derivative at tau={tau[k]:.6g}")
        end_gap = abs(pts[-1] - pts[0])
        if self.closed and end_gap > 1e-9 * scale:
            raise CurveError(f"curve marked closed but |psi(b) - psi(a)| = {end_gap:.3g}")
        if not self.closed and end_gap <= SIMPLICITY_THRESHOLD:
            raise SelfIntersectionError("open curve has coincident endpoints; mark it closed")
        ring = pts[:-1] if self.closed else pts
        xy = np.column_stack([ring.real, ring.imag])
        geom = LinearRing(xy) if self.closed else LineString(xy)
        if not geom.is_simple:
            raise SelfIntersectionError(f"curve {self.name!r} intersects itself")
        m = len(ring)
        for i, j in cKDTree(xy).query_pairs(SIMPLICITY_THRESHOLD):
            gap = abs(i - j)
            if gap > 1 and not (self.closed and gap == m - 1):
                raise SelfIntersectionError(
                    f"samples {i} and {j} are closer than {SIMPLICITY_THRESHOLD:g}")


def make_builtin_curve(name: str, params=()) -> Curve:
    """Closed-form curves.

    ========================  ==========================  =====================
    name                      params                      psi(tau)
    ========================  ==========================  =====================
    ``segment``               ``[x0, x1]``                ``tau`` on [x0, x1]
    ``circle``                ``[r, cx=0, cy=0]``         ``c + r e^{i tau}``
    ``arc``                   ``[r, theta0, theta1]``     ``r e^{i tau}``
    ``parabola-graph``        ``[k, a=-1, b=1]``          ``tau + i k tau^2``
    ========================  ==========================  =====================
    """
    params = [check_real(p, "curve parameter") for p in params]
    if name == "segment":
        x0, x1 = params if params else (-1.0, 1.0)
        if not x1 > x0:
            raise CurveError("segment needs x0 < x1")
        return Curve(
            kind="analytic-builtin", name="segment", domain=(x0, x1),
            param=lambda t: np.asarray(t, dtype=float) + 0j,
            deriv=lambda t: np.ones_like(np.asarray(t, dtype=float)) + 0j,
            deriv2=lambda t: np.zeros_like(np.asarray(t, dtype=float)) + 0j,
            deriv3=lambda t: np.zeros_like(np.asarray(t, dtype=float)) + 0j,
        )
    if name == "circle":
        if not params:
            params = [1.0]
        r = check_positive(params[0], "radius")
        c = complex(*(params[1:3] + [0.0, 0.0])[:2])
        return Curve(
            kind="analytic-builtin", name="circle", domain=(0.0, 2 * np.pi), closed=True,
            param=lambda t: c + r * np.exp(1j * t),
            deriv=lambda t: 1j * r * np.exp(1j * t),
            deriv2=lambda t: -r * np.exp(1j * t),
            deriv3=lambda t: -1j * r * np.exp(1j * t),
        )
    if name == "arc":
        if len(params) != 3:
            raise CurveError("arc needs [r, theta0, theta1]")
        r = check_positive(params[0], "radius")
        t0, t1 = params[1:]
        if not 0 < t1 - t0 < 2 * np.pi:
            raise CurveError("arc needs 0 < theta1 - theta0 < 2*pi")
        return Curve(
            kind="analytic-builtin", name="arc", domain=(t0, t1),
            param=lambda t: r * np.exp(1j * t),
            deriv=lambda t: 1j * r * np.exp(1j * t),
            deriv2=lambda t: -r * np.exp(1j * t),
            deriv3=lambda t: -1j * r * np.exp(1j * t),
        )
    if name == "parabola-graph":
        k = params[0] if params else 1.0
        a, b = params[1:3] if len(params) >= 3 else (-1.0, 1.0)
        return Curve(
            kind="analytic-builtin", name="parabola-graph", domain=(a, b),
            param=lambda t: t + 1j * k * np.asarray(t, dtype=float) ** 2,
            deriv=lambda t: 1 + 2j * k * np.asarray(t, dtype=float),
            deriv2=lambda t: 2j * k * np.ones_like(np.asarray(t, dtype=float)),
            deriv3=lambda t: np.zeros_like(np.asarray(t, dtype=float)) + 0j,
        )
    raise CurveError(f"unknown curve {name!r}; expected one of {CURVE_NAMES}")


def curve_from_points(points, closed: bool = False) -> Curve:
    """C^2 cubic spline through ``points`` (chord-length knots), reparameterized by arc length."""
    pts = as_complex_array(points, "points")
    if closed and len(pts) > 1 and abs(pts[-1] - pts[0]) <= SIMPLICITY_THRESHOLD:
        pts = pts[:-1]
    if len(pts) < 4:
        raise CurveError(f"need at least 4 points, got {len(pts)}")
    knots_pts = np.append(pts, pts[0]) if closed else pts
    chord = np.abs(np.diff(knots_pts))
    if np.any(chord <= SIMPLICITY_THRESHOLD):
        raise CurveError("consecutive points must be distinct")
    knots = np.concatenate([[0.0], np.cumsum(chord)])
    spline = CubicSpline(knots, knots_pts, bc_type="periodic" if closed else "not-a-knot")
    d1, d2 = spline.derivative(1), spline.derivative(2)
    raw = Curve(
        kind="spline-from-points", name="spline", domain=(0.0, float(knots[-1])), closed=closed,
        param=spline, deriv=d1, deriv2=d2, taylor_order=1,
    )
    return raw.arclength()


# ---------------------------------------------------------------------------
# local frames


@dataclass(frozen=True)
class NormalizedFrame:
    """Rigid frame at an interior curve point with local parameter ``sigma``.

    In frame coordinates ``w = rotation * (z - base_point)`` the curve reads
    ``psi_loc(sigma) = rotation * (psi(tau0 + o*sigma/scale) - base_point)``
    with ``psi_loc(0) = 0`` and ``psi_loc'(0) = 1`` (``o`` = orientation).
    On ``|tau - tau0| < delta`` the real part ``u`` of ``psi_loc`` is strictly
    increasing, so the curve is the graph ``y = G(x)``. Inside the disk of
    radius ``footprint`` around the base point no other part of the curve
    appears, which is where left/right is decided.
    """

    curve: Curve
    tau0: float
    base_point: complex
    rotation: complex
    scale: float
    delta: float
    footprint: float
    second: complex
    third: complex

    @property
    def shift(self) -> complex:
        return -self.base_point

    @property
    def local_window(self) -> tuple[float, float]:
        return (self.tau0 - self.delta, self.tau0 + self.delta)

    @property
    def sigma_window(self) -> float:
        return self.scale * self.delta

    @property
    def tangent(self) -> complex:
        """Unit tangent in the direction of the orientation."""
        return np.conj(self.rotation)

    def parameter(self, sigma):
        return self.tau0 + self.curve.orientation * np.asarray(sigma, dtype=float) / self.scale

    def sigma(self, tau):
        return self.curve.orientation * self.scale * (np.asarray(tau, dtype=float) - self.tau0)

    def local(self, sigma):
        return self.rotation * (self.curve(self.parameter(sigma)) - self.base_point)

    def to_frame(self, z):
        return self.rotation * (np.asarray(z, dtype=complex) - self.base_point)

    def from_frame(self, w):
        return self.base_point + np.conj(self.rotation) * np.asarray(w, dtype=complex)

    def graph(self, x):
        """``G(x) = v(u^{-1}(x))`` by vectorized bisection on the window."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo = np.full(x.shape, -self.sigma_window)
        hi = np.full(x.shape, self.sigma_window)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = self.local(mid).real < x
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return self.local(0.5 * (lo + hi)).imag

    def kernel(self, sigma):
        return regularized_kernel(self.curve, self, sigma)


def normalize_at(c: Curve, tau0: float) -> NormalizedFrame:
    """Translate, rotate and rescale so the curve passes through 0 with unit tangent."""
    tau0 = check_real(tau0, "tau0")
    a, b = c.domain
    if not c.closed:
        if not (a < tau0 < b) or not c.is_interior(tau0):
            raise NormalizationError(f"tau0={tau0} is at or outside an endpoint of [{a}, {b}]")
        max_delta = min(tau0 - a, b - tau0)
    else:
        tau0 = float(c.wrap(tau0))
        max_delta = 0.5 * c.period
    o = c.orientation
    d = o * complex(c.derivative(np.array([tau0]))[0])
    scale = abs(d)
    rot = np.conj(d) / scale
    t0 = c.point(tau0)

    def monotone(delta):
        tau = tau0 + np.linspace(-delta, delta, 513)
        return bool(np.all(np.real(rot * o * c.derivative(tau)) > 0))

    delta = min(1e-3 * c.period, max_delta)
    while not monotone(delta):
        delta *= 0.5
        if delta < 1e-12 * c.period:
            raise NormalizationError("no monotone neighbourhood found")
    good, bad = delta, None
    while bad is None and good < max_delta:
        trial = min(2 * good, max_delta)
        if monotone(trial):
            good = trial
        else:
            bad = trial
    if bad is not None:
        for _ in range(50):
            mid = 0.5 * (good + bad)
            if monotone(mid):
                good = mid
            else:
                bad = mid
    delta = good

    psi2 = rot * complex(c.derivative(np.array([tau0]), 2)[0]) / scale ** 2
    psi3 = o * rot * complex(c.derivative(np.array([tau0]), 3)[0]) / scale ** 3
    ends = rot * (c(np.array([tau0 - delta, tau0 + delta])) - t0)
    footprint = float(np.min(np.abs(ends.real)))
    if c.closed:
        rest = np.linspace(tau0 + delta, tau0 + c.period - delta, 4096)
    else:
        rest = np.concatenate([np.linspace(a, tau0 - delta, 2048) if tau0 - delta > a + 1e-14 else [],
                               np.linspace(tau0 + delta, b, 2048) if tau0 + delta < b - 1e-14 else []])
    if len(rest):
        footprint = min(footprint, 0.5 * float(np.min(np.abs(c(rest) - t0))))
    return NormalizedFrame(curve=c, tau0=tau0, base_point=t0, rotation=complex(rot), scale=scale,
                           delta=delta, footprint=footprint, second=complex(psi2), third=complex(psi3))


def regularized_kernel(c: Curve, frame: NormalizedFrame, tau):
    """``h(tau) = tau / psi_loc(tau)`` in the frame's local parameter, with ``h(0) = 1``.

    For ``|tau| <= H_SWITCH`` the Taylor expansion
    ``1 - a tau + (a^2 - b) tau^2`` with ``a = psi''(0)/2``, ``b = psi'''(0)/6``
    replaces the division (truncated after the linear term when the curve only
    provides two derivatives).
    """
    sig = np.asarray(tau, dtype=float)
    scalar = sig.ndim == 0
    sig = np.atleast_1d(sig)
    out = np.empty(sig.shape, dtype=complex)
    near = np.abs(sig) <= H_SWITCH
    far = ~near
    if np.any(far):
        out[far] = sig[far] / frame.local(sig[far])
    if np.any(near):
        a = frame.second / 2
        s = sig[near]
        series = 1 - a * s
        if c.taylor_order >= 2:
            series = series + (a * a - frame.third / 6) * s * s
        out[near] = series
    return complex(out[0]) if scalar else out


def kernel_slope_at_zero(frame: NormalizedFrame) -> complex:
    """``h'(0) = -psi_loc''(0) / 2``."""
    return -frame.second / 2


def classify_side(c: Curve, frame: NormalizedFrame, z) -> Side:
    """Left/right of the oriented curve, decided locally in the frame."""
    w = complex(frame.to_frame(z))
    if abs(w) >= frame.footprint:
        raise SideError(f"z={complex(z)} is outside the local footprint (radius {frame.footprint:.3g})")
    gap = w.imag - float(frame.graph(w.real)[0])
    if abs(gap) <= ON_CURVE_TOL:
        return "on-curve"
    return "left" if gap > 0 else "right"


def winding_number(c: Curve, z: complex) -> float:
    """Winding number of a closed curve about ``z`` (in the orientation's sense)."""
    if not c.closed:
        raise CurveError("winding number needs a closed curve")
    from .quadrature import integrate

    res = integrate(lambda t: c.deriv(t) / (c.param(t) - z), c.domain, 1e-12, 1e-12)
    return c.orientation * res.value.imag / (2 * np.pi)
