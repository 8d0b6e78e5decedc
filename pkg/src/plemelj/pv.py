"""Cauchy principal values on intervals and along curves."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._tails import tail_verdict
from ._validation import check_decreasing_to_zero, check_int, check_positive, check_real
from .curve import Curve, NormalizedFrame, normalize_at
from .density import Density
from .exceptions import NormalizationError, QuadratureError
from .quadrature import integrate, integrate_log_singular

ENDPOINT_GUARD = 1e-12
_EPS = np.finfo(float).eps


def default_excision_seq(k_min: int = 4, k_max: int = 40) -> np.ndarray:
    return 2.0 ** -np.arange(k_min, k_max + 1, dtype=float)


@dataclass(frozen=True)
class PVConfig:
    excision_seq: np.ndarray = field(default_factory=default_excision_seq)
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    max_subdivisions: int = 2000
    richardson: bool = True

    def __post_init__(self):
        object.__setattr__(self, "excision_seq", check_decreasing_to_zero(self.excision_seq, "excision_seq"))
        check_positive(self.abs_tol, "abs_tol")
        check_positive(self.rel_tol, "rel_tol")
        check_int(self.max_subdivisions, "max_subdivisions", minimum=2)

    def tolerance(self, value) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))

    def with_depth(self, k_max: int) -> PVConfig:
        return PVConfig(default_excision_seq(4, k_max), self.abs_tol, self.rel_tol,
                        self.max_subdivisions, self.richardson)


@dataclass(frozen=True)
class PVResult:
    value: complex
    excision_trace: list = field(default_factory=list)
    error_estimate: float = 0.0
    method: str = "excision"
    converged: bool = True
    richardson_applied: bool = False

    def trace_array(self) -> np.ndarray:
        return np.array([(e, v.real, v.imag) for e, v in self.excision_trace]).reshape(-1, 3)


def _check_interior(t0, a, b):
    t0, a, b = check_real(t0, "t0"), check_real(a, "a"), check_real(b, "b")
    if not a < b:
        raise ValueError(f"empty interval [{a}, {b}]")
    if not (t0 - a > ENDPOINT_GUARD and b - t0 > ENDPOINT_GUARD):
        raise ValueError(f"t0={t0} must lie strictly inside ({a}, {b}); principal values at endpoints are undefined")
    return t0, a, b


def _with_points(lo, hi, points):
    """``[lo, hi]`` with the entries of ``points`` strictly inside spliced in."""
    inside = points[(points > lo) & (points < hi)]
    return np.concatenate([[lo], np.unique(inside), [hi]])


def _quad(f, pts, cfg, share=1):
    try:
        return integrate(f, pts, cfg.abs_tol / share, cfg.rel_tol / share, cfg.max_subdivisions)
    except FloatingPointError as exc:
        raise QuadratureError(str(exc)) from exc


def _richardson(values):
    """Extrapolate a trace whose increments shrink like a fixed ratio.

    Returns ``(value, error)`` or ``None`` when the last increments do not fit
    ``c * q^k`` well enough.
    """
    if len(values) < 5:
        return None
    d = np.diff(values)[-4:]
    if np.any(np.abs(d) <= 1e-300):
        return None
    q = d[1:] / d[:-1]
    qm = np.mean(q)
    if not (0 < abs(qm) < 0.9) or np.max(np.abs(q - qm)) > 0.1 * abs(qm):
        return None
    extrap = [values[j] + d[j - len(values) + 4] * qm / (1 - qm) for j in range(len(values) - 3, len(values))]
    return extrap[-1], float(np.ptp(np.real(extrap)) + np.ptp(np.imag(extrap)))


def _finish_trace(eps, partials, quad_err, cfg, method):
    partials = np.asarray(partials, dtype=complex)
    spread = float(np.ptp(partials[-3:].real) + np.ptp(partials[-3:].imag))
    value, err, used = complex(partials[-1]), spread, False
    if cfg.richardson:
        rich = _richardson(partials)
        if rich is not None and rich[1] < spread:
            value, err, used = complex(rich[0]), rich[1], True
    err += quad_err
    trace = [(float(e), complex(v)) for e, v in zip(eps, partials)]
    return PVResult(value, trace, err, method, bool(err <= cfg.tolerance(value)), used)


def pv_interval_excision(f, t0, a, b, cfg: PVConfig | None = None, points=()) -> PVResult:
    """``lim_{eps->0}`` of the integral of ``f(t)/(t - t0)`` over ``[a, b]`` minus ``(t0-eps, t0+eps)``.

    The partial integral at each ``eps_k`` is accumulated shell by shell; the
    two sides of a shell are paired as ``(f(t0+u) - f(t0-u))/u``, which is
    exactly the symmetric-excision increment. A trace that does not settle
    is returned with ``converged=False``.

    ``points`` lists locations where ``f`` is known to be non-smooth (kinks,
    cusps); they are used as quadrature breakpoints, as in ``scipy.integrate.quad``.
    """
    cfg = cfg or PVConfig()
    t0, a, b = _check_interior(t0, a, b)
    points = np.asarray(points, dtype=float).ravel()
    offsets = np.abs(points - t0)
    room = min(t0 - a, b - t0)
    eps = cfg.excision_seq[cfg.excision_seq < room]
    if eps.size < 4:
        raise ValueError("excision sequence has fewer than 4 radii inside the interval")
    n_pieces = eps.size + 1

    def kernel(t):
        return f(t) / (t - t0)

    def shell(u):
        return (f(t0 + u) - f(t0 - u)) / u

    quad_err = 0.0
    outer = 0j
    for lo, hi in ((a, t0 - eps[0]), (t0 + eps[0], b)):
        if hi > lo:
            r = _quad(kernel, _with_points(lo, hi, points), cfg, n_pieces)
            outer += r.value
            quad_err += r.error
    partials = [outer]
    for big, small in zip(eps[:-1], eps[1:]):
        r = _quad(shell, _with_points(small, big, offsets), cfg, n_pieces)
        quad_err += r.error
        partials.append(partials[-1] + r.value)
    return _finish_trace(eps, partials, quad_err, cfg, "excision")


def pv_interval_subtraction(f, t0, a, b, cfg: PVConfig | None = None, method: str = "subtraction",
                            points=()) -> PVResult:
    """``int_a^b (f(t) - f(t0))/(t - t0) dt + f(t0) log((b - t0)/(t0 - a))``.

    The regular part is integrated on each side of ``t0`` after the
    substitution ``t - t0 = c e^{-u}`` (see
    :func:`plemelj.quadrature.integrate_log_singular`), so a Dini ``f`` gives a
    well-behaved integrand. For ``f`` not continuous at ``t0`` the integral
    does not exist and the result comes back with ``converged=False``.
    ``points`` are as in :func:`pv_interval_excision`.
    """
    cfg = cfg or PVConfig()
    t0, a, b = _check_interior(t0, a, b)
    points = np.asarray(points, dtype=float).ravel()
    f0 = complex(np.asarray(f(np.array([t0])), dtype=complex)[0])
    x_min = 4 * _EPS * abs(t0) + 1e-300

    def right(x):
        return f(t0 + x) - f0

    def left(x):
        return f(t0 - x) - f0

    try:
        r = integrate_log_singular(right, b - t0, cfg.abs_tol / 4, cfg.rel_tol / 4, cfg.max_subdivisions, x_min,
                                   points[points > t0] - t0)
        l_ = integrate_log_singular(left, t0 - a, cfg.abs_tol / 4, cfg.rel_tol / 4, cfg.max_subdivisions, x_min,
                                    t0 - points[points < t0])
    except FloatingPointError as exc:
        raise QuadratureError(str(exc)) from exc
    log_term = f0 * np.log((b - t0) / (t0 - a))
    value = r.value - l_.value + log_term
    err = r.error + l_.error
    # relative accuracy is judged against the largest piece, not the (possibly cancelled) sum
    scale = max(abs(value), abs(r.value), abs(l_.value), abs(log_term))
    ok = err <= cfg.tolerance(scale)
    return PVResult(complex(value), [], float(err), method, bool(ok))


# ---------------------------------------------------------------------------
# curves


def _curve_setup(c: Curve, tau0: float):
    frame = normalize_at(c, tau0)
    if c.closed:
        lo, hi = frame.tau0 - c.period / 2, frame.tau0 + c.period / 2
    else:
        lo, hi = c.domain
    return frame, lo, hi


def pullback_numerator(c: Curve, d: Density, frame: NormalizedFrame):
    """``tau -> phi(psi(tau)) psi'(tau) r h(sigma) / s`` so that the curve integrand
    equals this numerator over ``tau - tau0``."""
    offset = offset_numerator(c, d, frame)
    return lambda tau: offset(np.asarray(tau, dtype=float) - frame.tau0)


def offset_numerator(c: Curve, d: Density, frame: NormalizedFrame):
    """The pullback numerator as a function of the offset ``x = tau - tau0``.

    Working in offsets keeps ``x`` exact down to ``|x| ~ 1e-300``; only the
    smooth factors see the rounded absolute parameter ``tau0 + x``.
    """
    phi = d.on(c)
    factor = frame.rotation / frame.scale
    o, s = c.orientation, frame.scale

    def numerator(x):
        tau = frame.tau0 + x
        return phi(tau) * c.derivative(tau) * factor * frame.kernel(o * s * x)

    return numerator


def _chord(frame: NormalizedFrame, sigma):
    """``|psi(tau) - t0|`` from the local parameter, free of cancellation."""
    return np.abs(sigma / frame.kernel(sigma))


def excision_cuts(c: Curve, tau0: float, eps: float, frame: NormalizedFrame | None = None):
    """Parameter offsets ``(c1, c2)`` with ``|psi(tau0 - c1) - t0| = |psi(tau0 + c2) - t0| = eps``."""
    frame = frame or normalize_at(c, tau0)
    o, s = c.orientation, frame.scale
    out = []
    for side in (-1.0, 1.0):
        lo, hi = 0.0, frame.delta
        if _chord(frame, np.array([o * s * side * hi]))[0] < eps:
            raise ValueError(f"eps={eps} exceeds the monotone window")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _chord(frame, np.array([o * s * side * mid]))[0] < eps:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 2 * _EPS * hi:
                break
        out.append(0.5 * (lo + hi))
    return out[0], out[1]


def cut_correction(c: Curve, d: Density, tau0: float, eps: float) -> complex:
    """Disk excision minus symmetric parameter excision at radius ``eps``.

    With disk cuts ``tau0 - c1`` and ``tau0 + c2`` this is the integral of the
    curve integrand over the parameter gap between ``tau0 + c2`` and
    ``tau0 + c1``; it tends to 0 with ``eps``.
    """
    frame, _, _ = _curve_setup(c, tau0)
    c1, c2 = excision_cuts(c, tau0, eps, frame)
    if c1 == c2:
        return 0j
    num = offset_numerator(c, d, frame)
    lo, hi = sorted((c1, c2))
    r = integrate(lambda x: num(x) / x, [lo, hi], 1e-15, 1e-12)
    return r.value if c1 > c2 else -r.value


def _kinks_in_window(c: Curve, d: Density, lo: float, hi: float) -> np.ndarray:
    """Kink parameters of ``d`` on ``c``, shifted into ``[lo, hi]`` for closed curves."""
    taus = d.kink_parameters(c)
    if c.closed:
        taus = lo + np.mod(taus - lo, c.period)
    return taus[(taus > lo) & (taus < hi)]


def _pv_curve_excision(c, d, frame, lo, hi, cfg) -> PVResult:
    t0 = frame.base_point
    reach = min(frame.footprint, abs(c.point(frame.tau0 - frame.delta) - t0),
                abs(c.point(frame.tau0 + frame.delta) - t0))
    eps = cfg.excision_seq[cfg.excision_seq < reach]
    if eps.size < 4:
        raise ValueError("excision sequence has fewer than 4 radii inside the local window")
    num = offset_numerator(c, d, frame)
    n_pieces = 2 * eps.size
    tau0 = frame.tau0
    cuts = [excision_cuts(c, tau0, e, frame) for e in eps]
    kinks = _kinks_in_window(c, d, lo, hi) - tau0

    def right(x):
        return num(x) / x

    def left(x):
        return -num(-x) / x

    side_pts = {left: -kinks[kinks < 0], right: kinks[kinks > 0]}
    quad_err = 0.0
    outer = 0j
    c1, c2 = cuts[0]
    for fn, a_, b_ in ((left, c1, tau0 - lo), (right, c2, hi - tau0)):
        if b_ > a_:
            r = _quad(fn, _with_points(a_, b_, side_pts[fn]), cfg, n_pieces)
            outer += r.value
            quad_err += r.error
    partials = [outer]
    for (p1, p2), (n1, n2) in zip(cuts[:-1], cuts[1:]):
        r1 = _quad(left, _with_points(n1, p1, side_pts[left]), cfg, n_pieces)
        r2 = _quad(right, _with_points(n2, p2, side_pts[right]), cfg, n_pieces)
        quad_err += r1.error + r2.error
        partials.append(partials[-1] + r1.value + r2.value)
    return _finish_trace(eps, partials, quad_err, cfg, "excision")


def pv_curve(c: Curve, d: Density, tau0: float, cfg: PVConfig | None = None, method: str = "auto") -> PVResult:
    """Principal value of ``int_C phi(s)/(s - t0) ds`` at ``t0 = psi(tau0)``.

    ``method="pullback"`` writes the integrand as a numerator over
    ``tau - tau0`` via the regularized kernel and applies
    :func:`pv_interval_subtraction`. ``method="excision"`` removes disks
    ``|s - t0| < eps`` geometrically. ``"auto"`` uses excision for densities
    declared discontinuous (where subtraction has no meaning) and the
    pullback otherwise. Declared kinks of ``d`` on ``c`` become panel edges.
    """
    cfg = cfg or PVConfig()
    if not c.closed and not c.is_interior(float(tau0)):
        raise NormalizationError(f"tau0={tau0} is an endpoint of the curve")
    frame, lo, hi = _curve_setup(c, float(tau0))
    if method == "auto":
        method = "excision" if d.declared_class == "discontinuous" else "pullback"
    if method == "excision":
        return _pv_curve_excision(c, d, frame, lo, hi, cfg)
    if method in ("pullback", "subtraction"):
        return pv_interval_subtraction(pullback_numerator(c, d, frame), frame.tau0, lo, hi, cfg, method="pullback",
                                       points=_kinks_in_window(c, d, lo, hi))
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# even/odd decomposition and existence


def even_odd_split(f, x):
    """``(f_e(x), f_o(x))``; each part is built from the symmetric formula so
    parity holds exactly, and their sum reproduces ``f(x)`` up to rounding."""
    x = np.asarray(x, dtype=float)
    fp = np.asarray(f(x), dtype=complex)
    fm = np.asarray(f(-x), dtype=complex)
    return (fp + fm) / 2, (fp - fm) / 2


@dataclass(frozen=True)
class ExistenceResult:
    verdict: str
    l1_estimate: float
    trace: list
    exponent: float
    rate: float
    pv: complex | None = None
    pv_excision: PVResult | None = None

    @property
    def exists(self) -> bool:
        return self.verdict == "exists"


def pv_exists_predicate(f, cfg: PVConfig | None = None, levels: int = 40) -> ExistenceResult:
    """Numerical test of ``f_o(x)/x in L^1[-1, 1]`` for ``P.V. int_{-1}^1 f(x)/x dx``.

    The even part drops out of the principal value, so existence hinges on
    the odd part. The shell integrals ``int_{2^-k}^{2^-(k-1)} |f_o(x)|/x dx``
    are accumulated for ``k = 1..levels`` and their tail is judged like a
    Dini tail. When the verdict is ``exists`` the value
    ``2 int_0^1 f_o(x)/x dx`` is returned together with a symmetric-excision
    cross-check. ``fails`` comes with the measured growth ``rate`` of the
    partial sums per unit of ``log(1/delta)``.
    """
    cfg = cfg or PVConfig()
    levels = check_int(levels, "levels", minimum=8)

    def odd(x):
        return even_odd_split(f, x)[1]

    incs = []
    for k in range(1, levels + 1):
        r = _quad(lambda x: np.abs(odd(x)) / x, [2.0 ** -k, 2.0 ** -(k - 1)], cfg, levels)
        incs.append(r.value.real)
    incs = np.asarray(incs)
    partial = np.cumsum(incs)
    trace = [(2.0 ** -k, float(v)) for k, v in zip(range(1, levels + 1), partial)]
    ks = np.arange(1, levels + 1)
    verdict, p = tail_verdict(incs, ks)
    rate = float(np.mean(incs[-6:]) / np.log(2.0))
    if verdict == "diverges":
        return ExistenceResult("fails", float(partial[-1]), trace, p, rate)
    if verdict == "inconclusive":
        return ExistenceResult("inconclusive", float(partial[-1]), trace, p, rate)
    if np.isfinite(p):
        tail = incs[-1] * levels / max(p - 1.0, 1e-12)
    else:
        tail = incs[-1]
    l1 = float(partial[-1] + tail)
    half = integrate_log_singular(odd, 1.0, cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions)
    check = pv_interval_excision(f, 0.0, -1.0, 1.0, cfg)
    return ExistenceResult("exists", l1, trace, p, rate, complex(2 * half.value), check)
