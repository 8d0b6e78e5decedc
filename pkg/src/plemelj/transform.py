"""Cauchy transform off the curve, Plemelj boundary values and approach experiments."""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_complex, check_decreasing_to_zero, check_positive, check_real
from .curve import Curve, NormalizedFrame, classify_side, normalize_at, winding_number
from .density import Density
from .exceptions import ConvergenceError, OnCurveError, QuadratureError, SideError
from .pv import PVConfig, PVResult, pv_curve
from .quadrature import integrate

ON_CURVE_DISTANCE = 1e-13
NEAR_CURVE = 1e-3
GRADING_RATIO = 0.5
NOISE_FLOOR = 1e-13
SIDES = ("left", "right")
SHAPES = ("normal", "tangential-graph", "custom")


def default_radii(n_max: int = 30, n_min: int = 1) -> np.ndarray:
    return 2.0 ** -np.arange(n_min, n_max + 1, dtype=float)


def thread_count() -> int:
    """Worker count from ``PLEMELJ_THREADS`` (unset or 0 means one per CPU)."""
    raw = os.environ.get("PLEMELJ_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValueError(f"PLEMELJ_THREADS must be an integer, got {raw!r}") from exc
    if n < 0:
        raise ValueError(f"PLEMELJ_THREADS must be >= 0, got {n}")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class TransformConfig:
    pv: PVConfig = field(default_factory=PVConfig)
    abs_tol: float = 1e-12
    rel_tol: float = 1e-11
    max_subdivisions: int = 4000
    tol: float = 1e-6  # convergence-experiment tolerance

    def __post_init__(self):
        check_positive(self.abs_tol, "abs_tol")
        check_positive(self.rel_tol, "rel_tol")
        check_positive(self.tol, "tol")


@dataclass(frozen=True)
class TransformValue:
    value: complex
    error: float
    n_panels: int
    converged: bool
    distance: float


def _transform_setup(c: Curve, z: complex):
    tau_star, dist = c.nearest_parameter(z)
    if dist <= ON_CURVE_DISTANCE:
        raise OnCurveError(f"z={z} lies on the curve (distance {dist:.3g})")
    if c.closed:
        lo, hi = tau_star - c.period / 2, tau_star + c.period / 2
    else:
        lo, hi = c.domain
        # keep the frame away from the endpoints; the graded split only needs an interior point
        tau_star = float(np.clip(tau_star, lo + 1e-9 * (hi - lo), hi - 1e-9 * (hi - lo)))
    return tau_star, dist, lo, hi


def _breakpoints(tau_star, lo, hi, dist, speed, kinks=()):
    """Offsets ``tau - tau_star`` for the panels, graded toward 0 when ``z`` is near."""
    pts = {lo - tau_star, 0.0, hi - tau_star, *(float(k) - tau_star for k in kinks)}
    if lo < tau_star:
        pts.add(0.5 * (lo - tau_star))
    if hi > tau_star:
        pts.add(0.5 * (hi - tau_star))
    if dist < NEAR_CURVE:
        w_min = max(1e-15, 0.01 * dist) / speed
        for side, room in ((-1.0, tau_star - lo), (1.0, hi - tau_star)):
            w = 0.25 * room
            while w > w_min:
                pts.add(side * w)
                w *= GRADING_RATIO
    return sorted(p for p in pts if lo - tau_star <= p <= hi - tau_star)


def evaluate_transform(c: Curve, d: Density, z, cfg: TransformConfig | None = None,
                       frame: NormalizedFrame | None = None) -> TransformValue:
    """``(1/2 pi i) int_C phi(s)/(s - z) ds`` with its quadrature error.

    The integral is pulled back to the parameter and split at the nearest
    parameter ``tau*``. The difference ``psi(tau) - z`` is formed in the frame
    at ``tau*`` as ``conj(r) (sigma/h(sigma) - w)``, so points very close to the
    curve lose no digits to cancellation. For ``dist(z, C) < 1e-3`` the
    panels are graded geometrically (ratio 0.5) toward ``tau*`` down to width
    ``max(1e-15, 0.01 dist)``.
    """
    cfg = cfg or TransformConfig()
    z = check_complex(z, "z")
    tau_star, dist, lo, hi = _transform_setup(c, z)
    if frame is None or abs(frame.tau0 - tau_star) > 1e-14:
        frame = normalize_at(c, tau_star) if c.closed or c.is_interior(tau_star) else None
    phi = d.on(c)
    o = c.orientation
    if frame is not None:
        tau0 = frame.tau0
        w = complex(frame.to_frame(z))
        back = np.conj(frame.rotation)
        s = frame.scale

        def integrand(x):
            tau = tau0 + x
            sig = o * s * x
            diff = back * (sig / frame.kernel(sig) - w)
            return o * phi(tau) * c.derivative(tau) / diff
        speed = s
    else:
        tau0 = tau_star

        def integrand(x):
            tau = tau0 + x
            return o * phi(tau) * c.derivative(tau) / (c(tau) - z)
        speed = abs(complex(c.derivative(np.array([tau0]))[0]))
    a, b = lo + (tau0 - tau_star), hi + (tau0 - tau_star)
    kinks = d.kink_parameters(c)
    if c.closed:
        kinks = a + np.mod(kinks - a, c.period)
    pts = _breakpoints(tau0, a, b, dist, speed, kinks)
    try:
        r = integrate(integrand, pts, cfg.abs_tol, cfg.rel_tol, cfg.max_subdivisions)
    except FloatingPointError as exc:
        raise QuadratureError(str(exc)) from exc
    scale = 1.0 / (2j * np.pi)
    return TransformValue(complex(r.value * scale), float(r.error / (2 * np.pi)), r.n_panels, r.converged, dist)


def cauchy_transform(c: Curve, d: Density, z, cfg: TransformConfig | None = None) -> complex:
    """``Phi(z)`` for ``z`` off the curve; raises :class:`OnCurveError` within 1e-13 of it."""
    res = evaluate_transform(c, d, z, cfg)
    if not res.converged:
        raise QuadratureError(f"transform at z={z} did not converge (error {res.error:.3g})")
    return res.value


# ---------------------------------------------------------------------------
# boundary values


@dataclass(frozen=True)
class BoundaryValue:
    """Plemelj boundary values at ``point = psi(tau)``.

    ``phi_plus`` is the limit from the left of the oriented curve (the
    interior of a counterclockwise closed curve), ``phi_minus`` from the right.
    """

    point: complex
    tau: float
    phi_plus: complex
    phi_minus: complex
    pv_part: complex
    density_value: complex
    pv: PVResult
    converged: bool

    def jump(self) -> complex:
        return self.phi_plus - self.phi_minus

    def limit(self, side: str) -> complex:
        if side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {side!r}")
        return self.phi_plus if side == "left" else self.phi_minus


def boundary_values(c: Curve, d: Density, tau, cfg: TransformConfig | None = None,
                    method: str = "auto") -> BoundaryValue:
    """``Phi^{+/-}(t) = +/- phi(t)/2 + (1/2 pi i) P.V. int phi(s)/(s - t) ds``.

    A principal value that did not converge is passed through with
    ``converged=False`` rather than replaced.
    """
    cfg = cfg or TransformConfig()
    tau = check_real(tau, "tau")
    pv = pv_curve(c, d, tau, cfg.pv, method=method)
    f_t = d.at(c, tau)
    pv_part = pv.value / (2j * np.pi)
    plus, minus = f_t / 2 + pv_part, -f_t / 2 + pv_part
    bv = BoundaryValue(c.point(tau), tau, plus, minus, pv_part, f_t, pv, pv.converged)
    scale = max(1.0, abs(f_t), abs(pv_part))
    assert abs(bv.jump() - f_t) <= 8 * np.finfo(float).eps * scale
    assert abs(plus + minus - 2 * pv_part) <= 8 * np.finfo(float).eps * scale
    return bv


# ---------------------------------------------------------------------------
# approach sequences


@dataclass(frozen=True)
class ApproachSequence:
    target: complex
    tau: float
    side: str
    shape: str
    radii: np.ndarray
    points: np.ndarray
    levels: np.ndarray  # n with r_n = 2^-n for the default radii, else 1..N
    offset_ratio: float | None = None

    def __len__(self):
        return self.points.size


def _side_of(c: Curve, frame: NormalizedFrame, z: complex) -> str:
    try:
        return classify_side(c, frame, z)
    except SideError:
        if not c.closed:
            raise
        inside = abs(winding_number(c, z)) > 0.5
        return "left" if inside == (c.orientation > 0) else "right"


def make_sequence(c: Curve, frame: NormalizedFrame, side: str = "left", shape: str = "normal",
                  radii=None, offset_ratio: float = 0.5, points=None) -> ApproachSequence:
    """Points ``z_n`` approaching ``frame.base_point`` from one side.

    ``normal``: ``z_n = t + r_n i T`` (``T`` the unit tangent, ``+i`` for
    left and ``-i`` for right). ``tangential-graph``: in frame coordinates
    ``x_n + i (G(x_n) +/- offset_ratio x_n)`` with ``x_n = r_n`` and ``G`` the
    local graph, so the approach hugs the curve at a fixed slope above or
    below it. ``custom``: the given ``points`` (ill-conditioned near tangency;
    a warning is issued). Every point is checked to lie on ``side``.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    if shape == "tangential":
        shape = "tangential-graph"
    if shape not in SHAPES:
        raise ValueError(f"shape must be one of {SHAPES}, got {shape!r}")
    sign = 1.0 if side == "left" else -1.0
    t = frame.base_point
    if shape == "custom":
        if points is None:
            raise ValueError("custom sequences need explicit points")
        z = np.asarray(points, dtype=complex).ravel()
        warnings.warn("custom approach sequences are not checked for near-tangency; "
                      "the lateral limit can be ill-conditioned", stacklevel=2)
        r = np.abs(z - t)
        levels = np.arange(1, z.size + 1)
    else:
        if radii is None:
            n_all = np.arange(1, 31)
            reach = 1.0 + abs(offset_ratio) if shape == "tangential-graph" else 1.0
            levels = n_all[2.0 ** -n_all * reach < 0.9 * frame.footprint]
            if not c.closed and shape == "tangential-graph":
                levels = levels[2.0 ** -levels < 0.9 * frame.sigma_window]
            r = 2.0 ** -levels.astype(float)
        else:
            r = check_decreasing_to_zero(radii, "radii")
            levels = np.arange(1, r.size + 1)
        if shape == "normal":
            z = t + sign * 1j * r * frame.tangent
        else:
            offset_ratio = check_positive(offset_ratio, "offset_ratio")
            g = frame.graph(r)
            z = frame.from_frame(r + 1j * (g + sign * offset_ratio * r))
    for k, zk in enumerate(z):
        if abs(zk - t) == 0:
            raise SideError(f"z_{levels[k]} coincides with the target")
        got = _side_of(c, frame, complex(zk))
        if got != side:
            raise SideError(f"z_{levels[k]}={complex(zk)} is {got}, expected {side}")
    return ApproachSequence(complex(t), frame.tau0, side, shape, np.asarray(r, float), np.asarray(z, complex),
                            np.asarray(levels, int), offset_ratio if shape == "tangential-graph" else None)


# ---------------------------------------------------------------------------
# convergence experiments


@dataclass(frozen=True)
class ConvergenceRecord:
    n: int
    z: complex
    phi: complex
    abs_error: float
    quad_error: float


@dataclass(frozen=True)
class ConvergenceReport:
    side: str
    target: complex
    limit: complex
    records: list
    verdict: str
    final_error: float
    tol: float
    truncated: bool = False
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"

    def errors(self) -> np.ndarray:
        return np.array([r.abs_error for r in self.records])

    def values(self) -> np.ndarray:
        return np.array([r.phi for r in self.records])


def converged_tail(errors, tol: float, window: int = 5) -> bool:
    """Last ``window`` errors are ``<= tol`` and never grow by more than 2x
    (values below the rounding floor count as equal)."""
    e = np.maximum(np.asarray(errors, dtype=float), NOISE_FLOOR)
    if e.size < window:
        return False
    tail = e[-window:]
    return bool(np.all(tail <= max(tol, NOISE_FLOOR)) and np.all(tail[1:] <= 2 * tail[:-1]))


def _evaluate_all(c, d, zs, cfg):
    def one(z):
        return evaluate_transform(c, d, complex(z), cfg)

    workers = min(thread_count(), len(zs)) or 1
    if workers == 1:
        return [one(z) for z in zs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, zs))


def _run(c, d, seq, cfg, limit, tol):
    results = []
    message = ""
    try:
        results = _evaluate_all(c, d, seq.points, cfg)
    except QuadratureError as exc:
        message = f"quadrature failed: {exc}"
    records = []
    truncated = bool(message)
    for k, res in enumerate(results):
        err = abs(res.value - limit) if limit is not None else float("nan")
        ref = err if limit is not None else (abs(res.value - results[k - 1].value) if k else np.inf)
        if not res.converged or res.error > 0.1 * max(ref, tol):
            truncated = True
            message = f"stopped at n={seq.levels[k]}: quadrature error {res.error:.3g} too large"
            break
        records.append(ConvergenceRecord(int(seq.levels[k]), complex(seq.points[k]), res.value, float(err),
                                         res.error))
    return records, truncated, message


def run_convergence(c: Curve, d: Density, seq: ApproachSequence, cfg: TransformConfig | None = None,
                    limit: complex | None = None, bv: BoundaryValue | None = None) -> ConvergenceReport:
    """Evaluate ``Phi(z_n)`` along ``seq`` and compare with the lateral boundary value.

    The reference is ``Phi^+`` for left sequences and ``Phi^-`` for right
    ones, from :func:`boundary_values` unless ``limit`` is given. Points are
    evaluated concurrently (``PLEMELJ_THREADS``) and reported in order. The
    run is cut short once the quadrature error exceeds 10% of the current
    distance to the limit, so noise is not mistaken for divergence.
    """
    cfg = cfg or TransformConfig()
    if limit is None:
        bv = bv or boundary_values(c, d, seq.tau, cfg)
        limit = bv.limit(seq.side)
    records, truncated, message = _run(c, d, seq, cfg, limit, cfg.tol)
    errors = [r.abs_error for r in records]
    verdict = "converged" if converged_tail(errors, cfg.tol) else "not-converged"
    final = errors[-1] if errors else float("inf")
    return ConvergenceReport(seq.side, seq.target, complex(limit), records, verdict, float(final), cfg.tol,
                             truncated, message)


@dataclass(frozen=True)
class LateralLimit:
    """Limit of ``Phi(z_n)`` estimated from the sequence alone (Cauchy gaps)."""

    side: str
    value: complex
    error: float
    gaps: np.ndarray  # |Phi(z_{n+1}) - Phi(z_n)|
    converged: bool
    records: list


def lateral_limit(c: Curve, d: Density, seq: ApproachSequence, cfg: TransformConfig | None = None) -> LateralLimit:
    """Limit of ``Phi(z_n)`` from the values alone.

    With radii halving each step, ``Phi(z_n) - L ~ C r_n`` (times a log for
    merely Dini densities), so ``2 Phi(z_n) - Phi(z_{n-1})`` removes the
    leading term. The error is the change of that extrapolant over the last
    step. The run counts as settled when this error is within ``cfg.tol`` and
    the raw gaps shrink (never growing by more than 2x) over the last 5 steps.
    """
    cfg = cfg or TransformConfig()
    records, _, _ = _run(c, d, seq, cfg, None, cfg.tol)
    vals = np.array([r.phi for r in records])
    if vals.size < 6:
        last = complex(vals[-1]) if vals.size else complex("nan")
        return LateralLimit(seq.side, last, float("inf"), np.array([]), False, records)
    gaps = np.abs(np.diff(vals))
    r = seq.radii[:vals.size]
    if np.allclose(r[1:] / r[:-1], 0.5, rtol=1e-12, atol=0):
        ext = 2 * vals[1:] - vals[:-1]
        value, err = complex(ext[-1]), float(abs(ext[-1] - ext[-2]))
    else:
        value, err = complex(vals[-1]), float(2 * gaps[-1])
    shrinking = bool(np.all(np.maximum(gaps[-5:][1:], NOISE_FLOOR) <= 2 * np.maximum(gaps[-5:][:-1], NOISE_FLOOR)))
    return LateralLimit(seq.side, value, err, gaps, bool(err <= cfg.tol and shrinking), records)


@dataclass(frozen=True)
class JumpReport:
    jump_residual: float
    sum_residual: float
    left: LateralLimit
    right: LateralLimit
    boundary: BoundaryValue
    tol: float

    def __iter__(self):
        return iter((self.jump_residual, self.sum_residual))

    @property
    def holds(self) -> bool:
        return self.jump_residual <= self.tol and self.sum_residual <= self.tol


def verify_jump(c: Curve, d: Density, tau, cfg: TransformConfig | None = None, depth: int = 20,
                shape: str = "normal") -> JumpReport:
    """Jump and sum residuals from two independent one-sided runs.

    ``jump_residual = |(L+ - L-) - phi(t)|`` and
    ``sum_residual = |(L+ + L-) - 2 pv_part|`` where ``L+/-`` are the limits of
    left/right sequences estimated from their own Cauchy gaps, never from the
    Plemelj formula. Unpacks as ``(jump_residual, sum_residual)``. Raises
    :class:`ConvergenceError` when either side fails to settle.
    """
    cfg = cfg or TransformConfig()
    frame = normalize_at(c, check_real(tau, "tau"))
    limits = []
    for side in SIDES:
        seq = make_sequence(c, frame, side, shape)
        keep = seq.levels <= depth
        seq = ApproachSequence(seq.target, seq.tau, side, seq.shape, seq.radii[keep], seq.points[keep],
                               seq.levels[keep], seq.offset_ratio)
        lim = lateral_limit(c, d, seq, cfg)
        if not lim.converged:
            raise ConvergenceError(f"{side} sequence did not settle (limit error {lim.error:.3g})")
        limits.append(lim)
    left, right = limits
    bv = boundary_values(c, d, frame.tau0, cfg)
    jump = abs((left.value - right.value) - bv.density_value)
    total = abs((left.value + right.value) - 2 * bv.pv_part)
    return JumpReport(float(jump), float(total), left, right, bv, cfg.tol)
