import mpmath as mp
import numpy as np
import pytest

from plemelj import (ConvergenceError, OnCurveError, SideError, TransformConfig, boundary_values, builtin_density,
                     cauchy_transform, make_builtin_curve, make_sequence, normalize_at, run_convergence, verify_jump)
from plemelj.transform import (ApproachSequence, converged_tail, evaluate_transform, lateral_limit, thread_count)


def seg_const(z):
    return (np.log(z - 1) - np.log(z + 1)) / (2j * np.pi)


def seg_linear(z):
    return (2 + z * (np.log(z - 1) - np.log(z + 1))) / (2j * np.pi)


# -- off-curve values ---------------------------------------------------------

@pytest.mark.parametrize("z", [1j, 0.3 + 0.2j, -0.7 - 1e-3j, 2.5 + 0.1j, 1 + 1j, 0.1 - 1e-7j])
def test_segment_closed_forms(segment, one, z):
    assert abs(cauchy_transform(segment, one, z) - seg_const(z)) < 1e-10
    assert abs(cauchy_transform(segment, builtin_density("linear", [1, 0]), z) - seg_linear(z)) < 1e-10


def test_segment_example_sign(segment, one):
    assert cauchy_transform(segment, one, 1j) == pytest.approx(0.25, abs=1e-12)


@pytest.mark.parametrize("z", [0, 0.5j, -0.9 + 0.1j, 0.999, 1.001, 2, -3 + 4j])
def test_circle_inside_outside(circle, one, z):
    inside = abs(z) < 1
    assert abs(cauchy_transform(circle, one, z) - (1 if inside else 0)) < 1e-9
    lin = cauchy_transform(circle, builtin_density("linear", [1, 0]), z)
    assert abs(lin - (z if inside else 0)) < 1e-9


@pytest.mark.parametrize("z", [0.2 + 0.5j, 0.31 + 1e-4j, -0.5 - 0.05j])
def test_holder_density_against_mpmath(segment, z):
    d = builtin_density("holder-power", [0.5, 0.3])
    with mp.workdps(25):
        zz = mp.mpc(z.real, z.imag)
        pts = sorted({-1, mp.mpf("0.3"), zz.real, 1})
        ref = mp.quad(lambda s: mp.sqrt(abs(s - mp.mpf("0.3"))) / (s - zz), pts) / (2j * mp.pi)
    assert abs(cauchy_transform(segment, d, z) - complex(ref)) < 1e-10


def test_holomorphic_cauchy_riemann(segment):
    d = builtin_density("holder-power", [0.5, 0.3])
    rng = np.random.default_rng(7)
    zs = []
    while len(zs) < 100:
        z = complex(rng.uniform(-1.5, 1.5), rng.uniform(-1, 1))
        if segment.distance(z) >= 1e-2:
            zs.append(z)
    h = 1e-5
    st = np.array([2, 1, -1, -2])
    w = np.array([-1, 8, -8, 1]) / 12
    for z in zs:
        fx = np.array([cauchy_transform(segment, d, z + k * h) for k in st])
        fy = np.array([cauchy_transform(segment, d, z + 1j * k * h) for k in st])
        dx, dy = w @ fx / h, w @ fy / (1j * h)
        assert abs(dx - dy) < 1e-6 * max(1.0, abs(dx))


@pytest.mark.parametrize("r", [10, 100])
def test_decay_at_infinity(segment, circle, one, r):
    for ang in np.linspace(0, 2 * np.pi, 7):
        z = r * np.exp(1j * ang)
        # segment: Phi ~ -(1/2 pi i) (2/z); circle with phi = 1 vanishes outside
        assert abs(z * cauchy_transform(segment, one, z) + 2 / (2j * np.pi)) < 1 / r
        assert abs(cauchy_transform(circle, one, z)) < 1e-12


@pytest.mark.parametrize("z", [0.3, -1.0, 1.0, 0.3 + 1e-14j])
def test_on_curve_rejected(segment, one, z):
    with pytest.raises(OnCurveError):
        cauchy_transform(segment, one, z)


def test_near_curve_accuracy(segment, one):
    for y in (1e-3, 1e-6, 1e-9, 1e-12):
        for x in (-0.5, 0.0, 0.7):
            res = evaluate_transform(segment, one, x + 1j * y)
            assert res.converged
            assert abs(res.value - seg_const(x + 1j * y)) < 1e-11
            assert res.distance == pytest.approx(y, rel=1e-6)


def test_declared_kinks_are_breakpoints(segment):
    # a log-type cusp at 0.0249 inside a coarse panel: without the declared kink the
    # adaptive rule has no reason to look there
    d = builtin_density("dini-log", [-np.exp(-3) / 2])
    o = -np.exp(-3) / 2
    z = 0.4 + 0.05j
    with mp.workdps(25):
        zz = mp.mpc(z.real, z.imag)
        mo = -mp.e ** -3 / 2
        f = lambda s: 1 / mp.log(s - mo) ** 2 / (s - zz)
        ref = (mp.quad(f, [mo, mo + mp.e ** -3 / 2, mo + mp.e ** -3])
               + mp.quad(lambda s: 1 / (9 * (s - zz)), [mo + mp.e ** -3, 1])) / (2j * mp.pi)
    assert np.allclose(d.kink_parameters(segment), [o, -o])
    assert abs(cauchy_transform(segment, d, z) - complex(ref)) < 1e-10


# -- boundary values ------------------------------------------------------------

def test_segment_boundary_values(segment, one):
    bv = boundary_values(segment, one, 0.0)
    assert abs(bv.phi_plus - 0.5) < 1e-10 and abs(bv.phi_minus + 0.5) < 1e-10
    assert bv.converged and bv.jump() == pytest.approx(1.0)
    assert bv.limit("left") == bv.phi_plus and bv.limit("right") == bv.phi_minus
    with pytest.raises(ValueError):
        bv.limit("up")


@pytest.mark.parametrize("tau", np.linspace(0, 2 * np.pi, 8, endpoint=False))
def test_circle_boundary_values(circle, one, tau):
    bv = boundary_values(circle, one, tau)
    assert abs(bv.phi_plus - 1) < 1e-6 and abs(bv.phi_minus) < 1e-6
    assert abs(bv.pv.value - np.pi * 1j) < 1e-6


# -- sequences --------------------------------------------------------------------

def test_normal_sequence(segment):
    frame = normalize_at(segment, 0.0)
    seq = make_sequence(segment, frame, "left")
    assert seq.levels[0] == 1 and np.allclose(seq.points, 1j * 2.0 ** -seq.levels)
    right = make_sequence(segment, frame, "right")
    assert np.allclose(right.points, -1j * 2.0 ** -right.levels)


def test_default_radii_respect_the_footprint(segment):
    frame = normalize_at(segment, 0.9)
    seq = make_sequence(segment, frame, "left")
    assert np.all(seq.radii < 0.9 * frame.footprint)
    assert seq.levels[0] > 1


def test_tangential_sequence_on_parabola():
    c = make_builtin_curve("parabola-graph", [1.0])
    frame = normalize_at(c, 0.0)
    seq = make_sequence(c, frame, "left", "tangential")
    assert seq.shape == "tangential-graph"
    assert seq.points[0] == pytest.approx(0.5 + 0.5j, abs=1e-12)
    below = make_sequence(c, frame, "right", "tangential-graph")
    assert below.points[0] == pytest.approx(0.5 + 0.0j, abs=1e-12)


def test_sequence_side_is_checked(segment):
    frame = normalize_at(segment, 0.0)
    with pytest.warns(UserWarning):
        with pytest.raises(SideError):
            make_sequence(segment, frame, "left", "custom", points=[0.1j, -0.01j])
    with pytest.raises(ValueError):
        make_sequence(segment, frame, "above")
    with pytest.raises(ValueError):
        make_sequence(segment, frame, "left", "spiral")
    with pytest.raises(ValueError):
        make_sequence(segment, frame, "left", "custom")


def test_circle_sides_use_interior(circle):
    frame = normalize_at(circle, 0.0)
    assert np.all(np.abs(make_sequence(circle, frame, "left").points) < 1)
    assert np.all(np.abs(make_sequence(circle, frame, "right").points) > 1)


# -- convergence experiments ---------------------------------------------------------

@pytest.mark.parametrize("side", ["left", "right"])
def test_segment_convergence(segment, one, side):
    frame = normalize_at(segment, 0.0)
    seq = make_sequence(segment, frame, side)
    rep = run_convergence(segment, one, seq)
    assert rep.converged and not rep.truncated
    by_n = {r.n: r.abs_error for r in rep.records}
    assert by_n[20] <= 1e-6
    assert rep.limit == pytest.approx(0.5 if side == "left" else -0.5)


@pytest.mark.parametrize("side", ["left", "right"])
def test_circle_convergence(circle, one, side):
    seq = make_sequence(circle, normalize_at(circle, 1.0), side)
    rep = run_convergence(circle, one, seq)
    assert rep.converged
    assert np.all(rep.errors() < 1e-9)


def test_normal_and_tangential_limits_agree():
    c = make_builtin_curve("parabola-graph", [1.0])
    d = builtin_density("holder-power", [0.5, 0.3])
    frame = normalize_at(c, 0.0)
    for side in ("left", "right"):
        a = lateral_limit(c, d, make_sequence(c, frame, side, "normal"))
        b = lateral_limit(c, d, make_sequence(c, frame, side, "tangential-graph"))
        assert a.converged and b.converged
        assert abs(a.value - b.value) < 1e-6
        assert abs(a.value - boundary_values(c, d, 0.0).limit(side)) < 1e-6


def test_discontinuous_density_does_not_converge_to_plemelj(segment):
    step = builtin_density("step")
    rep = run_convergence(segment, step, make_sequence(segment, normalize_at(segment, 0.0), "left"))
    assert not rep.converged
    assert rep.final_error == pytest.approx(0.5, abs=0.01)  # the one-point change is invisible to Phi


def test_truncation_when_quadrature_is_too_coarse(segment, one):
    cfg = TransformConfig(abs_tol=1e-4, rel_tol=1e-4, max_subdivisions=8)
    rep = run_convergence(segment, one, make_sequence(segment, normalize_at(segment, 0.0), "left"), cfg)
    assert rep.truncated and "quadrature" in rep.message
    assert not rep.converged


def test_converged_tail_rule():
    assert converged_tail([1e-3, 1e-6, 1e-7, 1e-7, 1e-8, 1e-9], 1e-6)
    assert not converged_tail([1e-3, 1e-4, 1e-5, 1e-7, 1e-7, 1e-8], 1e-6)
    assert not converged_tail([1e-7, 1e-7, 3e-7, 1e-7, 1e-7], 1e-6)  # grew by 3x
    assert not converged_tail([1e-7] * 4, 1e-6)
    assert converged_tail([1e-16, 0.0, 1e-15, 1e-16, 0.0], 1e-6)  # rounding floor


def test_thread_count_and_determinism(segment, monkeypatch):
    d = builtin_density("holder-power", [0.5, 0.3])
    seq = make_sequence(segment, normalize_at(segment, 0.0), "left")
    monkeypatch.setenv("PLEMELJ_THREADS", "1")
    assert thread_count() == 1
    serial = run_convergence(segment, d, seq).values()
    monkeypatch.setenv("PLEMELJ_THREADS", "4")
    assert thread_count() == 4
    threaded = run_convergence(segment, d, seq).values()
    assert np.array_equal(serial, threaded)
    monkeypatch.setenv("PLEMELJ_THREADS", "0")
    assert thread_count() >= 1
    for bad in ("-1", "two"):
        monkeypatch.setenv("PLEMELJ_THREADS", bad)
        with pytest.raises(ValueError):
            thread_count()


# -- jump verification ---------------------------------------------------------

def test_verify_jump_segment(segment, one):
    rep = verify_jump(segment, one, 0.0)
    jump, total = rep
    assert rep.holds and jump < 1e-6 and total < 1e-6
    assert abs(rep.left.value - 0.5) < 1e-6 and abs(rep.right.value + 0.5) < 1e-6


def test_verify_jump_circle(circle, one):
    assert verify_jump(circle, one, 2.0).holds


def test_verify_jump_step_density(segment):
    rep = verify_jump(segment, builtin_density("step"), 0.0)
    assert not rep.holds
    assert rep.jump_residual == pytest.approx(1.0, abs=0.01)


def test_verify_jump_reports_unsettled_sides(segment, one):
    with pytest.raises(ConvergenceError):
        verify_jump(segment, one, 0.0, depth=4)


def test_verify_jump_centered_dini(segment, centered_dini):
    rep = verify_jump(segment, centered_dini, 0.0)
    assert rep.jump_residual < 1e-4 and rep.sum_residual < 1e-4
