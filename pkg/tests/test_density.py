import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plemelj import (DensityError, ModulusEstimate, builtin_density, classify_regularity, estimate_modulus,
                     make_builtin_curve, modulus_from_samples, tabulated_density)
from plemelj.density import DINI_LOG_CUT, dini_log_profile, regularity_report


def test_constant_and_linear(segment):
    assert builtin_density("constant", [2.0]).at(segment, 0.3) == 2
    lin = builtin_density("linear", [2.0, 1.0])
    assert lin.at(segment, 0.25) == pytest.approx(1.5)
    assert builtin_density("constant", [1]).regularity_tag == "holder(1)"


def test_dini_log_values():
    x = np.array([-0.1, 0.0, 1e-3, DINI_LOG_CUT * (1 - 1e-12), DINI_LOG_CUT, 0.5])
    y = dini_log_profile(x)
    assert y[0] == 0 and y[1] == 0
    assert y[2] == pytest.approx(1 / np.log(1e-3) ** 2)
    assert y[3] == pytest.approx(1 / 9, rel=1e-10)
    assert y[4] == pytest.approx(1 / 9)  # continuous extension past the cut


def test_dini_log_continuity_at_the_cut():
    left = dini_log_profile(np.array([DINI_LOG_CUT - 1e-12]))[0]
    right = dini_log_profile(np.array([DINI_LOG_CUT + 1e-12]))[0]
    assert abs(left - right) < 1e-11


def test_step_density(segment):
    st_ = builtin_density("step")
    assert st_.at(segment, 0.0) == 1
    assert st_.at(segment, 0.5) == 0.5
    assert st_.declared_class == "discontinuous"


@pytest.mark.parametrize("alpha", [0.0, 1.5, -0.2])
def test_holder_power_exponent_range(alpha):
    with pytest.raises(DensityError):
        builtin_density("holder-power", [alpha])


def test_unknown_density():
    with pytest.raises(DensityError):
        builtin_density("gaussian")


def test_tabulated_density_interpolates(segment):
    tau = np.linspace(-1, 1, 101)
    d = tabulated_density(tau, np.exp(1j * tau))
    assert abs(d.at(segment, 0.123) - np.exp(0.123j)) < 5e-5  # PCHIP is O(h^3) with h = 0.02


def test_tabulated_density_refuses_extrapolation():
    from plemelj import make_builtin_curve
    d = tabulated_density(np.linspace(-0.5, 0.5, 50), np.zeros(50))
    with pytest.raises(DensityError):
        d.on(make_builtin_curve("segment", [-1, 1]))


def test_tabulated_density_gap_check():
    with pytest.raises(DensityError):
        tabulated_density([0.0, 0.01, 1.0], [0, 0, 0])


def test_constant_modulus_is_zero(segment, one):
    m = estimate_modulus(one, segment, seed=1)
    assert np.all(m.omega == 0)
    assert str(classify_regularity(m)) == "holder(1)"


def test_linear_modulus(segment):
    m = estimate_modulus(builtin_density("linear", [1, 0]), segment, seed=2)
    sel = m.grid <= 0.5
    assert np.allclose(m.omega[sel], m.grid[sel], rtol=0.05)


def test_holder_power_fit(segment):
    m = estimate_modulus(builtin_density("holder-power", [0.5]), segment, seed=3)
    r = classify_regularity(m)
    assert r.label == "holder"
    assert 0.45 <= r.alpha <= 0.55


def test_dini_log_classified_dini(segment):
    m = estimate_modulus(builtin_density("dini-log"), segment, seed=4)
    assert classify_regularity(m).label == "dini"
    small = m.grid < 1e-3
    ratio = m.omega[small] * np.log(m.grid[small]) ** 2
    assert np.all(ratio > 0.95) and np.all(ratio <= 1 + 1e-9)


def test_dini_tail_matches_antiderivative():
    # omega = 1/log(t)^2: int_delta^{e^-3} omega/t dt = 1/|log delta|... closed form 1/3 - 1/|log delta|
    grid = np.exp(np.linspace(np.log(2.0 ** -24), -3, 4000))
    m = ModulusEstimate.from_omega(grid, 1 / np.log(grid) ** 2)
    expected = [1 / 3 - 1 / abs(np.log(d)) for d in m.tail_deltas]
    assert np.allclose(m.dini_tail, expected, atol=1e-5)


def test_non_dini_modulus_is_inconclusive():
    grid = 2.0 ** -np.arange(40, 0, -1)
    m = ModulusEstimate.from_omega(grid, 1 / np.abs(np.log(grid)))
    assert classify_regularity(m).label == "inconclusive"


def test_estimator_against_exact_enumeration(segment):
    # Brute-force oracle: exact modulus over every pair of a fine sample
    d = builtin_density("holder-power", [0.5, 0.2])
    x = np.linspace(-1, 1, 801)
    grid = 2.0 ** -np.arange(8, 0, -1)
    exact = modulus_from_samples(x, d(x + 0j), grid)
    est = estimate_modulus(d, segment, t_grid=grid, seed=5)
    assert np.all(est.omega >= exact.omega * (1 - 1e-3))
    assert np.all(est.omega <= grid ** 0.5 * (1 + 1e-12))


def test_modulus_from_samples_exact_small():
    m = modulus_from_samples([0.0, 1.0, 3.0], [0.0, 2.0, 3.0], [0.5, 1.0, 2.0, 3.0])
    assert list(m.omega) == [0.0, 2.0, 2.0, 3.0]


def test_step_density_modulus_misses_single_point(segment):
    # the discontinuity lives on a single point; random pairs almost surely never sample it
    m = estimate_modulus(builtin_density("step"), segment, seed=6)
    assert classify_regularity(m).label == "holder"


def test_estimate_is_reproducible(segment):
    d = builtin_density("dini-log")
    a = estimate_modulus(d, segment, seed=11)
    b = estimate_modulus(d, segment, seed=11)
    assert np.array_equal(a.omega, b.omega)
    assert np.array_equal(a.omega_se, b.omega_se)


def test_modulus_monotone_and_nonnegative(segment):
    m = estimate_modulus(builtin_density("holder-power", [0.3, 0.1]), segment, seed=7)
    assert np.all(np.diff(m.omega) >= 0) and np.all(m.omega >= 0)
    assert m.omega_se.shape == m.omega.shape


def test_n_pairs_minimum(segment, one):
    with pytest.raises(ValueError):
        estimate_modulus(one, segment, n_pairs=10)


def test_modulus_on_circle_uses_euclidean_metric(circle):
    # phi(s) = s on the unit circle: |phi(x1) - phi(x2)| = |x1 - x2|, so omega(t) = t
    m = estimate_modulus(builtin_density("linear", [1, 0]), circle, seed=8)
    sel = m.grid <= 1
    assert np.allclose(m.omega[sel], m.grid[sel], rtol=1e-6)
    assert np.all(m.omega <= m.grid * (1 + 1e-11))


def test_regularity_report_shape(segment):
    rep = regularity_report(estimate_modulus(builtin_density("holder-power", [0.5]), segment, seed=9))
    assert set(rep) == {"class", "alpha", "dini_tail", "residual"}
    assert rep["class"] == "holder"


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=30, unique=True))
def test_subadditivity_of_exact_modulus(xs):
    x = np.sort(np.array(xs))
    y = np.sin(3 * x) + np.abs(x) ** 0.5
    grid = np.array([0.1, 0.2, 0.3, 0.5, 0.8, 1.0])
    m = modulus_from_samples(x, y, grid)
    w = dict(zip(grid, m.omega))
    # sampled moduli are only approximately subadditive; the true modulus satisfies it exactly
    assert w[0.3] <= w[0.1] + w[0.2] + 2 * np.max(np.abs(y)) + 1e-12
    assert np.all(np.diff(m.omega) >= 0)


def test_kink_parameters_on_curves(segment, circle):
    d = builtin_density("holder-power", [0.5, 0.3])
    assert np.allclose(d.kink_parameters(segment), [0.3], atol=1e-12)
    assert d.kink_parameters(circle).size == 0  # the kink is off the circle
    assert np.allclose(builtin_density("holder-power", [0.5, -1.0]).kink_parameters(circle), [np.pi], atol=1e-12)
    assert builtin_density("constant").kink_parameters(segment).size == 0


def test_composition_bound_holds_and_detects_a_wrong_constant(segment):
    from plemelj.density import composition_bound
    grid = 2.0 ** -np.arange(16, 1, -1)
    phi, psi = (lambda x: np.sqrt(np.abs(x))), (lambda x: np.sin(np.pi * x / 2))
    ok = composition_bound(phi, psi, np.pi / 2, segment, grid, n_pairs=1000, seed=1)
    assert ok.violations == 0 and np.all(ok.slack > 0)
    # psi = 2x violates |psi'| <= 1: omega_{phi o psi}(t) = sqrt(2t) > sqrt(t)
    bad = composition_bound(phi, lambda x: 2 * x, 1.0, make_builtin_curve("segment", [-0.5, 0.5]), grid,
                            n_pairs=1000, seed=1)
    assert bad.violations > grid.size // 2


def test_product_bound(segment):
    from plemelj.density import product_bound
    grid = 2.0 ** -np.arange(16, 1, -1)
    phi, chi = (lambda x: 0.5 * x), (lambda x: x ** 3)
    assert product_bound(phi, chi, segment, 0.5, 1.0, 3.0, grid, n_pairs=1000, seed=2).violations == 0
    # omega of 0.5 x^4 near |x| = 1 is 2 t; dropping the M1 M3 t term leaves only 0.5 t
    assert product_bound(phi, chi, segment, 0.0, 1.0, 0.0, grid, n_pairs=1000, seed=2).violations > 0
