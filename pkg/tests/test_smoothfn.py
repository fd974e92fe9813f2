import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import make_smoothing_spline

from fsurv.smoothfn import (
    LAMBDA_GRID,
    fit_penalized,
    gcv_score,
    integrate,
    select_lambda,
    trapezoid_aggregate,
    write_curve_csv,
)


def _times(rng, n, lo=0.0, hi=10.0):
    return np.sort(rng.uniform(lo, hi, n)) + np.arange(n) * 1e-6


@pytest.mark.parametrize("lam", [1e-4, 0.1, 3.0, 100.0])
def test_matches_scipy_smoothing_spline(lam):
    rng = np.random.default_rng(1)
    t = _times(rng, 30)
    y = np.sin(t) + rng.normal(0, 0.2, t.size)
    ours = fit_penalized(t, y, lam)
    ref = make_smoothing_spline(t, y, lam=lam)
    probe = np.linspace(t[0], t[-1], 301)
    assert np.max(np.abs(ours(probe) - ref(probe))) < 1e-8


@pytest.mark.parametrize("lam", [0.0, 1e-6, 1.0, 1e4, 1e12])
def test_affine_data_reproduced(lam):
    t = np.linspace(0, 5, 12)
    y = 3.0 - 0.7 * t
    curve = fit_penalized(t, y, lam)
    assert np.max(np.abs(curve(t) - y)) < 1e-9


def test_lambda_zero_interpolates():
    rng = np.random.default_rng(2)
    t = _times(rng, 20)
    y = rng.normal(size=20)
    assert np.max(np.abs(fit_penalized(t, y, 0.0)(t) - y)) < 1e-9


def test_huge_lambda_gives_least_squares_line():
    rng = np.random.default_rng(3)
    t = _times(rng, 25)
    y = np.cos(t) + 0.5 * t
    slope, intercept = np.polyfit(t, y, 1)
    curve = fit_penalized(t, y, 1e12)
    assert np.max(np.abs(curve(t) - (intercept + slope * t))) < 1e-6


def test_duplicate_times_rejected_and_small_inputs_fall_back():
    with pytest.raises(ValueError):
        fit_penalized([0, 1, 1, 2], [0, 1, 2, 3], 1.0)
    with pytest.warns(UserWarning):
        curve = fit_penalized([0.0, 1.0, 3.0], [1.0, 0.0, 4.0], 1.0)
    assert np.allclose(curve([0.0, 1.0, 3.0]), [1.0, 0.0, 4.0])


def test_outside_domain_rejected():
    curve = fit_penalized(np.arange(6.0), np.arange(6.0) ** 2, 1.0)
    with pytest.raises(ValueError):
        curve(6.5)
    with pytest.raises(ValueError):
        integrate(curve, 2.0, 1.0)
    with pytest.raises(ValueError):
        integrate(curve, -1.0, 1.0)


def test_integrate_examples_and_additivity():
    t = np.linspace(0, 4, 9)
    assert integrate(fit_penalized(t, np.full(9, 2.5), 1.0), 0.5, 3.0) == pytest.approx(2.5 * 2.5, abs=1e-12)
    assert integrate(fit_penalized(t, t.copy(), 1.0), 0.0, 2.0) == pytest.approx(2.0, abs=1e-12)
    rng = np.random.default_rng(4)
    curve = fit_penalized(t, rng.normal(size=9), 0.3)
    for a, b, c in [(0.0, 1.3, 4.0), (0.2, 2.0, 2.7)]:
        assert integrate(curve, a, b) + integrate(curve, b, c) == pytest.approx(integrate(curve, a, c), abs=1e-12)


def test_integrate_exact_on_piecewise_cubics():
    # lambda = 0 through samples of a single cubic with natural ends is not that
    # cubic, so compare against the antiderivative of each stored segment
    rng = np.random.default_rng(5)
    t = _times(rng, 8, 0, 3)
    curve = fit_penalized(t, rng.normal(size=8), 0.7)
    total = 0.0
    for k in range(t.size - 1):
        c3, c2, c1, c0 = curve.coefficients[:, k]
        h = t[k + 1] - t[k]
        total += c3 * h**4 / 4 + c2 * h**3 / 3 + c1 * h**2 / 2 + c0 * h
    assert integrate(curve, t[0], t[-1]) == pytest.approx(total, abs=1e-12)


def test_trapezoid_aggregate_examples():
    assert trapezoid_aggregate([0, 1, 2, 3], [4, 4, 4, 4], 0.5, 2.5) == pytest.approx(8.0)
    assert trapezoid_aggregate([0, 2], [0, 2], 0, 2) == 2.0
    with pytest.raises(ValueError):
        trapezoid_aggregate([0, 1, 2], [0, 1, 2], 1.5, 2.5)


def test_trapezoid_agrees_with_interpolating_spline_on_dense_data():
    t = np.linspace(0, 2 * np.pi, 400)
    y = np.sin(t)
    curve = fit_penalized(t, y, 0.0)
    # trapezoid error bound (b - a) h^2 max|f''| / 12 is about 5e-5 here
    assert abs(trapezoid_aggregate(t, y, 0.3, 2.9) - integrate(curve, 0.3, 2.9)) < 1e-4
    assert abs(integrate(curve, 0.3, 2.9) - (np.cos(0.3) - np.cos(2.9))) < 1e-7


def test_select_lambda_deterministic_and_recovers_sinusoid():
    t = np.linspace(0, 10, 50)
    y = 3 * np.sin(t)
    lam = select_lambda(t, y)
    assert lam in LAMBDA_GRID
    assert select_lambda(t, y) == lam
    rmse = np.sqrt(np.mean((fit_penalized(t, y, lam)(t) - y) ** 2))
    assert rmse < 0.02 * 3


def test_select_lambda_prefers_heavy_smoothing_for_noise():
    median = np.median(LAMBDA_GRID)
    hits = 0
    for seed in range(10):
        rng = np.random.default_rng(seed)
        t = np.linspace(0, 10, 40)
        hits += select_lambda(t, rng.normal(size=40)) >= median
    assert hits >= 8


def test_select_lambda_needs_six_points():
    with pytest.raises(ValueError):
        select_lambda(np.arange(5.0), np.arange(5.0))


def test_gcv_score_finite():
    t = np.linspace(0, 1, 10)
    assert np.isfinite(gcv_score(t, np.sin(t), 0.01))


@given(st.integers(5, 30), st.floats(1e-4, 1e3), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_fit_is_linear_in_y(n, lam, seed):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.choice(np.arange(200), size=n, replace=False)) / 20.0
    y1, y2 = rng.normal(size=n), rng.normal(size=n)
    f1, f2, f12 = (fit_penalized(t, y, lam)(t) for y in (y1, y2, y1 + y2))
    assert np.max(np.abs(f12 - f1 - f2)) < 1e-9 * max(1.0, np.abs(f12).max())


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0, 1e6))
@settings(max_examples=40, deadline=None)
def test_affine_property(a, b, lam):
    t = np.linspace(1, 7, 9)
    y = a + b * t
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert np.max(np.abs(fit_penalized(t, y, lam)(t) - y)) < 1e-9 * max(1.0, np.abs(y).max())


def test_curve_csv_export(tmp_path):
    curve = fit_penalized(np.linspace(0, 1, 8), np.linspace(0, 1, 8) ** 2, 0.1)
    path = tmp_path / "curve.csv"
    write_curve_csv(curve, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 201
    t, v = (float(x) for x in lines[100].split(","))
    assert v == curve(t)
