import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint
from scipy import special

from outlier_lab.errors import DomainError, InvalidArgumentError
from outlier_lab.limit_models import (
    BulkPoint,
    bulk_scaled_density,
    critical_count_scaled,
    expected_count,
    limit_count_fraction,
    limit_first_moment,
    limit_imag_density,
    limit_imag_tail,
    scaled_bulk_value,
    semicircle,
    solve_extreme_scale,
    window_count,
    window_count_gaussian,
)


def _count_scipy(y: float, gamma: float) -> float:
    c = gamma + 1.0 / gamma
    return special.ive(1, 2.0 * y) * math.exp((2.0 - c) * y) / y


def test_semicircle_values() -> None:
    assert semicircle(0.0) == pytest.approx(1.0 / math.pi, rel=1e-15)
    assert semicircle(2.0) == 0.0
    assert semicircle(-2.0) == 0.0
    assert semicircle(3.0) == 0.0
    v, _ = sint.quad(semicircle, -2.0, 2.0, epsabs=1e-13, epsrel=1e-13)
    assert abs(v - 1.0) <= 1e-10


def test_bulk_point_domain() -> None:
    with pytest.raises(DomainError):
        BulkPoint(2.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        BulkPoint(0.0, 0.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        BulkPoint(0.0, 1.0, -1.0)


def test_bulk_small_y_series() -> None:
    # -d/dy [e^{-gy} sinh y / y] = g - (g^2 + 1/3) y + O(y^2)
    for X, gamma in [(0.0, 1.0), (0.7, 2.0), (-1.5, 0.3)]:
        pt = BulkPoint(X, 1e-4, gamma)
        g = pt.g
        series = g - (g * g + 1.0 / 3.0) * 1e-4
        assert bulk_scaled_density(pt) == pytest.approx(series, abs=1e-7 * (1 + g**3))
    assert bulk_scaled_density(BulkPoint(0.0, 1e-9, 1.0)) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.xfail(strict=True, reason="stated tolerance ignores the O(y) term, which is 1.3e-4 here")
def test_bulk_small_y_stated_tolerance() -> None:
    assert abs(bulk_scaled_density(BulkPoint(0.0, 1e-4, 1.0)) - 1.0) <= 1e-6


def test_bulk_normalization() -> None:
    v, _ = sint.quad(lambda y: bulk_scaled_density(BulkPoint(0.0, y, 2.0)), 0.0, np.inf, epsabs=1e-12, epsrel=1e-12, limit=200)
    assert abs(v - 1.0) <= 1e-8


def test_bulk_matches_finite_difference() -> None:
    g = BulkPoint(0.0, 1.0, 1.0).g
    f = lambda y: math.exp(-y * g) * math.sinh(y) / y  # noqa: E731
    h = 1e-6
    fd = -(f(1.0 + h) - f(1.0 - h)) / (2 * h)
    assert abs(bulk_scaled_density(BulkPoint(0.0, 1.0, 1.0)) - fd) <= 1e-6


@given(st.floats(1e-6, 200.0), st.floats(1.0, 50.0))
@settings(max_examples=200, deadline=None)
def test_bulk_nonnegative(y: float, g: float) -> None:
    assert scaled_bulk_value(g, y) >= 0.0


def test_imag_density_matches_derivative_form() -> None:
    y, gamma = 2.0, 1.5
    h = 1e-4
    fd = -(_count_scipy(y + h, gamma) - _count_scipy(y - h, gamma)) / (2 * h)
    assert abs(limit_imag_density(y, gamma) - fd) <= 1e-8


@pytest.mark.parametrize("gamma", [0.3, 0.5, 1.0, 2.0, 4.0])
def test_imag_density_against_scipy_bessel(gamma: float) -> None:
    c = gamma + 1.0 / gamma
    for y in [1e-3, 0.1, 1.0, 7.0, 40.0]:
        ref = math.exp((2 - c) * y) / y * (c * special.ive(1, 2 * y) - 2 * special.ive(2, 2 * y))
        assert limit_imag_density(y, gamma) == pytest.approx(ref, rel=1e-10)


@pytest.mark.parametrize("gamma", [0.5, 2.0])
def test_first_moment(gamma: float) -> None:
    v, _ = sint.quad(lambda y: y * limit_imag_density(y, gamma), 0.0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    assert v == pytest.approx(0.5, abs=1e-8)
    assert limit_first_moment(gamma) == pytest.approx(0.5, abs=1e-15)


def test_first_moment_equals_count_integral() -> None:
    # int y rho dy = int count dy by parts
    v, _ = sint.quad(lambda y: limit_count_fraction(y, 3.0), 0.0, np.inf, epsabs=1e-13, limit=400)
    assert v == pytest.approx(1.0 / 3.0, abs=1e-8)


def test_tail_gamma_one() -> None:
    y = 50.0
    lead = 3.0 / (4.0 * math.sqrt(math.pi)) * y**-2.5
    assert abs(limit_imag_density(y, 1.0) / lead - 1.0) <= 0.05


def test_tail_gamma_not_one() -> None:
    for gamma in [0.5, 2.0]:
        y = 200.0
        assert limit_imag_density(y, gamma) == pytest.approx(limit_imag_tail(y, gamma), rel=1e-3)


def test_tail_crossover_near_one() -> None:
    r = limit_imag_density(1e3, 1.001) / limit_imag_tail(1e3, 1.001)
    assert 0.5 <= r <= 2.0


def test_count_fraction_small_y() -> None:
    assert limit_count_fraction(1e-10, 2.0) == pytest.approx(1.0, abs=1e-8)


def test_count_fraction_decreasing() -> None:
    ys = np.linspace(1e-3, 30.0, 1000)
    v = np.array([limit_count_fraction(y, 1.0) for y in ys])
    assert np.all(np.diff(v) < 0.0)
    assert np.all((v >= 0.0) & (v <= 1.0))


def test_count_fraction_is_tail_integral() -> None:
    for y in [0.1, 1.0, 5.0]:
        v, _ = sint.quad(lambda t: limit_imag_density(t, 1.7), y, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
        assert abs(v - limit_count_fraction(y, 1.7)) <= 1e-8


def test_expected_count_variants() -> None:
    N, gamma = 10**4, 2.0
    Y = 100.0 / N
    b = expected_count(N, Y, gamma)
    a = expected_count(N, Y, gamma, variant="asymptotic")
    assert abs(a / b - 1.0) <= 0.05
    with pytest.raises(InvalidArgumentError):
        expected_count(N, Y, gamma, variant="nope")


def test_expected_count_critical_scaling() -> None:
    N = 10**9
    alpha, m = 1.0, 1.0
    v = expected_count(N, m * N ** (-1 / 3), 1.0 + alpha * N ** (-1 / 3))
    ref = math.exp(-m * alpha**2) / (2 * math.sqrt(math.pi) * m**1.5)
    assert abs(v / ref - 1.0) <= 0.02
    assert critical_count_scaled(m, alpha) == pytest.approx(ref, rel=1e-15)


@given(st.integers(10, 10**6), st.floats(1e-6, 1.0), st.floats(0.2, 5.0))
@settings(max_examples=100, deadline=None)
def test_expected_count_consistency(N: int, Y: float, gamma: float) -> None:
    assert N * limit_count_fraction(N * Y, gamma) == pytest.approx(expected_count(N, Y, gamma), rel=1e-12)


def test_window_full_equals_count() -> None:
    for N, Y, gamma in [(1000, 0.002, 1.0), (10**4, 0.01, 2.0), (50, 0.1, 0.5)]:
        w = window_count(N, Y, gamma, 2.0)
        assert w == pytest.approx(N * limit_count_fraction(N * Y, gamma), rel=1e-6)


def test_window_monotone_in_w() -> None:
    N, gamma = 1000, 1.0
    Y = 20.0 / N
    vals = [window_count(N, Y, gamma, W) for W in (2.0, 1.0, 0.5, 0.25)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_window_gaussian_approximation() -> None:
    N, gamma = 10**4, 2.0
    Y = 100.0 / N
    assert abs(window_count_gaussian(N, Y, gamma, 0.1) / window_count(N, Y, gamma, 0.1) - 1.0) <= 0.05


def test_window_invalid() -> None:
    with pytest.raises(InvalidArgumentError):
        window_count(100, 0.1, 1.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        window_count(100, 0.1, 1.0, 2.5)


def test_extreme_scale_root() -> None:
    for gamma in [0.5, 1.0, 2.0]:
        for N in [10, 10**3, 10**6]:
            Ye = solve_extreme_scale(N, gamma)
            assert abs(expected_count(N, Ye, gamma) - 1.0) <= 1e-9


def test_extreme_scale_slopes() -> None:
    Ns = np.array([10.0**k for k in range(3, 10)])
    ye = np.array([solve_extreme_scale(int(N), 1.0) for N in Ns])
    slope = np.polyfit(np.log(Ns), np.log(ye), 1)[0]
    assert abs(slope + 1.0 / 3.0) <= 0.05
    ratio = np.array([N * solve_extreme_scale(int(N), 2.0) / math.log(N) for N in Ns])
    assert np.all((ratio >= 0.1) & (ratio <= 10.0))


def test_extreme_scale_invalid() -> None:
    with pytest.raises(InvalidArgumentError):
        solve_extreme_scale(5, 1.0)
