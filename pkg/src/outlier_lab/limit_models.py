"""Large-N limiting densities and counting functions.

Scales used throughout:

* ``X`` is the real part, ``nu(X)`` the semicircle density;
* ``y = 2*pi*nu(X)*N*Y`` for the local bulk density, and ``y = N*Y`` for
  the global imaginary-part density and the counting function.

``c = gamma + 1/gamma`` appears everywhere; it is ``>= 2`` with equality
only at ``gamma = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgumentError
from .quadrature import integrate
from .specfun import bessel_i


def _c(gamma: float) -> float:
    if not gamma > 0.0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma!r}")
    return gamma + 1.0 / gamma


def _check_pos(name: str, v: float) -> None:
    if not (math.isfinite(v) and v > 0.0):
        raise DomainError(f"{name} must be positive and finite, got {v!r}")


def semicircle(X):
    """``nu(X) = sqrt(4 - X^2) / (2 pi)`` on ``[-2, 2]``, zero outside."""
    Xa = np.asarray(X, dtype=float)
    out = np.sqrt(np.clip(4.0 - Xa * Xa, 0.0, None)) / (2.0 * math.pi)
    return float(out) if out.ndim == 0 else out


# --- local bulk density -----------------------------------------------------


@dataclass(frozen=True)
class BulkPoint:
    X: float
    y: float
    gamma: float

    def __post_init__(self) -> None:
        if not abs(self.X) < 2.0:
            raise DomainError(f"X must lie in (-2, 2), got {self.X!r}")
        _check_pos("y", self.y)
        _c(self.gamma)

    @property
    def g(self) -> float:
        return _c(self.gamma) / (2.0 * math.pi * semicircle(self.X))


def _shc(y: float) -> float:
    # (y cosh y - sinh y) / y^2 * e^{-y}, with a series near 0
    if y < 0.05:
        y2 = y * y
        s = y / 3.0 * (1.0 + y2 / 10.0 * (1.0 + y2 / 28.0 * (1.0 + y2 / 54.0)))
        return s * math.exp(-y)
    return (0.5 * (1.0 + math.exp(-2.0 * y)) * y - 0.5 * (-math.expm1(-2.0 * y))) / (y * y)


def _sinhc(y: float) -> float:
    # sinh(y) / y * e^{-y}
    if y < 1e-8:
        return math.exp(-y)
    return -math.expm1(-2.0 * y) / (2.0 * y)


def scaled_bulk_value(g: float, y: float) -> float:
    """``-d/dy [exp(-g y) sinh(y) / y]`` in closed form.

    Evaluated as ``exp(-(g-1) y) * [g*sinh(y)/y - (y cosh y - sinh y)/y^2] * e^{-y}``
    so nothing overflows for ``g >= 1``.
    """
    _check_pos("y", y)
    return math.exp(-(g - 1.0) * y) * (g * _sinhc(y) - _shc(y))


def bulk_scaled_density(pt: BulkPoint) -> float:
    """Limiting scaled density ``rho~(X, y)`` in the bulk."""
    return scaled_bulk_value(pt.g, pt.y)


# --- global imaginary-part density and counting function --------------------


def _log_i(order: int, z: float) -> float:
    return bessel_i(order, z).log_magnitude


def limit_count_fraction(y: float, gamma: float) -> float:
    """Fraction of eigenvalues above ``Y = y/N`` as ``N -> inf``:
    ``exp(-c y) I_1(2y) / y``."""
    c = _c(gamma)
    _check_pos("y", y)
    return math.exp(_log_i(1, 2.0 * y) - c * y - math.log(y))


def limit_imag_density(y: float, gamma: float) -> float:
    """Limiting density of ``y = N*Y``.

    Closed form of ``-d/dy [exp(-c y) I_1(2y) / y]``::

        exp(-c y) / y * [c I_1(2y) - 2 I_2(2y)]

    using ``d/dy I_1(2y) = 2 I_0(2y) - I_1(2y)/y`` and
    ``I_2(2y) = I_0(2y) - I_1(2y)/y``.
    """
    c = _c(gamma)
    _check_pos("y", y)
    z = 2.0 * y
    l1, l2 = _log_i(1, z), _log_i(2, z)
    # factor out I_1; I_2 / I_1 < 1
    bracket = c - 2.0 * math.exp(l2 - l1)
    return math.exp(l1 - c * y - math.log(y)) * bracket


def limit_imag_tail(y: float, gamma: float) -> float:
    """Large-``y`` leading behaviour of :func:`limit_imag_density`.

    Two terms of the exponential decay for ``gamma != 1``; the algebraic
    ``3 / (4 sqrt(pi)) y^{-5/2}`` law at ``gamma = 1``.
    """
    c = _c(gamma)
    _check_pos("y", y)
    if gamma == 1.0:
        return 3.0 / (4.0 * math.sqrt(math.pi)) * y**-2.5
    d = (1.0 - gamma) ** 2 / gamma
    lead = math.exp(-y * d) / (2.0 * math.sqrt(math.pi) * y**1.5)
    return lead * (d + (30.0 - 3.0 * c) / (16.0 * y))


def limit_first_moment(gamma: float) -> float:
    """Closed form of ``int_0^inf y rho~(y) dy``, equal to ``min(gamma, 1/gamma)``."""
    c = _c(gamma)
    return (c - math.sqrt(max(c * c - 4.0, 0.0))) / 2.0


# --- finite-N counting heuristics --------------------------------------------

COUNT_VARIANTS = ("bessel", "asymptotic")


def log_expected_count(N: int, Y: float, gamma: float, variant: str = "bessel") -> float:
    """Logarithm of :func:`expected_count` (finite where the count underflows)."""
    c = _c(gamma)
    _check_pos("Y", Y)
    u = N * Y
    if variant == "bessel":
        return _log_i(1, 2.0 * u) - c * u - math.log(Y)
    if variant == "asymptotic":
        d = (1.0 - gamma) ** 2 / gamma
        return -u * d - math.log(2.0 * math.sqrt(math.pi * N)) - 1.5 * math.log(Y)
    raise InvalidArgumentError(f"variant must be one of {COUNT_VARIANTS}, got {variant!r}")


def expected_count(N: int, Y: float, gamma: float, variant: str = "bessel") -> float:
    """Expected number of eigenvalues with imaginary part above ``Y``.

    ``variant="bessel"`` is ``exp(-N Y c) I_1(2 N Y) / Y``; ``"asymptotic"``
    replaces ``I_1`` by its leading large-argument form.
    """
    return math.exp(log_expected_count(N, Y, gamma, variant))


def critical_count_scaled(m: float, alpha: float) -> float:
    """``exp(-m alpha^2) / (2 sqrt(pi) m^{3/2})``: the count at
    ``gamma = 1 + alpha N^{-1/3}``, ``Y = m N^{-1/3}``."""
    _check_pos("m", m)
    return math.exp(-m * alpha * alpha) / (2.0 * math.sqrt(math.pi) * m**1.5)


def _check_window(W: float) -> None:
    if not (0.0 < W <= 2.0):
        raise InvalidArgumentError(f"W must lie in (0, 2], got {W!r}")


def window_count(N: int, Y: float, gamma: float, W: float) -> float:
    """Expected count above ``Y`` among eigenvalues with ``|Re z| < W``.

    ``exp(-u c) / (4 pi Y) * [T_W(u) - T_W(-u)]``, ``u = N Y``, with
    ``T_W(u) = 2 int_0^W exp(u sqrt(4 - X^2)) dX`` done by quadrature.
    The exponential weight is folded into the integrand.
    """
    _check_window(W)
    c = _c(gamma)
    _check_pos("Y", Y)
    u = N * Y

    def f(X):
        s = np.sqrt(np.clip(4.0 - X * X, 0.0, None))
        return np.exp(u * (s - c)) - np.exp(-u * (s + c))

    # the integrand is peaked at X = 0 with width ~ u^{-1/2}
    bp = [x for x in (2.0 / math.sqrt(max(u, 1e-300)), 8.0 / math.sqrt(max(u, 1e-300))) if x < W]
    val, _ = integrate(f, 0.0, W, atol=0.0, rtol=1e-12, breakpoints=bp)
    return 2.0 * val / (4.0 * math.pi * Y)


def window_count_gaussian(N: int, Y: float, gamma: float, W: float) -> float:
    """Small-``X`` (Gaussian) approximation of :func:`window_count` for ``N Y >> 1``."""
    _check_window(W)
    c = _c(gamma)
    _check_pos("Y", Y)
    u = N * Y
    gauss = math.sqrt(math.pi / 2.0) * math.erf(W * math.sqrt(u) / 2.0)
    return math.exp(-u * (c - 2.0)) / (2.0 * math.pi * Y**1.5) * math.sqrt(2.0 / N) * gauss


def solve_extreme_scale(N: int, gamma: float, *, max_iter: int = 200, rtol: float = 1e-12) -> float:
    """Level ``Y_e`` at which :func:`expected_count` equals one.

    Bisection on ``log Y`` over ``[1e-9, gamma]``; the count is strictly
    decreasing in ``Y``.
    """
    if int(N) != N or N < 10:
        raise InvalidArgumentError(f"N must be an integer >= 10, got {N!r}")
    _c(gamma)
    lo, hi = math.log(1e-9), math.log(gamma)

    def h(t: float) -> float:
        return log_expected_count(N, math.exp(t), gamma)

    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if h(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < rtol:
            break
    return math.exp(0.5 * (lo + hi))
