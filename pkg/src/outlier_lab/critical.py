"""Critical regime ``gamma = 1 + alpha N^{-1/3}``, heights ``Y = m N^{-1/3}``.

In this window the outlier separates from the extreme bulk eigenvalues.
The limiting densities are elementary; the sign of ``d/dm`` of the
imaginary-part density is the sign of a degree-6 polynomial ``Q6(alpha, m)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .eigensolver import dense_eigvals
from .errors import DomainError
from .finite_density import FiniteDensityParams, rho2d_exact, rho_imag_exact
from .quadrature import integrate

_C1 = 1.0 / (2.0 * math.sqrt(math.pi))


@dataclass(frozen=True)
class CriticalParams:
    alpha: float
    m: float
    q: float = 0.0

    def __post_init__(self) -> None:
        _check_m(self.m)


def _check_m(m) -> None:
    if np.any(~(np.asarray(m, dtype=float) > 0.0)):
        raise DomainError("m must be positive")


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def critical_imag_density(alpha: float, m):
    """Limiting density of ``m = N^{1/3} Y`` (mass counts eigenvalues, not a probability)."""
    _check_m(m)
    m = np.asarray(m, dtype=float)
    b = 1.5 / m + (1.5 * m - alpha) ** 2
    return _out(_C1 * b * m**-1.5 * np.exp(-m * (alpha - 0.5 * m) ** 2))


def critical_2d_density(alpha: float, q, m):
    """Joint limiting density in ``(q, m) = N^{1/3} (X, Y)``."""
    _check_m(m)
    q = np.asarray(q, dtype=float)
    m = np.asarray(m, dtype=float)
    q4 = 0.25 * q * q
    b = 1.0 / m + q4 + (1.5 * m - alpha) ** 2
    return _out(b * np.exp(-m * (q4 + (alpha - 0.5 * m) ** 2)) / (4.0 * math.pi * m))


def ld_crossover(alpha: float, m):
    """Large-deviation form applied formally in the critical window (valid for large ``m``)."""
    m = np.asarray(m, dtype=float)
    return _out(_C1 * (1.5 * m - alpha) ** 2 * m**-1.5 * np.exp(-m * (alpha - 0.5 * m) ** 2))


def bessel_tail_crossover(alpha: float, m):
    """``-d/dm`` of the scaled heuristic count (valid for small ``m``)."""
    m = np.asarray(m, dtype=float)
    return _out(_C1 * (1.5 / m + alpha * alpha) * m**-1.5 * np.exp(-m * alpha * alpha))


# --- Q6 ---------------------------------------------------------------------


def q6_coefficients(alpha: float) -> np.ndarray:
    """Coefficients of ``Q6(alpha, .)`` from degree 6 down to 0."""
    a = alpha
    return np.array(
        [-27.0, 108.0 * a, -144.0 * a**2, 80.0 * a**3, 72.0 * a - 16.0 * a**4, -48.0 * a**2, -60.0]
    )


def q6(alpha: float, m):
    m = np.asarray(m, dtype=float)
    acc = np.zeros_like(m)
    for c in q6_coefficients(alpha):
        acc = acc * m + c
    return _out(acc)


def _companion_roots(coef: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(coef)
    coef = coef[nz[0] :]
    deg = len(coef) - 1
    if deg < 1:
        return np.empty(0, dtype=complex)
    C = np.zeros((deg, deg), dtype=complex)
    C[0, :] = -coef[1:] / coef[0]
    C[np.arange(1, deg), np.arange(deg - 1)] = 1.0
    z, _ = dense_eigvals(C)
    return z


def _newton_polish(coef: np.ndarray, x: float, steps: int = 3) -> float:
    d = np.polyder(coef)
    for _ in range(steps):
        dp = np.polyval(d, x)
        if dp == 0.0:
            break
        x -= np.polyval(coef, x) / dp
    return x


def q6_real_roots(alpha: float) -> list[float]:
    """Positive real roots of ``Q6(alpha, .)`` in ascending order.

    Companion-matrix eigenvalues; a root is real when its imaginary part is
    below ``1e-9 (1 + |Re|)``.  Accepted roots get three Newton steps.
    """
    coef = q6_coefficients(alpha)
    roots = []
    for z in _companion_roots(coef):
        if abs(z.imag) < 1e-9 * (1.0 + abs(z.real)) and z.real > 0.0:
            roots.append(_newton_polish(coef, float(z.real)))
    return sorted(roots)


def asymptotic_roots(alpha: float) -> tuple[float, float]:
    """Large-``alpha`` forms ``(m1, m2)`` of the largest and smallest positive roots."""
    return 2.0 * alpha * (1.0 + 3.0 / (8.0 * alpha**3)), 2.0 / 3.0 * alpha * (1.0 + 15.0 / (8.0 * alpha**3))


def alpha0_bracket(tolerance: float = 5e-4, lo: float = 0.0, hi: float = 1.0) -> tuple[float, float]:
    """Bisect for the smallest ``alpha`` at which ``Q6`` has a positive real root."""
    if tolerance < 1e-6:
        raise DomainError("tolerance must be >= 1e-6")
    has = lambda a: len(q6_real_roots(a)) > 0  # noqa: E731
    if has(lo) or not has(hi):
        raise DomainError("starting bracket does not straddle the threshold")
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if has(mid):
            hi = mid
        else:
            lo = mid
    return lo, hi


# --- expected count ---------------------------------------------------------


def count_cutoff(alpha: float, m: float) -> float:
    return max(4.0 * abs(alpha) + 20.0, m + 20.0)


def expected_count_above(alpha: float, m: float) -> float:
    """``N~_alpha(m) = int_m^inf p~(m') dm'``, truncated at :func:`count_cutoff`."""
    _check_m(m)
    top = count_cutoff(alpha, m)
    # the Gaussian factor peaks at m' = 2 alpha
    bp = [x for x in (1.0, 2.0 * alpha - 2.0, 2.0 * alpha, 2.0 * alpha + 2.0) if m < x < top]
    v, _ = integrate(lambda t: critical_imag_density(alpha, t), m, top, atol=1e-15, rtol=1e-13, breakpoints=bp)
    return v


# --- finite-N rescalings (oracles for the limits) ---------------------------


def gamma_of_alpha(N: int, alpha: float) -> float:
    return 1.0 + alpha * N ** (-1.0 / 3.0)


def rescaled_finite_imag(N: int, alpha: float, m):
    """``N^{2/3} rho_N(m N^{-1/3})`` at ``gamma = 1 + alpha N^{-1/3}``."""
    p = FiniteDensityParams(N, gamma_of_alpha(N, alpha))
    s = N ** (-1.0 / 3.0)
    return _out(N ** (2.0 / 3.0) * np.asarray(rho_imag_exact(p, np.asarray(m, dtype=float) * s)))


def rescaled_finite_2d(N: int, alpha: float, q, m):
    """``N^{1/3} rho_N(q N^{-1/3}, m N^{-1/3})`` at ``gamma = 1 + alpha N^{-1/3}``."""
    p = FiniteDensityParams(N, gamma_of_alpha(N, alpha))
    s = N ** (-1.0 / 3.0)
    return _out(N ** (1.0 / 3.0) * np.asarray(rho2d_exact(p, np.asarray(q, dtype=float) * s, np.asarray(m, dtype=float) * s)))
