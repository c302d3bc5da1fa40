"""Large-deviation form of the imaginary-part density at ``Y = O(1)``.

``rho_N(Y) ~ N^{-1/2} Psi(Y) exp(-N Phi(Y))`` with rate ``Phi`` and
prefactor ``Psi``.  For ``gamma > 1`` the rate has a zero at the outlier
height ``Y_* = gamma - 1/gamma`` and a local maximum at ``Y_**``, where
``Psi`` also vanishes; ``Y_**`` is used as the bulk/outlier boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DomainError, InvalidArgumentError, ModelInapplicableError


@dataclass(frozen=True)
class LDParams:
    gamma: float
    N: int

    def __post_init__(self) -> None:
        if not self.gamma > 0.0:
            raise InvalidArgumentError(f"gamma must be positive, got {self.gamma!r}")
        if int(self.N) != self.N or self.N < 3:
            raise InvalidArgumentError(f"N must be an integer >= 3, got {self.N!r}")


@dataclass(frozen=True)
class StationaryPoints:
    y_star: Optional[float] = None
    y_double_star: Optional[float] = None

    @property
    def empty(self) -> bool:
        return self.y_star is None


class OutlierPdf(NamedTuple):
    value: float | np.ndarray
    valid: bool | np.ndarray  # False below Y_** (outside the outlier basin)


def _arr(Y):
    return np.asarray(Y, dtype=float)


def _out(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def r_star(Y):
    """``(sqrt(Y^2 + 4) - Y) / 2`` in the cancellation-free form ``2 / (sqrt(Y^2 + 4) + Y)``."""
    Ya = _arr(Y)
    if np.any(Ya < 0.0):
        raise DomainError("r_star requires Y >= 0")
    return _out(2.0 / (np.sqrt(Ya * Ya + 4.0) + Ya))


def _check_range(p: LDParams, Ya: np.ndarray, open_left: bool) -> None:
    bad = (Ya >= p.gamma) | (Ya <= 0.0 if open_left else Ya < 0.0) | ~np.isfinite(Ya)
    if np.any(bad):
        lo = "(0" if open_left else "[0"
        raise DomainError(f"Y must lie in {lo}, {p.gamma})")


def rate_phi(p: LDParams, Y):
    """Rate function ``Phi_gamma(Y)`` on ``[0, gamma)``.

    Uses ``2 ln r_* = -2 asinh(Y/2)`` and ``log1p`` so that the value is
    accurate near ``Y = 0``.
    """
    Ya = _arr(Y)
    _check_range(p, Ya, open_left=False)
    g = p.gamma
    val = Ya * (g - Ya) - np.log1p(-Ya / g) - Ya * r_star(Ya) - 2.0 * np.arcsinh(Ya / 2.0)
    return _out(val)


def prefactor_psi(p: LDParams, Y):
    """Pre-exponential factor ``Psi_gamma(Y)`` on ``(0, gamma)``."""
    Ya = _arr(Y)
    _check_range(p, Ya, open_left=True)
    g = p.gamma
    G = g - Ya
    r = r_star(Ya)
    val = g / G**2 * (1.0 - r * G) ** 2 / (Ya**1.5 * (Ya * Ya + 4.0) ** 0.25) / math.sqrt(2.0 * math.pi)
    return _out(val)


def prefactor_psi_unsimplified(p: LDParams, Y):
    """``Psi`` before the ``1 - r_*^2 = Y r_*`` simplification (cross-check route)."""
    Ya = _arr(Y)
    _check_range(p, Ya, open_left=True)
    g = p.gamma
    G = g - Ya
    r = r_star(Ya)
    num = 3.0 * Ya - 2.0 * g + r * r * G * (2.0 + Ya * G)
    val = g / G**2 * num / (Ya**2.5 * (Ya * Ya + 4.0) ** 0.25) / math.sqrt(2.0 * math.pi)
    return _out(val)


def log_ld_density(p: LDParams, Y):
    with np.errstate(divide="ignore"):
        return _out(np.log(prefactor_psi(p, Y)) - p.N * _arr(rate_phi(p, Y)) - 0.5 * math.log(p.N))


def ld_density(p: LDParams, Y):
    """``N^{-1/2} Psi(Y) exp(-N Phi(Y))``: the density of a single eigenvalue's ``Y``."""
    return _out(np.exp(_arr(log_ld_density(p, Y))))


def stationary_points(gamma: float) -> StationaryPoints:
    """``Y_*`` and ``Y_**`` for ``gamma > 1``; empty otherwise."""
    if not gamma > 0.0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma!r}")
    if gamma <= 1.0:
        return StationaryPoints()
    d = gamma - 1.0 / gamma
    return StationaryPoints(d, 2.0 * d / (3.0 + math.sqrt(1.0 + 8.0 / gamma**2)))


def outlier_pdf(p: LDParams, Y) -> OutlierPdf:
    """Approximate pdf of ``Y_max`` for ``gamma > 1``: ``N`` times :func:`ld_density`.

    ``valid`` is False where ``Y < Y_**``; there the expression describes
    the bulk rather than the outlier.
    """
    if p.gamma <= 1.0:
        raise ModelInapplicableError(f"no outlier for gamma <= 1 (gamma={p.gamma})")
    Ya = _arr(Y)
    val = p.N * _arr(ld_density(p, Ya))
    valid = Ya >= stationary_points(p.gamma).y_double_star
    return OutlierPdf(_out(val), bool(valid) if np.ndim(valid) == 0 else valid)


def fluctuation_sigma(gamma: float) -> float:
    """``sigma`` with ``Y_max ~ Y_* + sigma u / sqrt(N)``, ``u`` standard normal."""
    if not gamma > 1.0:
        raise ModelInapplicableError(f"fluctuation law needs gamma > 1, got {gamma!r}")
    g2 = gamma * gamma
    return math.sqrt((g2 + 1.0) / (g2 * (g2 - 1.0)))


def gaussian_limit_density(p: LDParams, u):
    """``sigma / sqrt(N) * N * ld_density(Y_* + sigma u / sqrt(N))``.

    Tends to the standard normal density as ``N -> inf``.
    """
    s = fluctuation_sigma(p.gamma)
    ys = stationary_points(p.gamma).y_star
    sq = math.sqrt(p.N)
    return _out(s * sq * _arr(ld_density(p, ys + s * _arr(u) / sq)))


def log_crossover_density(N: int, gamma: float, y, eps: float):
    d = (1.0 - gamma) ** 2 / gamma
    ya = _arr(y)
    lead = -eps / 2 * math.log(N) - math.log(2.0 * math.sqrt(math.pi)) + math.log(d)
    return _out(lead - 1.5 * np.log(ya) - (N**eps) * ya * d)


def crossover_density(N: int, gamma: float, y, eps: float):
    """Small-``Y`` form of the rescaled density at ``Y = y N^{-1+eps}``.

    ``N^{-eps/2} / (2 sqrt(pi)) * d * y^{-3/2} * exp(-N^eps y d)``,
    ``d = (1 - gamma)^2 / gamma``.  Only the first-order term of ``Phi``
    is kept, so agreement needs ``N Y^2 -> 0``, i.e. ``eps < 1/2``.
    """
    return _out(np.exp(_arr(log_crossover_density(N, gamma, y, eps))))
