"""Subunitary companion model ``J = U diag(sqrt(1 - T), 1, ..., 1)``, ``U`` Haar.

Near ``T = 1`` (``T = 1 - t/n``) the smallest eigenvalue modulus has a
limit law given by an alternating series; it interpolates between a
Frechet law (``t -> 0``) and a Gumbel law (``t -> inf``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import mpmath
import numpy as np

from .errors import DomainError, InvalidArgumentError, ModelInapplicableError
from .rmt_core import STREAM_CUE, Spectrum, UnitaryMatrix, eigenvalues, sample_haar_unitary, trial_seed


@dataclass(frozen=True)
class CueParams:
    n: int
    T: float
    t: Optional[float] = None

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise InvalidArgumentError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.T <= 1.0:
            raise InvalidArgumentError(f"T must lie in [0, 1], got {self.T!r}")

    @classmethod
    def critical(cls, n: int, t: float) -> "CueParams":
        """``T = 1 - t/n``."""
        if not t > 0.0:
            raise InvalidArgumentError(f"t must be positive, got {t!r}")
        return cls(n, 1.0 - t / n, t)


def build_subunitary(U: UnitaryMatrix, T: float) -> np.ndarray:
    """``U`` with its first column scaled by ``sqrt(1 - T)``."""
    if not 0.0 <= T <= 1.0:
        raise InvalidArgumentError(f"T must lie in [0, 1], got {T!r}")
    J = np.array(U.entries, dtype=complex)
    J[:, 0] *= math.sqrt(1.0 - T)
    return J


def cue_spectrum(p: CueParams, seed: int) -> Spectrum:
    """Eigenvalues of one ``J`` sample (dense solver)."""
    U = sample_haar_unitary(p.n, seed)
    return eigenvalues(build_subunitary(U, p.T), seed=seed)


def min_modulus_samples(p: CueParams, master_seed: int, trials: int) -> np.ndarray:
    """``min_j |z_j|`` over ``trials`` independent samples (serial)."""
    out = np.empty(trials)
    for i in range(trials):
        s = cue_spectrum(p, trial_seed(master_seed, i, STREAM_CUE))
        out[i] = np.min(np.abs(s.eigenvalues))
    return out


# --- radial density near the unit circle -------------------------------------


def _g_of_T(T: float) -> float:
    if T == 0.0:
        raise ModelInapplicableError("T = 0: the matrix is unitary and all mass sits at y = 0")
    if not 0.0 < T <= 1.0:
        raise InvalidArgumentError(f"T must lie in (0, 1], got {T!r}")
    return 2.0 / T - 1.0


def _radial_series(g: float, y: float, terms: int = 30) -> float:
    # -f'(y) for f = e^{-gy} sinh(y)/y from the Cauchy product of the two series
    a = [(-g) ** j / math.factorial(j) for j in range(terms + 2)]
    b = [1.0 / math.factorial(k + 1) if k % 2 == 0 else 0.0 for k in range(terms + 2)]
    c = [sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(terms + 2)]
    return -sum(k * c[k] * y ** (k - 1) for k in range(1, terms + 1))


def radial_density_limit(y: float, T: float) -> float:
    """Limit of ``rho_n(1 - y/n) / n`` with ``g = 2/T - 1``.

    Closed form ``[(g y + 1) sinh(y) - y cosh(y)] e^{-g y} / y^2``; a power
    series is used where ``y`` and ``g y`` are both small.
    """
    g = _g_of_T(T)
    if not (math.isfinite(y) and y > 0.0):
        raise DomainError(f"y must be positive, got {y!r}")
    if y < 0.5 and g * y < 1.0:
        return _radial_series(g, y)
    ep = math.exp((1.0 - g) * y)
    em = math.exp(-(1.0 + g) * y)
    return ((g * y + 1.0) * (ep - em) - y * (ep + em)) / (2.0 * y * y)


def radial_tail(y: float, T: float) -> float:
    """Large-``y`` form: ``(1-T)/T * exp(-2y(1-T)/T) / y`` for ``T < 1``; ``1/(2 y^2)`` at ``T = 1``.

    At ``T = 1`` the closed form is ``-d/dy [(1 - e^{-2y}) / (2y)]``, whose
    tail is ``1/(2 y^2)``.
    """
    _g_of_T(T)
    if T == 1.0:
        return 1.0 / (2.0 * y * y)
    k = (1.0 - T) / T
    return k * math.exp(-2.0 * y * k) / y


# --- smallest-modulus limit law ----------------------------------------------


def _log_terms(x: float, t: float, n_cap: int = 100000) -> list[float]:
    # log|term_n| until past the peak and below 1e-16 relative to the sum scale
    lx = math.log(x)
    out: list[float] = []
    logprod = 0.0
    floor = math.log(1e-16) - 5.0
    for n in range(1, n_cap + 1):
        logprod += math.log(-math.expm1(2.0 * n * lx))
        lt = n * (n - 1) * lx - logprod + t * (-math.expm1(-2.0 * n * lx))
        out.append(lt)
        if n >= 2 and lt < floor and lt < out[-2]:
            return out
    raise DomainError(f"series did not converge within {n_cap} terms at x={x}, t={t}")


@dataclass(frozen=True)
class SeriesValue:
    value: float
    terms: int
    digits: int


def xmin_cdf_series_info(x: float, t: float) -> SeriesValue:
    """Series value with the number of retained terms and working digits.

    The terms alternate and, as ``x -> 1``, grow far above one before
    decaying; the sum is then formed in mpmath with enough digits to absorb
    the cancellation (largest term's decimal exponent plus 25).
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"x must lie in (0, 1), got {x!r}")
    if not t > 0.0:
        raise DomainError(f"t must be positive, got {t!r}")
    logs = _log_terms(x, t)
    nterms = len(logs)
    peak = max(logs)
    if peak <= 0.0:
        s = 0.0
        for n, lt in enumerate(logs, start=1):
            s += (1.0 if n % 2 else -1.0) * math.exp(lt)
        return SeriesValue(s, nterms, 16)
    dps = int(peak / math.log(10.0)) + 25
    with mpmath.workdps(dps):
        X = mpmath.mpf(x)
        X2 = X * X
        tt = mpmath.mpf(t)
        s = mpmath.mpf(0)
        prod = mpmath.mpf(1)
        x2n = mpmath.mpf(1)
        for n in range(1, nterms + 1):
            x2n *= X2
            prod *= 1 - x2n
            term = X ** (n * (n - 1)) / prod * mpmath.exp(tt * (1 - 1 / x2n))
            s += term if n % 2 else -term
        return SeriesValue(float(s), nterms, dps)


def xmin_cdf_series(x: float, t: float) -> float:
    """Limit CDF ``Pr{X <= x}`` of the smallest eigenvalue modulus at ``T = 1 - t/n``."""
    return xmin_cdf_series_info(x, t).value


def frechet_argument(y: float, t: float) -> float:
    """``x = y sqrt(t)``; the CDF there tends to ``exp(-1/y^2)`` as ``t -> 0``."""
    return y * math.sqrt(t)


def gumbel_argument(y: float, t: float) -> float:
    """``x`` solving ``2t(1 - x) - log t + log log t = y``."""
    return 1.0 - (y + math.log(t) - math.log(math.log(t))) / (2.0 * t)


def gumbel_limit_check(t: float, y: float) -> float:
    """``Pr{2t(1-X) - log t + log log t < y} - exp(-exp(-y))``.

    The event is ``X > x_y``, so the series enters as ``1 - F(x_y)``.
    """
    if t < 10.0:
        raise DomainError(f"t must be >= 10, got {t!r}")
    x = gumbel_argument(y, t)
    return (1.0 - xmin_cdf_series(x, t)) - math.exp(-math.exp(-y))
