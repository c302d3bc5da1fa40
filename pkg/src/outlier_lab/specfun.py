"""Overflow-safe special functions.

Values whose magnitude leaves the double range are carried as
:class:`LogScaled` numbers: a natural-log magnitude plus a unit phase
(or a sign for real values).  Three-term recurrences keep one shared
running exponent and renormalize once the working magnitude passes
``e**300``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numba import njit

from .errors import DomainError, InvalidArgumentError

__all__ = [
    "LogScaled",
    "HermiteSeq",
    "hermite_orthonormal_seq",
    "hermite_top",
    "hermite_pi",
    "laguerre_neg",
    "laguerre_neg_pair",
    "bessel_i",
    "bessel_i_scaled",
    "laguerre_saddle",
    "laguerre_asymptotic",
    "sigma_plus",
    "sigma_minus",
    "hermite_asymptotic_pi",
    "hermite_asymptotic_pi_conj",
]

_RESCALE_AT = 300.0
_RESCALE_VALUE = math.exp(_RESCALE_AT)
_PI_QUARTER = math.pi ** -0.25

Number = Union[float, complex]


@dataclass(frozen=True)
class LogScaled:
    """A number stored as ``factor * exp(log_magnitude)``.

    ``factor`` is a unit-modulus complex number for complex values and
    ``+1.0``/``-1.0`` for real ones.  Exact zero has
    ``log_magnitude == -inf`` and ``factor == 1``.

    A value built from a double remembers that double, so the round trip
    double -> LogScaled -> double is exact; products of such values keep
    the (correctly rounded) double product while it stays in range.
    """

    log_magnitude: float
    factor: Number = 1.0
    exact: Optional[Number] = field(default=None, compare=False, repr=False)

    @classmethod
    def from_value(cls, value: Number) -> "LogScaled":
        if isinstance(value, (complex, np.complexfloating)):
            mag = abs(value)
            value = complex(value)
            if mag == 0.0:
                return cls(-math.inf, 1.0 + 0.0j, value)
            if not math.isfinite(mag):
                raise InvalidArgumentError("LogScaled.from_value needs a finite value")
            return cls(math.log(mag), value / mag, value)
        value = float(value)
        if value == 0.0:
            return cls(-math.inf, 1.0, value)
        if not math.isfinite(value):
            raise InvalidArgumentError("LogScaled.from_value needs a finite value")
        return cls(math.log(abs(value)), math.copysign(1.0, value), value)

    @property
    def is_complex(self) -> bool:
        return isinstance(self.factor, (complex, np.complexfloating))

    def value(self) -> Number:
        """De-scale to a plain double (may overflow to inf or underflow to 0)."""
        if self.exact is not None:
            return self.exact
        if self.log_magnitude == -math.inf:
            return 0.0j if self.is_complex else 0.0
        if self.log_magnitude > 709.78:
            return self.factor * math.inf
        return self.factor * math.exp(self.log_magnitude)

    def __float__(self) -> float:
        v = self.value()
        if isinstance(v, complex):
            raise TypeError("complex LogScaled cannot be converted to float")
        return float(v)

    def __complex__(self) -> complex:
        return complex(self.value())

    def __mul__(self, other: "LogScaled | Number") -> "LogScaled":
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        return LogScaled(
            self.log_magnitude + other.log_magnitude,
            self.factor * other.factor,
            _exact_op(self, other, lambda a, b: a * b),
        )

    __rmul__ = __mul__

    def __truediv__(self, other: "LogScaled | Number") -> "LogScaled":
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        if other.log_magnitude == -math.inf:
            raise ZeroDivisionError("division by a LogScaled zero")
        return LogScaled(
            self.log_magnitude - other.log_magnitude,
            self.factor / other.factor,
            _exact_op(self, other, lambda a, b: a / b),
        )

    def __neg__(self) -> "LogScaled":
        ex = None if self.exact is None else -self.exact
        return LogScaled(self.log_magnitude, -self.factor, ex)

    def __add__(self, other: "LogScaled | Number") -> "LogScaled":
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        top = max(self.log_magnitude, other.log_magnitude)
        if top == -math.inf:
            return self
        s = self.factor * math.exp(self.log_magnitude - top) + other.factor * math.exp(
            other.log_magnitude - top
        )
        out = LogScaled.from_value(s)
        return LogScaled(out.log_magnitude + top, out.factor)

    __radd__ = __add__

    def __sub__(self, other: "LogScaled | Number") -> "LogScaled":
        if not isinstance(other, LogScaled):
            other = LogScaled.from_value(other)
        return self + (-other)

    def conjugate(self) -> "LogScaled":
        if not self.is_complex:
            return self
        ex = None if self.exact is None else complex(self.exact).conjugate()
        return LogScaled(self.log_magnitude, self.factor.conjugate(), ex)

    def real(self) -> "LogScaled":
        return LogScaled.from_value(float(np.real(self.factor))) * LogScaled(self.log_magnitude)

    def imag(self) -> "LogScaled":
        return LogScaled.from_value(float(np.imag(self.factor))) * LogScaled(self.log_magnitude)


def _exact_op(x: LogScaled, y: LogScaled, op) -> Optional[Number]:
    if x.exact is None or y.exact is None:
        return None
    try:
        v = op(x.exact, y.exact)
    except ZeroDivisionError:
        return None
    # keep only normal, finite results; otherwise fall back to log form
    if v == 0 or not math.isfinite(abs(v)) or abs(v) < 2.2250738585072014e-308:
        return None
    return v


@dataclass(frozen=True)
class HermiteSeq:
    """Orthonormal Hermite values ``p_0(w) ... p_degree_max(w)``."""

    degree_max: int
    argument: complex
    values: tuple[LogScaled, ...]

    def ratio(self, k: int) -> complex:
        """``p_k / p_{k-1}`` computed without de-scaling either value."""
        q = self.values[k] / self.values[k - 1]
        return complex(q.value())


def _check_finite(w: complex, name: str = "w") -> None:
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise InvalidArgumentError(f"{name} must be finite, got {w!r}")


def hermite_orthonormal_seq(degree_max: int, w: complex) -> HermiteSeq:
    """Orthonormal Hermite polynomials (weight ``exp(-x**2)``) at ``w``."""
    if degree_max < 0:
        raise InvalidArgumentError("degree_max must be non-negative")
    w = complex(w)
    _check_finite(w)
    shift = 0.0
    prev, cur = 0.0j, complex(_PI_QUARTER)
    vals = [LogScaled.from_value(cur)]
    for k in range(degree_max):
        nxt = w * math.sqrt(2.0 / (k + 1)) * cur - math.sqrt(k / (k + 1)) * prev
        prev, cur = cur, nxt
        vals.append(_shifted(cur, shift))
        mag = max(abs(prev), abs(cur))
        if mag > _RESCALE_VALUE:
            prev /= mag
            cur /= mag
            shift += math.log(mag)
    return HermiteSeq(degree_max, w, tuple(vals))


def _shifted(x: complex, shift: float) -> LogScaled:
    out = LogScaled.from_value(complex(x))
    return LogScaled(out.log_magnitude + shift, out.factor)


@njit(cache=True)
def _hermite_top_kernel(n, w):
    m = w.shape[0]
    o2 = np.empty(m, dtype=np.complex128)
    o1 = np.empty(m, dtype=np.complex128)
    o0 = np.empty(m, dtype=np.complex128)
    sh = np.zeros(m)
    c0 = np.pi ** -0.25
    for i in range(m):
        wi = w[i]
        older = 0.0j
        prev = c0 + 0.0j
        cur = np.sqrt(2.0) * c0 * wi
        shift = 0.0
        for k in range(1, n):
            nxt = wi * np.sqrt(2.0 / (k + 1)) * cur - np.sqrt(k / (k + 1.0)) * prev
            older = prev
            prev = cur
            cur = nxt
            mag = max(abs(prev), abs(cur))
            if mag > _RESCALE_VALUE:
                older /= mag
                prev /= mag
                cur /= mag
                shift += np.log(mag)
        o2[i] = older
        o1[i] = prev
        o0[i] = cur
        sh[i] = shift
    return o2, o1, o0, sh


def hermite_top(n: int, w: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``p_{n-2}, p_{n-1}, p_n`` at complex points ``w``.

    Returns mantissas ``(m2, m1, m0)`` and a shared log scale ``s`` so
    that ``p_{n-j} = m_j * exp(s)`` elementwise.  Requires ``n >= 2``.
    """
    if n < 2:
        raise InvalidArgumentError("hermite_top needs n >= 2")
    w = np.asarray(w, dtype=complex)
    flat = np.ascontiguousarray(w.ravel())
    if not np.all(np.isfinite(flat)):
        raise InvalidArgumentError("w must be finite")
    out = _hermite_top_kernel(int(n), flat)
    return tuple(o.reshape(w.shape) for o in out)  # type: ignore[return-value]


def hermite_pi(m: int, N: int, z: complex) -> LogScaled:
    """``pi_m(z) = int exp(-N s**2/2) (z + i s)**(N-m) ds`` via orthonormal Hermite."""
    if not 0 <= m <= N:
        raise InvalidArgumentError("need 0 <= m <= N")
    k = N - m
    seq = hermite_orthonormal_seq(k, complex(z) * math.sqrt(N / 2.0))
    log_pref = (
        0.5 * math.log(2.0 * math.pi)
        + 0.25 * math.log(math.pi)
        + 0.5 * (math.lgamma(k + 1) - (k + 1) * math.log(N))
    )
    return seq.values[k] * LogScaled(log_pref, 1.0)


@njit(cache=True)
def _laguerre_pair_kernel(k, alpha, x):
    m = x.shape[0]
    o_prev = np.zeros(m)
    o_cur = np.ones(m)
    sh = np.zeros(m)
    for i in range(m):
        xi = x[i]
        prev = 0.0
        cur = 1.0
        shift = 0.0
        for j in range(k):
            if j == 0:
                nxt = 1.0 + alpha - xi
            else:
                nxt = ((2 * j + 1 + alpha - xi) * cur - (j + alpha) * prev) / (j + 1)
            prev = cur
            cur = nxt
            if cur > _RESCALE_VALUE:
                prev /= cur
                shift += np.log(cur)
                cur = 1.0
        o_prev[i] = prev
        o_cur[i] = cur
        sh[i] = shift
    return o_prev, o_cur, sh


def laguerre_neg_pair(
    k: int, alpha: int, x: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``L_{k-1}^{(alpha)}(x), L_k^{(alpha)}(x)`` for ``x <= 0``.

    Returns mantissas ``(m_prev, m_k)`` and log scale ``s``.  For
    ``k == 0`` the first mantissa is zero.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x > 0.0) or not np.all(np.isfinite(x)):
        raise DomainError("laguerre_neg requires finite x <= 0")
    if k < 0:
        raise InvalidArgumentError("k must be non-negative")
    flat = np.ascontiguousarray(x.ravel())
    out = _laguerre_pair_kernel(int(k), float(alpha), flat)
    return tuple(o.reshape(x.shape) for o in out)  # type: ignore[return-value]


def laguerre_neg(k: int, alpha: int, x: float) -> LogScaled:
    """Generalized Laguerre ``L_k^{(alpha)}(x)`` for ``x <= 0`` (always positive)."""
    _, cur, shift = laguerre_neg_pair(k, alpha, float(x))
    return LogScaled(float(np.log(cur) + shift), 1.0)


# --- modified Bessel functions -------------------------------------------

_BESSEL_SWITCH = 30.0


def _bessel_series_log(order: int, z: float) -> float:
    if z == 0.0:
        return 0.0 if order == 0 else -math.inf
    q = 0.25 * z * z
    term, total, j = 1.0, 1.0, 0
    while True:
        j += 1
        term *= q / (j * (j + order))
        total += term
        if term < 1e-17 * total:
            break
    return order * math.log(0.5 * z) - math.lgamma(order + 1) + math.log(total)


def _bessel_asym_log(order: int, z: float) -> float:
    mu = 4.0 * order * order
    term, total = 1.0, 1.0
    for p in range(1, 40):
        new = -term * (mu - (2 * p - 1) ** 2) / (p * 8.0 * z)
        if abs(new) > abs(term):
            break
        term = new
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return z - 0.5 * math.log(2.0 * math.pi * z) + math.log(total)


def bessel_i(order: int, z: float, method: str = "auto") -> LogScaled:
    """Modified Bessel function ``I_order(z)`` for ``order`` in {0, 1, 2}.

    ``method`` may force ``"series"`` or ``"asymptotic"``; ``"auto"``
    switches at ``z = 30``.
    """
    if order not in (0, 1, 2):
        raise InvalidArgumentError("order must be 0, 1 or 2")
    z = float(z)
    if not math.isfinite(z) or z < 0.0:
        raise InvalidArgumentError("z must be finite and non-negative")
    if method == "auto":
        method = "series" if z < _BESSEL_SWITCH else "asymptotic"
    if method == "series":
        lm = _bessel_series_log(order, z)
    elif method == "asymptotic":
        if z == 0.0:
            raise DomainError("asymptotic expansion needs z > 0")
        lm = _bessel_asym_log(order, z)
    else:
        raise InvalidArgumentError(f"unknown method {method!r}")
    return LogScaled(lm, 1.0)


def bessel_i_scaled(order: int, z: np.ndarray | float) -> np.ndarray:
    """Vectorized ``exp(-z) * I_order(z)``."""
    z = np.asarray(z, dtype=float)
    flat = z.ravel()
    out = np.empty(flat.shape)
    for i, zi in enumerate(flat):
        out[i] = math.exp(bessel_i(order, float(zi)).log_magnitude - zi)
    return out.reshape(z.shape)


# --- Laguerre asymptotics at large negative argument ---------------------


def laguerre_saddle(Y: float) -> tuple[float, float]:
    """Saddle points ``(tau_*, r_*)`` with ``tau_* * r_* = 1``."""
    s = math.sqrt(Y * Y + 4.0)
    return 0.5 * (s + Y), 2.0 / (s + Y)


def laguerre_asymptotic(
    N: int, k: int, alpha: int, Y: float, branch: str | None = None
) -> LogScaled:
    """Large-``N`` form of ``L_{N-k}^{(alpha)}(-N Y**2)``.

    ``branch`` is ``"fixed"`` for ``Y = O(1)`` or ``"small"`` for
    ``1/N << Y << 1`` (adds the first correction bracket).  By default
    ``"small"`` is used when ``Y < N**(-1/4)``.
    """
    if Y <= 0.0:
        raise DomainError("laguerre_asymptotic requires Y > 0")
    if N < 10:
        raise InvalidArgumentError("laguerre_asymptotic requires N >= 10")
    if branch is None:
        branch = "small" if Y < N ** -0.25 else "fixed"
    if branch not in ("fixed", "small"):
        raise InvalidArgumentError(f"unknown branch {branch!r}")
    _, r = laguerre_saddle(Y)
    lm = (
        N * Y * r
        - 0.5 * math.log(2.0 * math.pi * N)
        - (2 * (N - k) + alpha + 1) * math.log(r)
        - (alpha + 0.5) * math.log(Y)
        - 0.25 * math.log(Y * Y + 4.0)
    )
    if branch == "small":
        corr = 1.0 - r * (alpha * alpha - 0.25) / (4.0 * Y * N)
        if corr <= 0.0:
            raise DomainError("correction bracket is non-positive; Y too small for this N")
        lm += math.log(corr)
    return LogScaled(lm, 1.0)


# --- Hermite asymptotics near the origin ---------------------------------


def sigma_plus(z: complex) -> complex:
    z = complex(z)
    return 0.5 * (1j * z + np.sqrt(4.0 - z * z))


def sigma_minus(z: complex) -> complex:
    """``sigma_-`` evaluated at ``conj(z)`` as in the conjugate companion form."""
    zb = complex(z).conjugate()
    return 0.5 * (1j * zb - np.sqrt(4.0 - zb * zb))


def _pi_asym(k: int, N: int, zz: complex, s: complex) -> LogScaled:
    minus_is = -1j * s
    log_val = (
        0.5 * np.log(2.0 * math.pi / (N * (1.0 + s * s)))
        + k * np.log(minus_is)
        - 0.5 * N * (1.0 + 1j * zz * s + 2.0 * np.log(minus_is))
    )
    log_val = complex(log_val)
    return LogScaled(log_val.real, complex(np.exp(1j * log_val.imag)))


def _check_upper(z: complex, N: int) -> None:
    if complex(z).imag <= 0.0:
        raise DomainError("hermite asymptotics require Im z > 0")
    if N < 1:
        raise InvalidArgumentError("N must be positive")


def hermite_asymptotic_pi(k: int, N: int, z: complex) -> LogScaled:
    """Saddle-point approximation of ``pi_k(z)`` for small ``|z|``, ``Im z > 0``."""
    _check_upper(z, N)
    return _pi_asym(k, N, complex(z), sigma_plus(z))


def hermite_asymptotic_pi_conj(k: int, N: int, z: complex) -> LogScaled:
    """Saddle-point approximation of ``pi_k(conj z)`` through ``sigma_-``."""
    _check_upper(z, N)
    return _pi_asym(k, N, complex(z).conjugate(), sigma_minus(z))
