"""Random matrices, the rank-one deformation and its spectra.

GUE normalization: density proportional to ``exp(-(n/2) Tr H^2)``, so
diagonal entries have variance ``1/n`` and ``E|H_jk|^2 = 1/n``.

Every sample is driven by a Philox (counter-based) generator keyed by a
64-bit seed; :func:`trial_seed` derives that key from
``(master_seed, trial_index, stream_id)`` so trials are reproducible in
any execution order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .eigensolver import dense_eigvals, tridiagonal_deformed_eigvals
from .errors import InvalidArgumentError

STREAM_GUE = 0
STREAM_CUE = 1


def trial_seed(master_seed: int, trial: int, stream: int = 0) -> int:
    """64-bit key for one trial, independent of execution order."""
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(trial), int(stream)])
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))


@dataclass(frozen=True)
class HermitianSample:
    n: int
    entries: np.ndarray
    seed: int


@dataclass(frozen=True)
class TridiagonalSample:
    """Real symmetric tridiagonal matrix unitarily similar to a GUE sample.

    The similarity fixes ``e1``, so ``T + i*gamma*e1 e1^T`` has the same
    spectrum as ``H + i*gamma*e1 e1^T``.
    """

    n: int
    diagonal: np.ndarray
    offdiagonal: np.ndarray
    seed: int


@dataclass(frozen=True)
class DeformedMatrix:
    n: int
    gamma: float
    entries: np.ndarray
    seed: int = 0


@dataclass(frozen=True)
class UnitaryMatrix:
    n: int
    entries: np.ndarray
    seed: int


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted by descending imaginary part (ties: ascending real)."""

    eigenvalues: np.ndarray
    sum_imag: float
    sum_real: float
    trace_residual: float
    trace_sq_residual: float
    source_seed: int
    route: str = "dense"
    extra: dict = field(default_factory=dict)

    @property
    def y_max(self) -> float:
        return float(self.eigenvalues[0].imag)


def _check_n(n: int) -> None:
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")


def sample_gue(n: int, seed: int) -> HermitianSample:
    _check_n(n)
    rng = make_rng(seed)
    diag = rng.standard_normal(n) / np.sqrt(n)
    re = rng.standard_normal((n, n))
    im = rng.standard_normal((n, n))
    upper = np.triu((re + 1j * im) / np.sqrt(2.0 * n), 1)
    H = upper + upper.conj().T + np.diag(diag)
    return HermitianSample(n, H, int(seed))


def sample_gue_tridiagonal(n: int, seed: int) -> TridiagonalSample:
    """Tridiagonal model: ``a_k ~ N(0, 1/n)``, ``b_k ~ sqrt(chi2_{2(n-k)} / (2n))``."""
    _check_n(n)
    rng = make_rng(seed)
    a = rng.standard_normal(n) / np.sqrt(n)
    dof = 2.0 * np.arange(n - 1, 0, -1)
    b = np.sqrt(rng.chisquare(dof) / (2.0 * n)) if n > 1 else np.empty(0)
    return TridiagonalSample(n, a, b, int(seed))


def build_deformation(H: HermitianSample, gamma: float) -> DeformedMatrix:
    if not gamma > 0.0:
        raise InvalidArgumentError(f"gamma must be positive, got {gamma!r}")
    J = np.array(H.entries, dtype=complex)
    J[0, 0] += 1j * gamma
    return DeformedMatrix(H.n, float(gamma), J, H.seed)


def _sorted(z: np.ndarray) -> np.ndarray:
    order = np.lexsort((z.real, -z.imag))
    return z[order]


def _make_spectrum(
    z: np.ndarray, trace: complex, trace_sq: complex, seed: int, route: str
) -> Spectrum:
    z = _sorted(np.asarray(z, dtype=complex))
    s = z.sum()
    return Spectrum(
        eigenvalues=z,
        sum_imag=float(s.imag),
        sum_real=float(s.real),
        trace_residual=float(abs(s - trace)),
        trace_sq_residual=float(abs(np.sum(z * z) - trace_sq)),
        source_seed=int(seed),
        route=route,
    )


def eigenvalues(M: DeformedMatrix | np.ndarray, seed: int | None = None) -> Spectrum:
    """Dense eigensolve (Hessenberg reduction + shifted complex QR)."""
    entries = M.entries if isinstance(M, DeformedMatrix) else np.asarray(M, dtype=complex)
    src = M.seed if isinstance(M, DeformedMatrix) else (seed or 0)
    z, _ = dense_eigvals(entries)
    trace = complex(np.trace(entries))
    trace_sq = complex(np.sum(entries * entries.T))
    return _make_spectrum(z, trace, trace_sq, src, "dense")


def deformed_spectrum(T: TridiagonalSample, gamma: float) -> Spectrum:
    """Spectrum of ``T + i*gamma*e1 e1^T`` by the O(n^2) tridiagonal route."""
    if gamma < 0.0:
        raise InvalidArgumentError("gamma must be non-negative")
    z, route = tridiagonal_deformed_eigvals(T.diagonal, T.offdiagonal, gamma)
    d = T.diagonal.astype(complex)
    d[0] += 1j * gamma
    trace = complex(d.sum())
    trace_sq = complex(np.sum(d * d) + 2.0 * np.sum(T.offdiagonal**2))
    return _make_spectrum(z, trace, trace_sq, T.seed, route)


def sample_haar_unitary(n: int, seed: int) -> UnitaryMatrix:
    """Haar unitary from the QR factorization of a complex Ginibre matrix."""
    _check_n(n)
    rng = make_rng(seed)
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    Q, R = np.linalg.qr(Z)
    d = np.diagonal(R)
    ph = d / np.abs(d)
    return UnitaryMatrix(n, Q * ph[None, :], int(seed))
