"""Eigenvalue-only solvers compiled with numba.

* Dense: Householder reduction to upper Hessenberg form, then implicitly
  single-shifted complex QR with Wilkinson shifts.
* Tridiagonal: a rank-one deformation ``T + i*gamma*e1 e1^T`` of a real
  symmetric tridiagonal ``T`` is complex symmetric, so its eigenvalues can
  be found in O(n**2) with complex orthogonal transformations
  (``c**2 + s**2 = 1``).  The primary kernel is a root-free QR that only
  touches squared couplings; a rotation-based QL is the second route.
  Complex orthogonal transformations are not norm-bounded, so every
  answer is checked against the trace identities and redone by the next
  route on failure.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import SolverFailure

_EPS = np.finfo(float).eps


@njit(cache=True)
def _hessenberg_inplace(A):
    n = A.shape[0]
    for k in range(n - 2):
        alpha_norm = 0.0
        for i in range(k + 1, n):
            alpha_norm += A[i, k].real ** 2 + A[i, k].imag ** 2
        alpha_norm = np.sqrt(alpha_norm)
        if alpha_norm == 0.0:
            continue
        x0 = A[k + 1, k]
        ax0 = abs(x0)
        phase = x0 / ax0 if ax0 > 0.0 else 1.0 + 0.0j
        alpha = -phase * alpha_norm
        m = n - k - 1
        v = np.empty(m, dtype=np.complex128)
        for i in range(m):
            v[i] = A[k + 1 + i, k]
        v[0] -= alpha
        vn = 0.0
        for i in range(m):
            vn += v[i].real ** 2 + v[i].imag ** 2
        vn = np.sqrt(vn)
        if vn == 0.0:
            continue
        for i in range(m):
            v[i] /= vn
        # left: rows k+1.., columns k..
        for j in range(k, n):
            s = 0.0j
            for i in range(m):
                s += v[i].conjugate() * A[k + 1 + i, j]
            s *= 2.0
            for i in range(m):
                A[k + 1 + i, j] -= v[i] * s
        # right: all rows, columns k+1..
        for i in range(n):
            s = 0.0j
            for jj in range(m):
                s += A[i, k + 1 + jj] * v[jj]
            s *= 2.0
            for jj in range(m):
                A[i, k + 1 + jj] -= s * v[jj].conjugate()
        for i in range(k + 2, n):
            A[i, k] = 0.0j


@njit(cache=True)
def _givens(a, b):
    # returns c (real), s (complex) with [c s; -conj(s) c] [a; b] = [r; 0]
    if b == 0.0:
        return 1.0, 0.0j
    if a == 0.0:
        return 0.0, b.conjugate() / abs(b)
    aa = abs(a)
    nrm = np.sqrt(aa * aa + abs(b) ** 2)
    c = aa / nrm
    s = (a / aa) * b.conjugate() / nrm
    return c, s


@njit(cache=True)
def _wilkinson(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    tr_half = 0.5 * (a + d)
    det = a * d - b * c
    disc = np.sqrt(tr_half * tr_half - det)
    l1 = tr_half + disc
    l2 = tr_half - disc
    if abs(l1 - d) < abs(l2 - d):
        return l1
    return l2


@njit(cache=True)
def _hqr(H, max_sweeps):
    n = H.shape[0]
    eig = np.empty(n, dtype=np.complex128)
    hi = n - 1
    sweeps = 0
    its = 0
    while hi >= 0:
        # find small subdiagonal
        lo = hi
        while lo > 0:
            tst = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if abs(H[lo, lo - 1]) <= _EPS * tst or abs(H[lo, lo - 1]) < 1e-300:
                H[lo, lo - 1] = 0.0j
                break
            lo -= 1
        if lo == hi:
            eig[hi] = H[hi, hi]
            hi -= 1
            its = 0
            continue
        sweeps += 1
        its += 1
        if sweeps > max_sweeps:
            return eig, sweeps, False
        if its % 11 == 10:
            # exceptional shift
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
        x = H[lo, lo] - mu
        y = H[lo + 1, lo]
        for k in range(lo, hi):
            if k > lo:
                x = H[k, k - 1]
                y = H[k + 1, k - 1]
            c, s = _givens(x, y)
            jstart = k - 1 if k > lo else lo
            for j in range(jstart, hi + 1):
                t1 = H[k, j]
                t2 = H[k + 1, j]
                H[k, j] = c * t1 + s * t2
                H[k + 1, j] = -s.conjugate() * t1 + c * t2
            iend = k + 2 if k + 2 < hi else hi
            for i in range(lo, iend + 1):
                t1 = H[i, k]
                t2 = H[i, k + 1]
                H[i, k] = t1 * c + t2 * s.conjugate()
                H[i, k + 1] = -t1 * s + t2 * c
            if k > lo:
                H[k + 1, k - 1] = 0.0j
    return eig, sweeps, True


@njit(cache=True)
def _dense_kernel(A):
    H = A.copy()
    _hessenberg_inplace(H)
    return _hqr(H, 30 * A.shape[0])


def dense_eigvals(A: np.ndarray) -> tuple[np.ndarray, int]:
    """All eigenvalues of a square complex matrix; returns ``(eigs, sweeps)``."""
    A = np.ascontiguousarray(A, dtype=np.complex128)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("square matrix required")
    if n == 0:
        return np.empty(0, dtype=complex), 0
    eig, sweeps, ok = _dense_kernel(A)
    if not ok:
        raise SolverFailure(f"QR iteration did not converge in {30 * n} sweeps", sweeps)
    return eig, sweeps


@njit(cache=True)
def _tridiagonalize_hermitian(A):
    # Householder reduction fixing e1; returns real diagonal and |subdiagonal|
    H = A.copy()
    _hessenberg_inplace(H)
    n = H.shape[0]
    d = np.empty(n)
    e = np.zeros(max(n - 1, 0))
    for i in range(n):
        d[i] = H[i, i].real
    for i in range(n - 1):
        e[i] = abs(H[i + 1, i])
    return d, e


def tridiagonalize(H: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Real symmetric tridiagonal form of a Hermitian matrix.

    The unitary similarity fixes ``e1`` so that any rank-one term
    ``gamma * e1 e1^T`` is preserved.
    """
    return _tridiagonalize_hermitian(np.ascontiguousarray(H, dtype=np.complex128))


@njit(cache=True, inline="always")
def _csqrt(x, y):
    # principal square root of x + iy
    m = np.sqrt(x * x + y * y)
    if m == 0.0:
        return 0.0, 0.0
    if x >= 0.0:
        t = np.sqrt(0.5 * (m + x))
        return t, 0.5 * y / t
    t = np.sqrt(0.5 * (m - x))
    if y >= 0.0:
        return 0.5 * y / t, t
    return -0.5 * y / t, -t


@njit(cache=True, inline="always")
def _mod1(z):
    return abs(z.real) + abs(z.imag)


@njit(cache=True)
def _cs_tql(d, e, max_iter):
    # d: diagonal (n), e: coupling e[i] between i and i+1, e[n-1] = 0
    n = d.shape[0]
    total = 0
    for l in range(n):
        while True:
            m = l
            while m < n - 1:
                dd = _mod1(d[m]) + _mod1(d[m + 1])
                em = _mod1(e[m])
                if em <= 0.5 * _EPS * dd or em < 1e-300:
                    break
                m += 1
            if m == l:
                break
            total += 1
            if total > max_iter:
                return total, False
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            w = g * g + 1.0
            rr, ri = _csqrt(w.real, w.imag)
            r = complex(rr, ri)
            gp = g + r
            gm = g - r
            if gp.real * gp.real + gp.imag * gp.imag < gm.real * gm.real + gm.imag * gm.imag:
                gp = gm
            g = d[m] - d[l] + e[l] / gp
            s = 1.0 + 0.0j
            c = 1.0 + 0.0j
            p = 0.0j
            deflated = False
            i = m - 1
            while i >= l:
                ei = e[i]
                f = s * ei
                b = c * ei
                w = f * f + g * g
                rr, ri = _csqrt(w.real, w.imag)
                r = complex(rr, ri)
                e[i + 1] = r
                sc2 = f.real * f.real + f.imag * f.imag + g.real * g.real + g.imag * g.imag
                r2 = rr * rr + ri * ri
                if sc2 == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    deflated = True
                    break
                if r2 < 1e-16 * sc2:
                    # near-isotropic rotation: unstable
                    return total, False
                inv = complex(rr / r2, -ri / r2)
                s = f * inv
                c = g * inv
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if deflated:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return total, True


@njit(cache=True)
def _cs_rational_qr(a, b2, max_iter):
    # root-free implicit QR on (diagonal a, squared couplings b2); eigenvalues
    # of a complex symmetric tridiagonal matrix depend only on these
    n = a.shape[0]
    tnorm = 0.0
    for k in range(n):
        tnorm = max(tnorm, _mod1(a[k]))
    for k in range(n - 1):
        tnorm = max(tnorm, 2.0 * np.sqrt(_mod1(b2[k])))
    floor = (0.5 * _EPS * tnorm) ** 2
    eps2 = 0.25 * _EPS * _EPS
    total = 0
    hi = n - 1
    while hi > 0:
        lo = hi
        while lo > 0:
            s = _mod1(a[lo - 1]) + _mod1(a[lo])
            t = _mod1(b2[lo - 1])
            if t <= eps2 * s * s or t <= floor:
                b2[lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            continue
        total += 1
        if total > max_iter:
            return total, False
        # Wilkinson shift from the trailing 2x2 block
        delta = 0.5 * (a[hi - 1] - a[hi])
        w = delta * delta + b2[hi - 1]
        wr, wi = _csqrt(w.real, w.imag)
        r = complex(wr, wi)
        dp = delta + r
        dm = delta - r
        if _mod1(dp) < _mod1(dm):
            dp = dm
        if dp == 0.0:
            mu = a[hi]
        else:
            mu = a[hi] - b2[hi - 1] / dp
        if total % 20 == 19:
            # exceptional shift against stagnation
            mu = a[hi] + 0.5 * np.sqrt(_mod1(b2[hi - 1]))
        g = a[lo] - mu
        p = g * g
        c2 = 1.0 + 0.0j
        s2 = 0.0j
        for k in range(lo, hi):
            bk = b2[k]
            R = p + bk
            if R == 0.0:
                return total, False
            if k > lo:
                b2[k - 1] = s2 * R
            c2old = c2
            inv = 1.0 / R
            c2 = p * inv
            s2 = bk * inv
            gold = g
            anext = a[k + 1] - mu
            g = c2 * anext - s2 * gold
            a[k] = gold + anext - g + mu
            if c2 != 0.0:
                p = g * g / c2
            else:
                p = c2old * bk
        b2[hi - 1] = s2 * p
        a[hi] = g + mu
    return total, True


def tridiagonal_deformed_eigvals(
    diag: np.ndarray, offdiag: np.ndarray, gamma: float, *, check: bool = True
) -> tuple[np.ndarray, str]:
    """Eigenvalues of ``T + i*gamma*e1 e1^T`` with ``T`` real symmetric tridiagonal.

    Returns ``(eigs, route)``; ``route`` names the solver that produced the
    accepted answer: ``"rational"`` (root-free QR), ``"ql"`` (rotation QL)
    or ``"dense"`` (Hessenberg QR fallback).
    """
    n = len(diag)
    d0 = np.asarray(diag, dtype=np.complex128).copy()
    d0[0] += 1j * gamma
    b = np.asarray(offdiag, dtype=np.complex128)
    b2_0 = b * b
    max_iter = 30 * n + 30

    a = d0.copy()
    b2 = b2_0.copy()
    _, ok = _cs_rational_qr(a, b2, max_iter)
    if ok and (not check or _trace_ok(a, d0, b2_0)):
        return a, "rational"

    a = d0.copy()
    e = np.zeros(n, dtype=np.complex128)
    e[: n - 1] = b
    _, ok = _cs_tql(a, e, max_iter)
    if ok and (not check or _trace_ok(a, d0, b2_0)):
        return a, "ql"

    M = np.diag(d0) + np.diag(b, 1) + np.diag(b, -1)
    eig, _ = dense_eigvals(M)
    return eig, "dense"


def _trace_ok(z: np.ndarray, d0: np.ndarray, b2: np.ndarray) -> bool:
    # sum z = tr T and sum z^2 = tr T^2 for the accepted spectrum
    if not np.all(np.isfinite(z)):
        return False
    n = len(z)
    scale = float(np.sum(np.abs(d0) ** 2) + 2.0 * np.sum(np.abs(b2)))
    t1 = abs(np.sum(z) - np.sum(d0))
    t2 = abs(np.sum(z * z) - (np.sum(d0 * d0) + 2.0 * np.sum(b2)))
    return t1 <= 1e-11 * n * (1.0 + np.sqrt(scale)) and t2 <= 1e-10 * n * (1.0 + scale)
