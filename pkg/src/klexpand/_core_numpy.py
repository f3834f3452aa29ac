"""Pure-numpy implementations of the hot numeric kernels.

Twin of :mod:`klexpand._core_numba`; same signatures and semantics, selected
at import time by :mod:`klexpand._core`.  Keep both files in sync (the test
suite cross-checks them).
"""

import math

import numpy as np

_EPS = np.finfo(np.float64).eps
_MAX_QL_SWEEPS = 64


def tridiag_eigh_firstrow(d, e):
    """Eigenvalues and first eigenvector components of a symmetric
    tridiagonal matrix, via implicit-shift QL sweeps.

    Parameters
    ----------
    d : (n,) diagonal, e : (n-1,) off-diagonal.

    Returns
    -------
    w : (n,) eigenvalues, ascending.
    z : (n,) first component of each unit eigenvector, same order.
    """
    n = d.shape[0]
    d = d.astype(np.float64).copy()
    ee = np.zeros(n)
    if n > 1:
        ee[: n - 1] = e
    z = np.zeros(n)
    z[0] = 1.0
    for l in range(n):
        n_sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            n_sweeps += 1
            if n_sweeps > _MAX_QL_SWEEPS:
                raise RuntimeError("tridiagonal QL failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                f = z[i + 1]
                z[i + 1] = s * z[i] + c * f
                z[i] = c * z[i] - s * f
            if not underflow:
                d[l] -= p
                ee[l] = g
                ee[m] = 0.0
    order = np.argsort(d)
    return d[order], z[order]


def tridiag_eigh_full(d, e):
    """Full eigendecomposition of a symmetric tridiagonal matrix.

    Returns eigenvalues ascending and the matrix whose columns are the
    corresponding unit eigenvectors.
    """
    n = d.shape[0]
    d = d.astype(np.float64).copy()
    ee = np.zeros(n)
    if n > 1:
        ee[: n - 1] = e
    V = np.eye(n)
    for l in range(n):
        n_sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) <= _EPS * dd:
                    break
                m += 1
            if m == l:
                break
            n_sweeps += 1
            if n_sweeps > _MAX_QL_SWEEPS:
                raise RuntimeError("tridiagonal QL failed to converge")
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + math.copysign(r, g))
            s = 1.0
            c = 1.0
            p = 0.0
            underflow = False
            for i in range(m - 1, l - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                r = math.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                col = V[:, i + 1].copy()
                V[:, i + 1] = s * V[:, i] + c * col
                V[:, i] = c * V[:, i] - s * col
            if not underflow:
                d[l] -= p
                ee[l] = g
                ee[m] = 0.0
    order = np.argsort(d)
    return d[order], V[:, order]


def legendre_table_classical(nmax, t):
    """Table of classical Legendre values P_0..P_nmax at points t in [-1,1].

    Shape (nmax+1, len(t)).  Recurrence (k+1)P_{k+1} = (2k+1)t P_k - k P_{k-1}.
    """
    t = np.asarray(t, dtype=np.float64)
    out = np.empty((nmax + 1, t.shape[0]))
    out[0] = 1.0
    if nmax >= 1:
        out[1] = t
    for k in range(1, nmax):
        out[k + 1] = ((2 * k + 1) * t * out[k] - k * out[k - 1]) / (k + 1)
    return out


def legendre_table_monic(nmax, t):
    """Monic Legendre table; recurrence pi_{k+1} = t pi_k - beta_k pi_{k-1}."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty((nmax + 1, t.shape[0]))
    out[0] = 1.0
    if nmax >= 1:
        out[1] = t
    for k in range(1, nmax):
        beta = k * k / (4.0 * k * k - 1.0)
        out[k + 1] = t * out[k] - beta * out[k - 1]
    return out


def legendre_table_orthonormal(nmax, t):
    """Orthonormal-on-[-1,1] Legendre table via its own recurrence."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty((nmax + 1, t.shape[0]))
    out[0] = 1.0 / math.sqrt(2.0)
    if nmax >= 1:
        out[1] = math.sqrt(1.5) * t
    for k in range(1, nmax):
        ck = math.sqrt(4.0 - 1.0 / ((k + 1) * (k + 1)))
        bk = 1.0 / math.sqrt(4.0 - 1.0 / (k * k))
        out[k + 1] = ck * (t * out[k] - bk * out[k - 1])
    return out


def classical_moment_contraction(K, T, nmax):
    """G[beta, p] = sum_r K[p, r] * P_beta(T[p, r]) for beta = 0..nmax.

    K and T are (q, q); the Legendre recurrence runs degree by degree so only
    two work arrays of size q*q are alive at a time.
    """
    q = K.shape[0]
    G = np.empty((nmax + 1, q))
    pm = np.ones_like(T)
    G[0] = K.sum(axis=1)
    if nmax == 0:
        return G
    pc = T.copy()
    G[1] = (K * pc).sum(axis=1)
    for k in range(1, nmax):
        pn = ((2 * k + 1) * T * pc - k * pm) / (k + 1)
        G[k + 1] = (K * pn).sum(axis=1)
        pm = pc
        pc = pn
    return G
