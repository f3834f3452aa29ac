"""Numba-compiled implementations of the hot numeric kernels.

Twin of :mod:`klexpand._core_numpy`; same signatures and semantics.  Loops
are written out explicitly — that is what nopython mode compiles best.
"""

import math

import numpy as np
from numba import njit

_EPS = 2.220446049250313e-16
_MAX_QL_SWEEPS = 64


@njit(cache=False)
def tridiag_eigh_firstrow(d, e):
    n = d.shape[0]
    d = d.copy()
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
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


@njit(cache=False)
def tridiag_eigh_full(d, e):
    n = d.shape[0]
    d = d.copy()
    ee = np.zeros(n)
    for i in range(n - 1):
        ee[i] = e[i]
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
                for k in range(n):
                    f = V[k, i + 1]
                    V[k, i + 1] = s * V[k, i] + c * f
                    V[k, i] = c * V[k, i] - s * f
            if not underflow:
                d[l] -= p
                ee[l] = g
                ee[m] = 0.0
    order = np.argsort(d)
    w = d[order]
    Vs = np.empty_like(V)
    for j in range(n):
        Vs[:, j] = V[:, order[j]]
    return w, Vs


@njit(cache=False)
def legendre_table_classical(nmax, t):
    npts = t.shape[0]
    out = np.empty((nmax + 1, npts))
    for p in range(npts):
        out[0, p] = 1.0
    if nmax >= 1:
        for p in range(npts):
            out[1, p] = t[p]
    for k in range(1, nmax):
        for p in range(npts):
            out[k + 1, p] = ((2 * k + 1) * t[p] * out[k, p] - k * out[k - 1, p]) / (k + 1)
    return out


@njit(cache=False)
def legendre_table_monic(nmax, t):
    npts = t.shape[0]
    out = np.empty((nmax + 1, npts))
    for p in range(npts):
        out[0, p] = 1.0
    if nmax >= 1:
        for p in range(npts):
            out[1, p] = t[p]
    for k in range(1, nmax):
        beta = k * k / (4.0 * k * k - 1.0)
        for p in range(npts):
            out[k + 1, p] = t[p] * out[k, p] - beta * out[k - 1, p]
    return out


@njit(cache=False)
def legendre_table_orthonormal(nmax, t):
    npts = t.shape[0]
    out = np.empty((nmax + 1, npts))
    c0 = 1.0 / math.sqrt(2.0)
    for p in range(npts):
        out[0, p] = c0
    if nmax >= 1:
        c1 = math.sqrt(1.5)
        for p in range(npts):
            out[1, p] = c1 * t[p]
    for k in range(1, nmax):
        ck = math.sqrt(4.0 - 1.0 / ((k + 1.0) * (k + 1.0)))
        bk = 1.0 / math.sqrt(4.0 - 1.0 / (k * 1.0 * k))
        for p in range(npts):
            out[k + 1, p] = ck * (t[p] * out[k, p] - bk * out[k - 1, p])
    return out


@njit(cache=False)
def classical_moment_contraction(K, T, nmax):
    q = K.shape[0]
    qr = K.shape[1]
    G = np.zeros((nmax + 1, q))
    for p in range(q):
        for r in range(qr):
            w = K[p, r]
            tt = T[p, r]
            pm = 1.0
            G[0, p] += w
            if nmax >= 1:
                pc = tt
                G[1, p] += w * pc
                for k in range(1, nmax):
                    pn = ((2 * k + 1) * tt * pc - k * pm) / (k + 1)
                    G[k + 1, p] += w * pn
                    pm = pc
                    pc = pn
    return G
