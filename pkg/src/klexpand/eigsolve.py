"""Leading eigenpairs of the parity operators.

Each parity block is solved independently: densely (numpy.linalg.eigh on
the materialized matrix) when its dimension is at most 512, otherwise by
Lanczos with full reorthogonalization, which costs more per step than the
plain three-term iteration but never produces ghost copies of converged
eigenvalues.  Per-block results are merged into a single descending
spectrum carrying the parity vector of every pair.

The operators are positive semi-definite up to quadrature error; merged
eigenvalues below zero are clipped, with a warning when they fall below
-tol * lambda_1.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._core import tridiag_eigh_full
from .kronop import KronOperator

__all__ = ["EigRequest", "Spectrum", "lanczos_topk", "solve_blocks"]

_DENSE_DIM = 512


@dataclass(frozen=True)
class EigRequest:
    """How many pairs per block, at which relative residual tolerance."""

    num_pairs: int
    tol: float = 1e-10
    max_lanczos_dim: int | None = None

    def __post_init__(self):
        if self.num_pairs < 1:
            raise ValueError("num_pairs must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")


@dataclass
class Spectrum:
    """Eigenpairs sorted by descending eigenvalue.

    ``vectors[i]`` lives in the per-parity block coordinates of the
    operator labelled ``parities[i]``; ``residuals[i]`` is the true
    two-norm residual ||A v - lambda v||.  ``converged`` is False when a
    Lanczos run hit its subspace cap before certifying every requested
    pair (the returned pairs are still the best Ritz approximations).
    """

    eigenvalues: np.ndarray
    vectors: list[np.ndarray]
    parities: list[tuple[int, ...]]
    residuals: np.ndarray
    converged: bool = True
    clipped: int = 0

    def __len__(self) -> int:
        return self.eigenvalues.size


def _fix_sign(v: np.ndarray) -> np.ndarray:
    # deterministic orientation: largest-magnitude entry made positive
    i = int(np.argmax(np.abs(v)))
    return -v if v[i] < 0 else v


def _dense_topk(op: KronOperator, m: int) -> tuple[np.ndarray, list[np.ndarray]]:
    w, V = np.linalg.eigh(op.materialize())
    order = np.argsort(w)[::-1][:m]
    return w[order], [_fix_sign(V[:, j]) for j in order]


def lanczos_topk(op: KronOperator, req: EigRequest, seed: int = 0) -> Spectrum:
    """Largest ``req.num_pairs`` eigenpairs of one parity operator.

    Deterministic for a fixed seed.  Dense path for dim <= 512.
    """
    dim = op.dim
    m_want = min(req.num_pairs, dim)
    if dim <= _DENSE_DIM:
        vals, vecs = _dense_topk(op, m_want)
        resid = np.array([np.linalg.norm(op.matvec(v) - lam * v) for lam, v in zip(vals, vecs)])
        return Spectrum(
            eigenvalues=vals,
            vectors=vecs,
            parities=[op.parity] * m_want,
            residuals=resid,
            converged=True,
        )

    rng = np.random.default_rng(seed)
    m_cap = req.max_lanczos_dim or min(dim, max(4 * m_want, 2 * m_want + 100))
    m_cap = min(m_cap, dim)
    V = np.empty((m_cap, dim))
    alpha = np.zeros(m_cap)
    beta = np.zeros(m_cap)

    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    converged = False
    j_done = 0
    for j in range(m_cap):
        V[j] = v
        w = op.matvec(v)
        alpha[j] = v @ w
        w -= alpha[j] * v
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        # full reorthogonalization, twice for floating-point safety
        basis = V[: j + 1]
        w -= basis.T @ (basis @ w)
        w -= basis.T @ (basis @ w)
        b = np.linalg.norm(w)
        scale = max(np.abs(alpha[: j + 1]).max(), beta[: j + 1].max(), 1e-300)
        if b <= 1e-13 * scale:
            # invariant subspace found; restart with a fresh direction
            w = rng.standard_normal(dim)
            w -= basis.T @ (basis @ w)
            b_new = np.linalg.norm(w)
            if b_new <= 1e-8:
                j_done = j + 1
                converged = True
                break
            beta[j] = 0.0
            v = w / b_new
        else:
            beta[j] = b
            v = w / b
        j_done = j + 1
        if j_done >= 2 * m_want and (j_done % 20 == 0 or j_done == m_cap):
            theta, S = tridiag_eigh_full(alpha[:j_done], beta[: j_done - 1])
            top = np.argsort(theta)[::-1][:m_want]
            bounds = np.abs(beta[j_done - 1] * S[j_done - 1, top])
            if np.all(bounds <= req.tol * max(abs(theta[top[0]]), 1e-300)):
                converged = True
                break

    theta, S = tridiag_eigh_full(alpha[:j_done], beta[: j_done - 1])
    order = np.argsort(theta)[::-1][:m_want]
    vals = theta[order]
    X = S[:, order].T @ V[:j_done]
    vecs = []
    resid = np.empty(m_want)
    for i in range(m_want):
        x = X[i]
        x /= np.linalg.norm(x)
        x = _fix_sign(x)
        vecs.append(x)
        resid[i] = np.linalg.norm(op.matvec(x) - vals[i] * x)
    lam1 = max(abs(vals[0]), 1e-300)
    if not converged:
        converged = bool(np.all(resid <= req.tol * lam1))
    return Spectrum(
        eigenvalues=vals,
        vectors=vecs,
        parities=[op.parity] * m_want,
        residuals=resid,
        converged=converged,
    )


def _cluster_sort(spec: Spectrum) -> Spectrum:
    """Descending sort; ties (rel. 1e-10) ordered by parity vector."""
    idx = sorted(
        range(len(spec)),
        key=lambda i: (-spec.eigenvalues[i], spec.parities[i]),
    )
    # group near-degenerate values and re-sort each cluster by parity label
    out: list[int] = []
    i = 0
    lam = spec.eigenvalues
    while i < len(idx):
        j = i + 1
        ref = lam[idx[i]]
        while j < len(idx) and abs(lam[idx[j]] - ref) <= 1e-10 * max(abs(ref), 1e-300):
            j += 1
        out.extend(sorted(idx[i:j], key=lambda t: spec.parities[t]))
        i = j
    return Spectrum(
        eigenvalues=lam[out],
        vectors=[spec.vectors[i] for i in out],
        parities=[spec.parities[i] for i in out],
        residuals=spec.residuals[out],
        converged=spec.converged,
        clipped=spec.clipped,
    )


def solve_blocks(
    ops: dict[tuple[int, ...], KronOperator],
    req: EigRequest,
    seed: int = 0,
    threads: int = 1,
) -> Spectrum:
    """Top pairs of every parity block, merged into one descending spectrum."""
    items = sorted(ops.items())

    def _solve(pair):
        idx, (eps, op) = pair
        block_req = EigRequest(
            num_pairs=min(req.num_pairs, op.dim),
            tol=req.tol,
            max_lanczos_dim=req.max_lanczos_dim,
        )
        return lanczos_topk(op, block_req, seed=seed + idx)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_solve, enumerate(items)))
    else:
        parts = [_solve(p) for p in enumerate(items)]

    eigenvalues = np.concatenate([p.eigenvalues for p in parts])
    vectors = [v for p in parts for v in p.vectors]
    parities = [eps for p in parts for eps in p.parities]
    residuals = np.concatenate([p.residuals for p in parts])
    converged = all(p.converged for p in parts)

    lam1 = max(eigenvalues.max(initial=0.0), 1e-300)
    below = eigenvalues < -req.tol * lam1
    if np.any(below):
        warnings.warn(
            f"clipping {int(below.sum())} eigenvalue(s) below -tol*lambda_1 to zero "
            "(operator is PSD up to quadrature error)",
            RuntimeWarning,
            stacklevel=2,
        )
    clipped = int((eigenvalues < 0).sum())
    eigenvalues = np.maximum(eigenvalues, 0.0)

    return _cluster_sort(
        Spectrum(
            eigenvalues=eigenvalues,
            vectors=vectors,
            parities=parities,
            residuals=residuals,
            converged=converged,
            clipped=clipped,
        )
    )
