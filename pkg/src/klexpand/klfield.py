"""Truncated Karhunen-Loeve expansions: evaluation, sampling, diagnostics.

A :class:`KLExpansion` stores descending eigenvalues and, per eigenpair,
the coefficient tensor over the full tensor-product basis of degree n
(parity-embedded: entries on mismatched parities are exact zeros).
Eigenfunctions are phi_j(x) = sum_alpha u_{j,alpha} prod_l phi_{alpha_l}(x_l)
with per-direction bases orthonormal on the domain intervals.

Sampling draws independent standard Gaussian coefficients from an
explicitly seeded generator (numpy PCG64 via ``default_rng``; the stream
for sample s of a batch is seeded by the pair (seed, s), so serial and
parallel batch evaluation agree) and sums the series

    Z(x) = sum_{j <= N} sqrt(lambda_j) xi_j phi_j(x).

One-dimensional a-posteriori diagnostics evaluate against the ORIGINAL
kernel, so both the mixture-fit error and the Galerkin truncation error
are visible: the eigenpair residual ||(C phi_j)(x) - lambda_j phi_j(x)||
(inner integral split at y = x, where the kernel may lose smoothness) and
the covariance reconstruction error ||C - C_N|| over the square (double
integral split along the diagonal the same way).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .eigsolve import EigRequest, Spectrum, solve_blocks
from .kernels import KernelSpec, kernel_eval_batch
from .kronop import Domain, build_operators
from .orthopoly import BasisSpec, composite_rule, eval_basis, gauss_rule
from .sefit import SqExpMixture, load_mixture, save_mixture
from .assembly import DuffyConfig

__all__ = [
    "KLExpansion",
    "build_expansion",
    "eigenfunction_eval",
    "sample",
    "sample_batch",
    "covariance_N",
    "residual",
    "cov_l2_error",
    "covariance_l2_distance",
    "save_expansion",
    "load_expansion",
]


@dataclass(frozen=True)
class KLExpansion:
    """Eigenpairs of the discretized covariance operator, ready to evaluate."""

    domain: Domain
    degree: int
    mixture: SqExpMixture
    eigenvalues: np.ndarray  # (N,), descending, >= 0
    coeffs: np.ndarray  # (N, (degree+1)^D), C order, direction 0 slowest
    parities: tuple[tuple[int, ...], ...]
    meta: dict = field(default_factory=dict)

    @property
    def num_pairs(self) -> int:
        return self.eigenvalues.size

    def basis_tables(self, grid_axes) -> list[np.ndarray]:
        """Orthonormal basis tables, one (degree+1, npts_l) per direction."""
        return [
            eval_basis(BasisSpec(self.degree, interval, "orthonormal"), np.asarray(pts, float))
            for interval, pts in zip(self.domain.intervals, grid_axes)
        ]


def _embed_spectrum(spectrum: Spectrum, degree: int, D: int) -> np.ndarray:
    """Scatter per-parity block vectors into full-tensor coefficient rows."""
    n1 = degree + 1
    coeffs = np.zeros((len(spectrum), n1**D))
    for row, (vec, eps) in enumerate(zip(spectrum.vectors, spectrum.parities)):
        maps = [np.arange(e, n1, 2) for e in eps]
        dims = tuple(m.size for m in maps)
        full = np.zeros((n1,) * D)
        full[np.ix_(*maps)] = vec.reshape(dims)
        coeffs[row] = full.ravel()
    return coeffs


def build_expansion(
    mixture: SqExpMixture,
    domain: Domain,
    degree: int,
    num_pairs: int,
    eig_tol: float = 1e-10,
    seed: int = 0,
    duffy: DuffyConfig | None = None,
    threads: int = 1,
    pairs_per_block: int | None = None,
) -> KLExpansion:
    """Assemble the parity operators, solve every block, embed and merge.

    ``num_pairs`` is the requested global count; each of the 2^D blocks is
    asked for ceil(num_pairs / 2^D) pairs unless ``pairs_per_block``
    overrides that.
    """
    D = domain.D
    if pairs_per_block is None:
        pairs_per_block = -(-num_pairs // 2**D)  # ceil
    ops = build_operators(mixture, domain, degree, duffy=duffy, threads=threads)
    spectrum = solve_blocks(
        ops, EigRequest(num_pairs=pairs_per_block, tol=eig_tol), seed=seed, threads=threads
    )
    keep = min(num_pairs, len(spectrum))
    trimmed = Spectrum(
        eigenvalues=spectrum.eigenvalues[:keep],
        vectors=spectrum.vectors[:keep],
        parities=spectrum.parities[:keep],
        residuals=spectrum.residuals[:keep],
        converged=spectrum.converged,
        clipped=spectrum.clipped,
    )
    coeffs = _embed_spectrum(trimmed, degree, D)
    meta = {
        "fit_tol": None if math.isnan(mixture.fit_tol) else mixture.fit_tol,
        "eig_tol": eig_tol,
        "seed": seed,
        "pairs_per_block": pairs_per_block,
        "eig_converged": trimmed.converged,
        "clipped_eigenvalues": trimmed.clipped,
        "block_dims": {"".join(map(str, eps)): op.dim for eps, op in sorted(ops.items())},
    }
    return KLExpansion(
        domain=domain,
        degree=degree,
        mixture=mixture,
        eigenvalues=trimmed.eigenvalues.copy(),
        coeffs=coeffs,
        parities=tuple(trimmed.parities),
        meta=meta,
    )


def _check_points(exp: KLExpansion, points: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[1] != exp.domain.D:
        raise ValueError(f"points must be (*, {exp.domain.D})")
    for l, (lo, hi) in enumerate(exp.domain.intervals):
        slack = 1e-12 * (hi - lo)
        if np.any(pts[:, l] < lo - slack) or np.any(pts[:, l] > hi + slack):
            raise ValueError(f"point outside domain in direction {l}")
    return pts


def _eval_rows(exp: KLExpansion, rows: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate chosen coefficient rows at scattered points: (nrows, npts)."""
    pts = _check_points(exp, points)
    tables = exp.basis_tables([pts[:, l] for l in range(exp.domain.D)])
    n1 = exp.degree + 1
    out = rows.reshape((rows.shape[0],) + (n1,) * exp.domain.D)
    # contract one direction at a time against that direction's point values
    acc = np.einsum("ri...,ip->r...p", out, tables[0])
    for table in tables[1:]:
        acc = np.einsum("ri...p,ip->r...p", acc, table)
    return acc.reshape(rows.shape[0], pts.shape[0])


def eigenfunction_eval(exp: KLExpansion, j: int, points) -> np.ndarray:
    """Values of eigenfunction j (0-based, 0 = largest eigenvalue)."""
    if not 0 <= j < exp.num_pairs:
        raise IndexError(f"eigenpair index {j} out of range [0, {exp.num_pairs})")
    return _eval_rows(exp, exp.coeffs[j : j + 1], points)[0]


def covariance_N(exp: KLExpansion, n_trunc: int, x, y) -> float:
    """Truncated covariance C_N(x, y) = sum_{j<N} lambda_j phi_j(x) phi_j(y)."""
    if not 0 <= n_trunc <= exp.num_pairs:
        raise ValueError(f"n_trunc must be in [0, {exp.num_pairs}]")
    if n_trunc == 0:
        return 0.0
    vals = _eval_rows(exp, exp.coeffs[:n_trunc], np.vstack([x, y]))
    return float(np.sum(exp.eigenvalues[:n_trunc] * vals[:, 0] * vals[:, 1]))


def _grid_field(exp: KLExpansion, combo: np.ndarray, grid_axes) -> np.ndarray:
    """Mode-contract combined coefficient tensors onto a tensor grid.

    combo: (S, (n+1)^D) rows of coefficient combinations; returns
    (S, npts_1, ..., npts_D).
    """
    n1 = exp.degree + 1
    tables = exp.basis_tables(grid_axes)
    T = combo.reshape((combo.shape[0],) + (n1,) * exp.domain.D)
    for axis, table in enumerate(tables, start=1):
        T = np.moveaxis(np.tensordot(table.T, T, axes=(1, axis)), 0, axis)
    return T


def _xi_matrix(n_trunc: int, seed: int, n_samples: int, start_index: int) -> np.ndarray:
    xi = np.empty((n_samples, n_trunc))
    for s in range(n_samples):
        xi[s] = np.random.default_rng((seed, start_index + s)).standard_normal(n_trunc)
    return xi


def sample(exp: KLExpansion, n_trunc: int, seed: int, grid_axes) -> np.ndarray:
    """One field realization on the tensor grid given by per-axis points."""
    return sample_batch(exp, n_trunc, seed, grid_axes, 1)[0]


def sample_batch(
    exp: KLExpansion,
    n_trunc: int,
    seed: int,
    grid_axes,
    n_samples: int,
    start_index: int = 0,
) -> np.ndarray:
    """``n_samples`` independent realizations.

    Sample s draws its Gaussian coefficients from the stream seeded by
    (seed, start_index + s), so chunked or parallel generation sees the
    same coefficient streams as one serial batch; values agree to a few
    ulps (summation order inside the BLAS contraction may differ across
    batch shapes) and repeated identical calls are bitwise equal.
    """
    if not 0 <= n_trunc <= exp.num_pairs:
        raise ValueError(f"n_trunc must be in [0, {exp.num_pairs}]")
    shape = tuple(len(np.atleast_1d(np.asarray(g))) for g in grid_axes)
    if n_trunc == 0:
        return np.zeros((n_samples,) + shape)
    xi = _xi_matrix(n_trunc, seed, n_samples, start_index)
    combo = (xi * np.sqrt(exp.eigenvalues[:n_trunc])) @ exp.coeffs[:n_trunc]
    return _grid_field(exp, combo, grid_axes)


def truncated_variance(exp: KLExpansion, n_trunc: int, points) -> np.ndarray:
    """Pointwise variance of the truncated series: sum_j lambda_j phi_j(x)^2."""
    vals = _eval_rows(exp, exp.coeffs[:n_trunc], points)
    return np.asarray(exp.eigenvalues[:n_trunc]) @ vals**2


def _require_1d(exp: KLExpansion, what: str) -> tuple[float, float]:
    if exp.domain.D != 1:
        raise ValueError(f"{what} is only supported for one-dimensional expansions")
    return exp.domain.intervals[0]


def residual(exp: KLExpansion, j: int, quad_points_per_panel: int = 80) -> float:
    """L2 residual ||(C phi_j)(x) - lambda_j phi_j(x)|| against the original kernel.

    The inner integral over y splits at y = x into two Gauss panels of
    ``quad_points_per_panel`` points each; the outer norm uses a 200-point
    two-panel composite rule.
    """
    lo, hi = _require_1d(exp, "residual")
    if not 0 <= j < exp.num_pairs:
        raise IndexError(f"eigenpair index {j} out of range")
    kernel = exp.mixture.kernel
    lam = exp.eigenvalues[j]
    mid = 0.5 * (lo + hi)
    outer_parts = [gauss_rule(100, (lo, mid)), gauss_rule(100, (mid, hi))]
    ox = np.concatenate([r.nodes for r in outer_parts])
    ow = np.concatenate([r.weights for r in outer_parts])

    # inner split panels per outer node, evaluated in one batch
    q = quad_points_per_panel
    ref = gauss_rule(q, (0.0, 1.0))
    left_nodes = lo + (ox - lo)[:, None] * ref.nodes[None, :]
    left_w = (ox - lo)[:, None] * ref.weights[None, :]
    right_nodes = ox[:, None] + (hi - ox)[:, None] * ref.nodes[None, :]
    right_w = (hi - ox)[:, None] * ref.weights[None, :]
    y = np.hstack([left_nodes, right_nodes])  # (n_outer, 2q)
    wy = np.hstack([left_w, right_w])
    u_y = _eval_rows(exp, exp.coeffs[j : j + 1], y.reshape(-1, 1))[0].reshape(y.shape)
    c = kernel_eval_batch(kernel, np.abs(y - ox[:, None]))
    integral = np.sum(wy * c * u_y, axis=1)
    u_x = _eval_rows(exp, exp.coeffs[j : j + 1], ox.reshape(-1, 1))[0]
    return float(np.sqrt(ow @ (integral - lam * u_x) ** 2))


def _diag_split_grid(exp: KLExpansion, q: int):
    """Duffy-mapped quadrature for integrals over the square [lo,hi]^2 that
    are symmetric in (x, y): returns flattened (x, y, weight) with the
    factor 2 * xi * gamma^2 folded into the weights."""
    lo, hi = exp.domain.intervals[0]
    gamma = hi - lo
    ref = gauss_rule(q, (0.0, 1.0))
    xi, wx = ref.nodes, ref.weights
    X = lo + gamma * xi[:, None] * np.ones((1, q))
    Y = lo + gamma * xi[:, None] * (1.0 - xi)[None, :]
    W = 2.0 * gamma * gamma * (wx * xi)[:, None] * wx[None, :]
    return X.ravel(), Y.ravel(), W.ravel()


def cov_l2_error(exp: KLExpansion, n_trunc: int, quad_points: int = 160) -> float:
    """||C - C_N|| over the square, C the original kernel, diagonal-split."""
    _require_1d(exp, "cov_l2_error")
    if not 0 <= n_trunc <= exp.num_pairs:
        raise ValueError(f"n_trunc must be in [0, {exp.num_pairs}]")
    x, y, w = _diag_split_grid(exp, quad_points)
    c = kernel_eval_batch(exp.mixture.kernel, np.abs(x - y))
    if n_trunc:
        vx = _eval_rows(exp, exp.coeffs[:n_trunc], x.reshape(-1, 1))
        vy = _eval_rows(exp, exp.coeffs[:n_trunc], y.reshape(-1, 1))
        c_n = exp.eigenvalues[:n_trunc] @ (vx * vy)
    else:
        c_n = 0.0
    return float(np.sqrt(w @ (c - c_n) ** 2))


def covariance_l2_distance(
    exp: KLExpansion, n_a: int, n_b: int, quad_points: int = 160
) -> float:
    """||C_{n_a} - C_{n_b}|| over the square (truncations of one expansion)."""
    _require_1d(exp, "covariance_l2_distance")
    lo_t, hi_t = sorted((n_a, n_b))
    if lo_t < 0 or hi_t > exp.num_pairs:
        raise ValueError("truncations out of range")
    x, y, w = _diag_split_grid(exp, quad_points)
    if lo_t == hi_t:
        return 0.0
    rows = exp.coeffs[lo_t:hi_t]
    vx = _eval_rows(exp, rows, x.reshape(-1, 1))
    vy = _eval_rows(exp, rows, y.reshape(-1, 1))
    diff = exp.eigenvalues[lo_t:hi_t] @ (vx * vy)
    return float(np.sqrt(w @ diff**2))


def save_expansion(exp: KLExpansion, basepath) -> None:
    """Write ``<basepath>.kl.json`` (metadata) and ``<basepath>.kl.bin``
    (row-major float64 coefficient array)."""
    base = str(basepath)
    coeffs = np.ascontiguousarray(exp.coeffs, dtype=np.float64)
    with open(base + ".kl.bin", "wb") as fh:
        fh.write(coeffs.tobytes())
    doc = {
        "format": "klexpand-expansion",
        "version": 1,
        "domain": [[a, b] for a, b in exp.domain.intervals],
        "degree": exp.degree,
        "mixture": _mixture_doc(exp.mixture),
        "eigenvalues": [float(v) for v in exp.eigenvalues],
        "parities": ["".join(map(str, eps)) for eps in exp.parities],
        "meta": exp.meta,
        "coeff_file": os.path.basename(base) + ".kl.bin",
        "coeff_shape": list(coeffs.shape),
        "coeff_dtype": "float64",
        "coeff_order": "C",
    }
    with open(base + ".kl.json", "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _mixture_doc(mixture: SqExpMixture) -> dict:
    return {
        "kernel": mixture.kernel.id,
        "length_scale": mixture.kernel.length_scale,
        "variance": mixture.kernel.variance,
        "L": mixture.fit_domain_L,
        "tol": None if math.isnan(mixture.fit_tol) else mixture.fit_tol,
        "a": [float(v) for v in mixture.a],
        "b": [float(v) for v in mixture.b],
        "achieved_error": mixture.achieved_error,
    }


def load_expansion(basepath) -> KLExpansion:
    base = str(basepath)
    with open(base + ".kl.json") as fh:
        doc = json.load(fh)
    if doc.get("format") != "klexpand-expansion":
        raise ValueError(f"{base}.kl.json is not an expansion file")
    mdoc = doc["mixture"]
    mixture = SqExpMixture(
        a=np.asarray(mdoc["a"], dtype=float),
        b=np.asarray(mdoc["b"], dtype=float),
        kernel=KernelSpec(mdoc["kernel"], mdoc["length_scale"], mdoc["variance"]),
        fit_domain_L=mdoc["L"],
        achieved_error=mdoc["achieved_error"],
        fit_tol=float("nan") if mdoc.get("tol") is None else mdoc["tol"],
    )
    shape = tuple(doc["coeff_shape"])
    bin_path = os.path.join(os.path.dirname(base) or ".", doc["coeff_file"])
    coeffs = np.fromfile(bin_path, dtype=np.float64).reshape(shape)
    return KLExpansion(
        domain=Domain(tuple(tuple(iv) for iv in doc["domain"])),
        degree=doc["degree"],
        mixture=mixture,
        eigenvalues=np.asarray(doc["eigenvalues"], dtype=float),
        coeffs=coeffs,
        parities=tuple(tuple(int(c) for c in s) for s in doc["parities"]),
        meta=doc.get("meta", {}),
    )
