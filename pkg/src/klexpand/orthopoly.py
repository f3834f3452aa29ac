"""Legendre polynomials and Gaussian quadrature on intervals.

Provides the three standard normalizations of the Legendre family (monic,
orthonormal, classical) through their three-term recurrences, the
closed-form norms and endpoint values, Gauss rules built from the Jacobi
matrix of recurrence coefficients, and multi-level composite rules with
geometrically refined panels toward zero.

All polynomials live on the reference interval [-1, 1]; evaluation on an
arbitrary interval maps affinely, t = (2x - lo - hi)/(hi - lo), and
quadrature weights scale by (hi - lo)/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _core

__all__ = [
    "RecurrenceCoeffs",
    "BasisSpec",
    "GaussRule",
    "recurrence_coeffs",
    "monic_value_at_one",
    "monic_norm_sq",
    "eval_basis",
    "gauss_rule",
    "composite_rule",
]

NORMALIZATIONS = ("monic", "orthonormal", "classical")


@dataclass(frozen=True)
class RecurrenceCoeffs:
    """Three-term recurrence coefficients alpha_k, beta_k of the monic
    Legendre family: pi_{k+1} = (t - alpha_k) pi_k - beta_k pi_{k-1}.

    For Legendre on a symmetric interval every alpha_k is zero and
    beta_k = k^2/(4k^2 - 1) for k >= 1, beta_0 = 0.
    """

    alpha: np.ndarray
    beta: np.ndarray


@dataclass(frozen=True)
class BasisSpec:
    """Which polynomial family to evaluate: degrees 0..degree_max on
    ``interval`` under one of the normalizations in ``NORMALIZATIONS``."""

    degree_max: int
    interval: tuple[float, float] = (-1.0, 1.0)
    normalization: str = "orthonormal"

    def __post_init__(self):
        lo, hi = self.interval
        if not lo < hi:
            raise ValueError(f"degenerate interval {self.interval}")
        if self.degree_max < 0:
            raise ValueError("degree_max must be >= 0")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")


@dataclass(frozen=True)
class GaussRule:
    """Quadrature nodes and positive weights on ``interval``.

    An n-point simple rule integrates polynomials of degree <= 2n-1
    exactly; composite rules concatenate simple rules over panels.
    """

    nodes: np.ndarray
    weights: np.ndarray
    interval: tuple[float, float]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values) -> float:
        """Weighted sum of integrand values sampled at ``nodes``."""
        return float(self.weights @ np.asarray(values, dtype=float))


def recurrence_coeffs(k_max: int) -> RecurrenceCoeffs:
    """Monic Legendre recurrence coefficients alpha_0..alpha_k, beta_0..beta_k."""
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    k = np.arange(k_max + 1, dtype=float)
    beta = np.zeros(k_max + 1)
    if k_max >= 1:
        kk = k[1:]
        beta[1:] = kk * kk / (4.0 * kk * kk - 1.0)
    return RecurrenceCoeffs(alpha=np.zeros(k_max + 1), beta=beta)


def monic_value_at_one(k: int) -> float:
    """pi_k(1) = 2^k (k!)^2 / (2k)!, accumulated as a product of ratios
    i/(2i-1) so large k neither overflows nor loses accuracy."""
    if k < 0:
        raise ValueError("k must be >= 0")
    val = 1.0
    for i in range(1, k + 1):
        val *= i / (2.0 * i - 1.0)
    return val


def monic_norm_sq(k: int) -> float:
    """||pi_k||^2 = 2^{2k+1}(k!)^4 / ((2k+1)((2k)!)^2) on [-1, 1].

    Computed via the stable identity ||pi_k||^2 = 2 pi_k(1)^2 / (2k+1).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    v = monic_value_at_one(k)
    return 2.0 * v * v / (2.0 * k + 1.0)


def _to_reference(points: np.ndarray, interval: tuple[float, float]) -> np.ndarray:
    lo, hi = interval
    length = hi - lo
    slack = 1e-12 * length
    if np.any(points < lo - slack) or np.any(points > hi + slack):
        raise ValueError(f"points outside interval [{lo}, {hi}]")
    # grouping (lo + hi) keeps the map an exact negation-symmetry on
    # symmetric intervals, so basis parity holds bitwise
    return (2.0 * points - (lo + hi)) / length


def eval_basis(spec: BasisSpec, points) -> np.ndarray:
    """Evaluate degrees 0..degree_max at ``points``; shape (degree+1, npts).

    Each normalization runs its own three-term recurrence.  For
    ``orthonormal`` the values carry the extra ((hi-lo)/2)^{-1/2} factor so
    the family is orthonormal on ``spec.interval`` itself.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    t = _to_reference(pts, spec.interval)
    n = spec.degree_max
    if spec.normalization == "classical":
        return _core.legendre_table_classical(n, t)
    if spec.normalization == "monic":
        return _core.legendre_table_monic(n, t)
    table = _core.legendre_table_orthonormal(n, t)
    lo, hi = spec.interval
    return table / math.sqrt((hi - lo) / 2.0)


def gauss_rule(n: int, interval: tuple[float, float] = (-1.0, 1.0)) -> GaussRule:
    """n-point Gauss-Legendre rule on ``interval``.

    Nodes are the eigenvalues of the n-by-n Jacobi matrix (zero diagonal,
    off-diagonal sqrt(beta_k)); the weight attached to node i is
    m_0 (v_1^{(i)})^2 with m_0 = 2 for the first component of the
    associated unit eigenvector, then both are mapped affinely.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    lo, hi = interval
    if not lo < hi:
        raise ValueError(f"degenerate interval {interval}")
    k = np.arange(1, n, dtype=float)
    off = np.sqrt(k * k / (4.0 * k * k - 1.0))
    t, z = _core.tridiag_eigh_firstrow(np.zeros(n), off)
    half = 0.5 * (hi - lo)
    nodes = 0.5 * (lo + hi) + half * t
    weights = 2.0 * z * z * half
    return GaussRule(nodes=nodes, weights=weights, interval=(lo, hi))


def composite_rule(L: float, levels: int, ratio: float, n_per_panel: int) -> GaussRule:
    """Multi-level composite Gauss rule on [0, L].

    The interval splits into the geometric panels [0, L r^m],
    [L r^m, L r^{m-1}], ..., [L r, L] with m = ``levels`` and r = ``ratio``,
    each carrying an ``n_per_panel``-point Gauss rule, so the smallest
    panel hugs zero.  Node count is (levels + 1) * n_per_panel.
    """
    if L <= 0:
        raise ValueError("L must be > 0")
    if levels < 0:
        raise ValueError("levels must be >= 0")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must be in (0, 1)")
    if n_per_panel < 1:
        raise ValueError("n_per_panel must be >= 1")
    edges = [0.0] + [L * ratio**i for i in range(levels, -1, -1)]
    nodes = []
    weights = []
    for a, b in zip(edges[:-1], edges[1:]):
        panel = gauss_rule(n_per_panel, (a, b))
        nodes.append(panel.nodes)
        weights.append(panel.weights)
    return GaussRule(
        nodes=np.concatenate(nodes),
        weights=np.concatenate(weights),
        interval=(0.0, L),
    )
