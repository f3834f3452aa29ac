"""One-dimensional Galerkin blocks of squared-exponential kernel terms.

For a single exponent b the target matrix over the orthonormal Legendre
basis on an interval is

    M[alpha, beta] = integral integral e^{-b (x-y)^2} phi_alpha(x) phi_beta(y) dy dx.

Cross-parity entries vanish, so only the even/even and odd/odd blocks are
computed and stored (:class:`ParityBlockSet`).  Everything is assembled on
the unit interval; :func:`rescale_to_unit` maps a general interval to an
effective exponent b_eff = b * len^2 plus a multiplicative factor len.

Two quadrature paths exist.  :func:`plain_tensor_block` applies a tensor
Gauss rule directly on [0,1]^2; it degrades badly once b_eff >> 1 because
the kernel concentrates in a thin diagonal strip.  :func:`duffy_block`
splits the square along the diagonal, maps each triangle back to the
square (Jacobian xi, kernel argument xi^2 eta^2, peak moved to two edges)
and stretches both axes algebraically by xi = u^g, eta = v^g.  With
matching parity the two triangles contribute equally, giving

    2 g^2 * int int u^{2g-1} v^{g-1} e^{-b u^{2g} v^{2g}}
                    phi_alpha(u^g) phi_beta((1 - v^g) u^g) du dv,

which a moderate tensor Gauss grid resolves even for b_eff ~ 1e10.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import numpy as np

from . import _core
from .orthopoly import gauss_rule

__all__ = [
    "DuffyConfig",
    "ParityBlockSet",
    "BlockCache",
    "default_stretch",
    "default_duffy_config",
    "rescale_to_unit",
    "duffy_block",
    "plain_tensor_block",
    "reference_block",
]


@dataclass(frozen=True)
class DuffyConfig:
    """Stretching exponent g >= 1 and tensor-grid points per axis q >= 2."""

    g: int
    q: int

    def __post_init__(self):
        if self.g < 1:
            raise ValueError("stretching exponent g must be >= 1")
        if self.q < 2:
            raise ValueError("q must be >= 2")


@dataclass(frozen=True)
class ParityBlockSet:
    """Even/even and odd/odd sub-blocks of one kernel-term matrix.

    ``even`` has size ceil((n+1)/2), ``odd`` floor((n+1)/2); degrees are
    ascending within each block (0,2,4,... and 1,3,5,...).  ``full()``
    reassembles the (n+1)x(n+1) matrix with exact zeros across parities.
    """

    even: np.ndarray
    odd: np.ndarray
    b_eff: float
    interval_len: float = 1.0

    @property
    def degree(self) -> int:
        return self.even.shape[0] + self.odd.shape[0] - 1

    def full(self) -> np.ndarray:
        n1 = self.even.shape[0] + self.odd.shape[0]
        out = np.zeros((n1, n1))
        out[0::2, 0::2] = self.even
        out[1::2, 1::2] = self.odd
        return out

    def scaled(self, length: float) -> "ParityBlockSet":
        """Blocks for the interval of the given length (factor ``length``)."""
        return ParityBlockSet(
            even=length * self.even,
            odd=length * self.odd,
            b_eff=self.b_eff,
            interval_len=length,
        )


def default_stretch(b_eff: float) -> int:
    """Stretching exponent heuristic: sharper kernels want more stretching."""
    for g, bound in ((1, 1e2), (2, 1e5), (3, 1e8), (4, 1e11)):
        if b_eff < bound:
            return g
    return 5


def default_duffy_config(n: int, b_eff: float) -> DuffyConfig:
    """Heuristic configuration; q grows with g because stretching raises the
    effective polynomial frequency."""
    g = default_stretch(b_eff)
    return DuffyConfig(g=g, q=2 * (n + 1) + 32 * g)


def rescale_to_unit(b: float, interval: tuple[float, float]) -> tuple[float, float]:
    """Map exponent b on ``interval`` to (b_eff, scale) on the unit interval.

    With bases orthonormal on their own intervals, the interval matrix for
    exponent b equals scale times the unit-interval matrix for b_eff,
    where b_eff = b*(hi-lo)^2 and scale = hi-lo.
    """
    lo, hi = interval
    if not hi > lo:
        raise ValueError(f"degenerate interval {interval}")
    if b <= 0:
        raise ValueError("exponent b must be > 0")
    length = hi - lo
    return b * length * length, length


_RULE_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _unit_rule(q: int) -> tuple[np.ndarray, np.ndarray]:
    if q not in _RULE_CACHE:
        rule = gauss_rule(q, (0.0, 1.0))
        _RULE_CACHE[q] = (rule.nodes, rule.weights)
    return _RULE_CACHE[q]


def _unit_orthonormal_table(nmax: int, x: np.ndarray) -> np.ndarray:
    """phi_0..phi_nmax orthonormal on [0,1]: sqrt(2k+1) P_k(2x-1)."""
    table = _core.legendre_table_classical(nmax, 2.0 * x - 1.0)
    return table * np.sqrt(2.0 * np.arange(nmax + 1) + 1.0)[:, None]


def _mirror_upper(M: np.ndarray) -> np.ndarray:
    # one value per unordered pair: keep the upper triangle, mirror it down
    return np.triu(M) + np.triu(M, 1).T


def _split(M: np.ndarray, b_eff: float) -> ParityBlockSet:
    return ParityBlockSet(even=M[0::2, 0::2].copy(), odd=M[1::2, 1::2].copy(), b_eff=b_eff)


def duffy_block(n: int, b_eff: float, cfg: DuffyConfig | None = None) -> ParityBlockSet:
    """Diagonal-split, algebraically stretched assembly on the unit interval."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    if b_eff <= 0:
        raise ValueError("b_eff must be > 0")
    if cfg is None:
        cfg = default_duffy_config(n, b_eff)
    if cfg.q < n + 1:
        raise ValueError(f"q={cfg.q} too small to resolve degree {n}")
    g, q = cfg.g, cfg.q
    u, wu = _unit_rule(q)
    xi = u**g  # stretched outer variable, also the eta values (same axis rule)
    # kernel times all scalar factors and both weights, on the (u, v) grid
    K = (
        2.0
        * g
        * g
        * (wu * u ** (2 * g - 1))[:, None]
        * (wu * u ** (g - 1))[None, :]
        * np.exp(-b_eff * np.outer(xi * xi, xi * xi))
    )
    E1 = _unit_orthonormal_table(n, xi)  # (n+1, q)
    Y = xi[:, None] * (1.0 - xi)[None, :]  # inner basis arguments, (q, q)
    G = _core.classical_moment_contraction(K, 2.0 * Y - 1.0, n)
    G *= np.sqrt(2.0 * np.arange(n + 1) + 1.0)[:, None]
    M = E1 @ G.T  # M[alpha, beta] = sum_p E1[alpha,p] G[beta,p]
    return _split(_mirror_upper(M), b_eff)


def plain_tensor_block(n: int, b_eff: float, q: int) -> ParityBlockSet:
    """Reference path: tensor Gauss rule directly on [0,1]^2 (no transform)."""
    if n < 0:
        raise ValueError("degree must be >= 0")
    if b_eff <= 0:
        raise ValueError("b_eff must be > 0")
    if q < n + 1:
        raise ValueError(f"q={q} too small to resolve degree {n}")
    x, w = _unit_rule(q)
    W = np.outer(w, w) * np.exp(-b_eff * (x[:, None] - x[None, :]) ** 2)
    E = _unit_orthonormal_table(n, x)
    M = E @ W @ E.T
    return _split(_mirror_upper(M), b_eff)


def reference_block(n: int, b_eff: float) -> ParityBlockSet:
    """High-accuracy oracle: stretched assembly at a deliberately large q."""
    g = default_stretch(b_eff)
    return duffy_block(n, b_eff, DuffyConfig(g=g, q=4 * (n + 1) + 200))


class BlockCache:
    """Optional on-disk cache of assembled blocks, keyed by (n, b_eff, g, q)."""

    def __init__(self, directory):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)

    def _path(self, n: int, b_eff: float, g: int, q: int) -> str:
        key = f"{n}:{float(b_eff).hex()}:{g}:{q}".encode()
        return os.path.join(self.directory, hashlib.sha256(key).hexdigest()[:32] + ".npz")

    def get(self, n: int, b_eff: float, g: int, q: int) -> ParityBlockSet | None:
        path = self._path(n, b_eff, g, q)
        if not os.path.exists(path):
            return None
        with np.load(path) as data:
            return ParityBlockSet(even=data["even"], odd=data["odd"], b_eff=b_eff)

    def put(self, n: int, b_eff: float, g: int, q: int, blocks: ParityBlockSet) -> None:
        np.savez(self._path(n, b_eff, g, q), even=blocks.even, odd=blocks.odd)


def cached_duffy_block(
    n: int, b_eff: float, cfg: DuffyConfig | None = None, cache: BlockCache | None = None
) -> ParityBlockSet:
    """duffy_block with optional read-through disk cache."""
    if cfg is None:
        cfg = default_duffy_config(n, b_eff)
    if cache is not None:
        hit = cache.get(n, b_eff, cfg.g, cfg.q)
        if hit is not None:
            return hit
    blocks = duffy_block(n, b_eff, cfg)
    if cache is not None:
        cache.put(n, b_eff, cfg.g, cfg.q, blocks)
    return blocks
