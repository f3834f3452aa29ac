"""Parity-split Kronecker-sum operators over hyper-rectangles.

For a mixture sum_i a_i e^{-b_i d^2} on a D-dimensional box, the Galerkin
matrix over the tensor Legendre basis factorizes into per-direction blocks
(:mod:`klexpand.assembly`) and splits across parity vectors
eps in {0,1}^D.  Each :class:`KronOperator` is one such block,

    A^eps = sum_i a_i  B_{i,1}^{eps_1} (x) ... (x) B_{i,D}^{eps_D},

stored by its factors only; ``matvec`` applies factors mode by mode
(cost O(k D dim max_l size_l)) without forming any Kronecker product.

Index convention: a multi-index (alpha_1, ..., alpha_D) flattens in C
order, first direction slowest; within a parity block, per-direction
indices run over the ascending degrees of that parity (0,2,4,... or
1,3,5,...).
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .assembly import BlockCache, DuffyConfig, cached_duffy_block, default_duffy_config, rescale_to_unit
from .sefit import SqExpMixture

__all__ = ["Domain", "KronOperator", "build_operators"]

_MATERIALIZE_GUARD = 4096


@dataclass(frozen=True)
class Domain:
    """A D-dimensional closed box, one (lo, hi) pair per direction."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "intervals", tuple((float(a), float(b)) for a, b in self.intervals)
        )
        if len(self.intervals) < 1:
            raise ValueError("domain needs at least one direction")
        for a, b in self.intervals:
            if not a < b:
                raise ValueError(f"degenerate interval ({a}, {b})")

    @property
    def D(self) -> int:
        return len(self.intervals)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([b - a for a, b in self.intervals])

    @property
    def volume(self) -> float:
        return float(np.prod(self.lengths))

    @property
    def diameter(self) -> float:
        return float(np.sqrt((self.lengths**2).sum()))


@dataclass(frozen=True)
class KronOperator:
    """One parity block of the Galerkin matrix, as a Kronecker sum."""

    parity: tuple[int, ...]
    weights: np.ndarray
    factors: tuple[tuple[np.ndarray, ...], ...]  # [term][direction]

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.shape[0] for f in self.factors[0])

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def matvec(self, x: np.ndarray) -> np.ndarray:
        """y = sum_i a_i (B_{i,1} (x) ... (x) B_{i,D}) x, mode by mode."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got {x.shape}")
        dims = self.dims
        X = x.reshape(dims)
        y = np.zeros(dims)
        for a_i, mats in zip(self.weights, self.factors):
            T = X
            for axis in range(len(dims) - 1, -1, -1):
                T = np.moveaxis(
                    np.tensordot(mats[axis], T, axes=(1, axis)), 0, axis
                )
            y += a_i * T
        return y.ravel()

    def trace(self) -> float:
        """sum_i a_i prod_l trace(B_{i,l})."""
        total = 0.0
        for a_i, mats in zip(self.weights, self.factors):
            total += a_i * float(np.prod([np.trace(m) for m in mats]))
        return total

    def materialize(self) -> np.ndarray:
        """Dense matrix; refuses above dim 4096 (testing / small problems)."""
        if self.dim > _MATERIALIZE_GUARD:
            raise ValueError(f"refusing to materialize dim {self.dim} > {_MATERIALIZE_GUARD}")
        out = np.zeros((self.dim, self.dim))
        for a_i, mats in zip(self.weights, self.factors):
            out += a_i * reduce(np.kron, mats)
        return out


def build_operators(
    mixture: SqExpMixture,
    domain: Domain,
    n: int,
    duffy: DuffyConfig | None = None,
    cache: BlockCache | None = None,
    threads: int = 1,
) -> dict[tuple[int, ...], KronOperator]:
    """Assemble the 2^D parity operators of degree n for a mixture on a box.

    Per-direction blocks are assembled once per distinct (exponent,
    interval length) pair on the unit interval and rescaled; ``duffy``
    overrides the per-exponent heuristic configuration.  With threads > 1
    the independent block assemblies run on a worker pool (each block is
    itself deterministic, so results do not depend on the thread count).
    """
    if mixture.rank == 0:
        raise ValueError("mixture must have at least one term")
    if n < 0:
        raise ValueError("degree must be >= 0")
    jobs: dict[tuple[float, int], tuple[float, DuffyConfig]] = {}
    for i, b in enumerate(mixture.b):
        for l, interval in enumerate(domain.intervals):
            b_eff, _ = rescale_to_unit(b, interval)
            cfg = duffy if duffy is not None else default_duffy_config(n, b_eff)
            jobs.setdefault((i, l), (b_eff, cfg))
    # deduplicate identical (b_eff, cfg) assemblies across terms/directions
    unique: dict[tuple[float, int, int], tuple[float, DuffyConfig]] = {}
    for b_eff, cfg in jobs.values():
        unique.setdefault((b_eff, cfg.g, cfg.q), (b_eff, cfg))

    def _assemble(item):
        key, (b_eff, cfg) = item
        return key, cached_duffy_block(n, b_eff, cfg, cache)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            assembled = dict(pool.map(_assemble, unique.items()))
    else:
        assembled = dict(map(_assemble, unique.items()))

    ops: dict[tuple[int, ...], KronOperator] = {}
    for eps in itertools.product((0, 1), repeat=domain.D):
        factors = []
        for i in range(mixture.rank):
            mats = []
            for l, interval in enumerate(domain.intervals):
                b_eff, scale = rescale_to_unit(mixture.b[i], interval)
                cfg = jobs[(i, l)][1]
                blocks = assembled[(b_eff, cfg.g, cfg.q)].scaled(scale)
                mats.append(blocks.even if eps[l] == 0 else blocks.odd)
            factors.append(tuple(mats))
        ops[eps] = KronOperator(
            parity=eps, weights=mixture.a.copy(), factors=tuple(factors)
        )
    return ops
