"""Isotropic covariance kernels C(d), d = Euclidean distance.

A kernel is registered as a closed-form evaluator of its unit-scale profile
C_unit on d >= 0; ``KernelSpec`` adds a length scale and a variance, so
C(d) = variance * C_unit(d / length_scale) and C(0) = variance.  User
kernels may be registered with :func:`register_kernel`; the mixture fitter
only ever calls C(d) on a bounded interval, derivatives are never needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["KernelSpec", "kernel_eval", "kernel_eval_batch", "register_kernel", "kernel_ids"]

_SQRT5 = math.sqrt(5.0)

_REGISTRY: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exponential": lambda d: np.exp(-d),
    "matern52": lambda d: (1.0 + _SQRT5 * d + (5.0 / 3.0) * d * d) * np.exp(-_SQRT5 * d),
    "stretched_exponential": lambda d: np.exp(-(d**0.6)),
    "rational_quadratic": lambda d: 1.0 / (1.0 + 0.5 * d * d),
    "cauchy": lambda d: 1.0 / (1.0 + d),
    "squared_exponential": lambda d: np.exp(-d * d),
}


def register_kernel(kernel_id: str, unit_eval: Callable[[np.ndarray], np.ndarray]) -> None:
    """Register a unit-scale profile under ``kernel_id``.

    ``unit_eval`` must accept a non-negative ndarray of distances and return
    values with C_unit(0) = 1 (the variance factor is applied separately).
    """
    if kernel_id in _REGISTRY:
        raise ValueError(f"kernel id {kernel_id!r} already registered")
    _REGISTRY[kernel_id] = unit_eval


def kernel_ids() -> tuple[str, ...]:
    return tuple(_REGISTRY)


@dataclass(frozen=True)
class KernelSpec:
    """A registered kernel with its length scale and variance."""

    id: str
    length_scale: float = 1.0
    variance: float = 1.0

    def __post_init__(self):
        if self.id not in _REGISTRY:
            raise ValueError(f"unknown kernel id {self.id!r}; known: {sorted(_REGISTRY)}")
        if self.length_scale <= 0:
            raise ValueError("length_scale must be > 0")
        if self.variance <= 0:
            raise ValueError("variance must be > 0")


def kernel_eval_batch(spec: KernelSpec, ds) -> np.ndarray:
    """Evaluate C at each distance in ``ds``; distances must be >= 0."""
    d = np.asarray(ds, dtype=float)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    return spec.variance * _REGISTRY[spec.id](d / spec.length_scale)


def kernel_eval(spec: KernelSpec, d: float) -> float:
    """Evaluate C at a single distance d >= 0."""
    return float(kernel_eval_batch(spec, np.asarray([d], dtype=float))[0])
