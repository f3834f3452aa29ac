"""Truncated Karhunen-Loeve expansions of stationary isotropic Gaussian
random fields on hyper-rectangles.

Pipeline: fit the covariance kernel with a non-negative squared-exponential
mixture (:mod:`klexpand.sefit`), assemble parity-split Legendre-Galerkin
blocks with a stretched diagonal-split quadrature (:mod:`klexpand.assembly`),
compose them into matrix-free Kronecker operators (:mod:`klexpand.kronop`),
solve each parity block for its leading eigenpairs
(:mod:`klexpand.eigsolve`), then evaluate, sample and diagnose the resulting
expansion (:mod:`klexpand.klfield`).
"""

from ._core import BACKEND
from .kernels import KernelSpec, kernel_eval, kernel_eval_batch, register_kernel
from .kronop import Domain, KronOperator, build_operators
from .orthopoly import BasisSpec, GaussRule, composite_rule, eval_basis, gauss_rule
from .sefit import FitConfig, SqExpMixture, fit_mixture, load_mixture, save_mixture
from .eigsolve import EigRequest, Spectrum, lanczos_topk, solve_blocks
from .klfield import (
    KLExpansion,
    build_expansion,
    covariance_N,
    cov_l2_error,
    eigenfunction_eval,
    load_expansion,
    residual,
    sample,
    sample_batch,
    save_expansion,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "__version__",
    "KernelSpec",
    "kernel_eval",
    "kernel_eval_batch",
    "register_kernel",
    "Domain",
    "KronOperator",
    "build_operators",
    "BasisSpec",
    "GaussRule",
    "composite_rule",
    "eval_basis",
    "gauss_rule",
    "FitConfig",
    "SqExpMixture",
    "fit_mixture",
    "load_mixture",
    "save_mixture",
    "EigRequest",
    "Spectrum",
    "lanczos_topk",
    "solve_blocks",
    "KLExpansion",
    "build_expansion",
    "covariance_N",
    "cov_l2_error",
    "eigenfunction_eval",
    "load_expansion",
    "residual",
    "sample",
    "sample_batch",
    "save_expansion",
]
