"""Shared fixtures and independent oracles for the test suite."""

import math

import numpy as np
import pytest

from klexpand.kernels import KernelSpec
from klexpand.kronop import Domain
from klexpand.sefit import FitConfig, fit_mixture
from klexpand.klfield import build_expansion


@pytest.fixture(scope="session")
def fits():
    """Session-cached continuation fits keyed by (kernel_id, tol)."""
    cache = {}

    def get(kernel_id, tol, k_max=20):
        key = (kernel_id, tol, k_max)
        if key not in cache:
            cache[key] = fit_mixture(KernelSpec(kernel_id), FitConfig(tol=tol, k_max=k_max))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def exp_expansion_1d(fits):
    """1-D exponential-kernel expansion, tol 1e-6 fit, n=59, full spectrum."""
    mixture, _ = fits("exponential", 1e-6)
    return build_expansion(
        mixture, Domain(((0.0, 1.0),)), 59, 60, pairs_per_block=30, seed=0
    )


def exp_kernel_eigenvalues(n_pairs):
    """Analytic eigenvalues of C(x,y) = e^{-|x-y|} on [0,1].

    With the interval centered (half-width 1/2) the eigenvalues are
    2/(1+w^2) where w solves tan(w/2) = 1/w on even branches and
    tan(w/2) = -w on odd branches; the m-th root lives in
    (m pi, (m+1) pi).  Solved by bisection, independent of any quadrature
    or linear algebra in the package.
    """
    lams = []
    for m in range(n_pairs):
        if m % 2 == 0:
            f = lambda w: math.tan(w / 2.0) - 1.0 / w
        else:
            f = lambda w: math.tan(w / 2.0) + w
        a = m * math.pi + 1e-9
        b = (m + 1) * math.pi - 1e-9
        fa = f(a)
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = f(mid)
            if fa * fm <= 0:
                b = mid
            else:
                a, fa = mid, fm
        w = 0.5 * (a + b)
        lams.append(2.0 / (1.0 + w * w))
    return np.asarray(lams)


def se_block_entry_00(b):
    """Closed form of the (0,0) unit-interval entry for exponent b:
    integral over [0,1]^2 of e^{-b (x-y)^2}."""
    return math.sqrt(math.pi) * math.erf(math.sqrt(b)) / math.sqrt(b) + (math.exp(-b) - 1.0) / b


def dense_unsplit_matrix(mixture, n, block_fn):
    """Unsplit 1-D Galerkin matrix sum_i a_i M_i from per-term full blocks."""
    out = None
    for a_i, b_i in zip(mixture.a, mixture.b):
        M = block_fn(n, b_i).full()
        out = a_i * M if out is None else out + a_i * M
    return out
