"""Kernel registry and closed-form evaluations."""

import math

import numpy as np
import pytest

from klexpand.kernels import KernelSpec, kernel_eval, kernel_eval_batch, kernel_ids, register_kernel
from klexpand.orthopoly import composite_rule

ALL_IDS = (
    "exponential",
    "matern52",
    "stretched_exponential",
    "rational_quadratic",
    "cauchy",
    "squared_exponential",
)


def test_registry_contains_benchmarks():
    assert set(ALL_IDS) <= set(kernel_ids())


def test_exponential_at_zero():
    assert kernel_eval(KernelSpec("exponential"), 0.0) == 1.0


def test_cauchy_at_one():
    assert kernel_eval(KernelSpec("cauchy"), 1.0) == pytest.approx(0.5, rel=1e-15)


def test_matern52_at_one():
    expected = (1 + math.sqrt(5) + 5 / 3) * math.exp(-math.sqrt(5))
    assert kernel_eval(KernelSpec("matern52"), 1.0) == pytest.approx(expected, rel=1e-12)
    # frozen from 30-digit evaluation of the closed form
    assert expected == pytest.approx(0.52399410883182031, rel=1e-14)


def test_batch_exponential():
    vals = kernel_eval_batch(KernelSpec("exponential"), [0.0, 1.0, 2.0])
    np.testing.assert_allclose(vals, [1.0, math.exp(-1), math.exp(-2)], rtol=1e-15)


def test_batch_rational_quadratic_zero():
    np.testing.assert_allclose(kernel_eval_batch(KernelSpec("rational_quadratic"), [0.0]), [1.0])


def test_stretched_exponential_at_one():
    assert kernel_eval(KernelSpec("stretched_exponential"), 1.0) == pytest.approx(
        math.exp(-1.0), rel=1e-15
    )


def test_negative_distance_rejected():
    with pytest.raises(ValueError, match="non-negative"):
        kernel_eval(KernelSpec("exponential"), -0.1)
    with pytest.raises(ValueError):
        kernel_eval_batch(KernelSpec("cauchy"), [0.5, -1.0])


def test_unknown_id_rejected():
    with pytest.raises(ValueError, match="unknown kernel"):
        KernelSpec("gaussian_process_deluxe")


def test_invalid_scales_rejected():
    with pytest.raises(ValueError):
        KernelSpec("exponential", length_scale=0.0)
    with pytest.raises(ValueError):
        KernelSpec("exponential", variance=-1.0)


def test_length_scale_and_variance():
    spec = KernelSpec("exponential", length_scale=2.0, variance=3.0)
    assert kernel_eval(spec, 0.0) == pytest.approx(3.0)
    assert kernel_eval(spec, 2.0) == pytest.approx(3.0 * math.exp(-1.0), rel=1e-14)


@pytest.mark.parametrize("kid", ALL_IDS)
def test_monotone_nonincreasing_on_grid(kid):
    d = np.linspace(0.0, 2.0, 1000)
    vals = kernel_eval_batch(KernelSpec(kid), d)
    assert np.all(np.diff(vals) <= 0)
    assert np.all(vals > 0)
    assert np.all(vals <= vals[0])


def test_rational_quadratic_bernstein_identity():
    # int_0^inf e^{-d^2 t} 2 e^{-2t} dt = (1 + d^2/2)^{-1}
    rule = composite_rule(60.0, 12, 0.3, 40)
    spec = KernelSpec("rational_quadratic")
    for d in (0.0, 0.5, 1.0, 2.0):
        val = rule.integrate(np.exp(-d * d * rule.nodes) * 2.0 * np.exp(-2.0 * rule.nodes))
        assert val == pytest.approx(kernel_eval(spec, d), abs=1e-8)


def test_register_kernel_roundtrip():
    register_kernel("test_gaussian_squared", lambda d: np.exp(-2.0 * d * d))
    spec = KernelSpec("test_gaussian_squared")
    assert kernel_eval(spec, 1.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
    with pytest.raises(ValueError, match="already registered"):
        register_kernel("test_gaussian_squared", lambda d: d)
