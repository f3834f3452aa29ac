"""Galerkin block assembly: oracles, parity structure, quadrature paths."""

import math

import numpy as np
import pytest

from conftest import se_block_entry_00
from klexpand.assembly import (
    BlockCache,
    DuffyConfig,
    cached_duffy_block,
    default_duffy_config,
    default_stretch,
    duffy_block,
    plain_tensor_block,
    reference_block,
    rescale_to_unit,
)


class TestRescale:
    def test_identity(self):
        assert rescale_to_unit(1.0, (0.0, 1.0)) == (1.0, 1.0)

    def test_length_two(self):
        assert rescale_to_unit(1.0, (0.0, 2.0)) == (4.0, 2.0)

    def test_symmetric(self):
        assert rescale_to_unit(10.0, (-1.0, 1.0)) == (40.0, 2.0)

    def test_matrix_equivalence(self):
        # the [lo,hi] matrix for exponent b equals scale * unit matrix for b_eff
        from klexpand.orthopoly import BasisSpec, eval_basis, gauss_rule

        b, interval = 3.0, (0.5, 2.5)
        b_eff, scale = rescale_to_unit(b, interval)
        unit = duffy_block(4, b_eff).full()
        rule = gauss_rule(40, interval)
        tab = eval_basis(BasisSpec(4, interval, "orthonormal"), rule.nodes)
        K = np.exp(-b * (rule.nodes[:, None] - rule.nodes[None, :]) ** 2)
        direct = (tab * rule.weights) @ K @ (tab * rule.weights).T
        np.testing.assert_allclose(scale * unit, direct, atol=1e-12)


class TestDuffyBlock:
    def test_constant_limit(self):
        blk = duffy_block(0, 1e-12)
        assert blk.even[0, 0] == pytest.approx(1.0, abs=1e-9)

    def test_erf_oracle(self):
        blk = duffy_block(1, 1.0)
        assert blk.even[0, 0] == pytest.approx(
            math.sqrt(math.pi) * math.erf(1.0) + math.exp(-1.0) - 1.0, rel=1e-13
        )

    def test_cross_parity_zero(self):
        for b in (0.3, 7.0, 1e5):
            F = duffy_block(5, b).full()
            odd_mask = (np.arange(6)[:, None] + np.arange(6)[None, :]) % 2 == 1
            assert np.all(F[odd_mask] == 0.0)

    def test_q_too_small(self):
        with pytest.raises(ValueError, match="too small"):
            duffy_block(10, 1.0, DuffyConfig(g=1, q=5))

    def test_block_sizes(self):
        blk = duffy_block(6, 1.0)
        assert blk.even.shape == (4, 4)
        assert blk.odd.shape == (3, 3)

    def test_symmetry_exact(self):
        blk = duffy_block(12, 3e3)
        np.testing.assert_array_equal(blk.even, blk.even.T)
        np.testing.assert_array_equal(blk.odd, blk.odd.T)

    def test_g_independence(self):
        # the transform is exact; changing g only changes quadrature error
        base = duffy_block(5, 40.0, DuffyConfig(1, 80)).full()
        for g in (2, 3):
            alt = duffy_block(5, 40.0, DuffyConfig(g, 120)).full()
            np.testing.assert_allclose(alt, base, atol=1e-11)


class TestPlainBlock:
    def test_erf_oracle(self):
        blk = plain_tensor_block(1, 1.0, 60)
        assert blk.even[0, 0] == pytest.approx(se_block_entry_00(1.0), rel=1e-12)

    def test_failure_mode_large_b(self):
        blk = plain_tensor_block(0, 1e10, 200)
        rel = abs(blk.even[0, 0] - se_block_entry_00(1e10)) / se_block_entry_00(1e10)
        assert rel > 1e-3  # the thin diagonal strip is invisible to the rule

    def test_symmetry_exact(self):
        blk = plain_tensor_block(9, 17.0, 40)
        np.testing.assert_array_equal(blk.even, blk.even.T)
        np.testing.assert_array_equal(blk.odd, blk.odd.T)

    def test_agreement_with_duffy_moderate_b(self):
        for n, b in ((5, 1.0), (11, 50.0), (20, 100.0)):
            q = 2 * (n + 1) + 20
            d = duffy_block(n, b, DuffyConfig(default_stretch(b), q)).full()
            p = plain_tensor_block(n, b, q).full()
            err = np.linalg.norm(d - p) / np.linalg.norm(p)
            assert err < 1e-10, (n, b, err)


class TestReferenceBlock:
    def test_erf_oracle(self):
        blk = reference_block(1, 1.0)
        assert blk.even[0, 0] == pytest.approx(se_block_entry_00(1.0), rel=1e-12)

    def test_parity_zeros(self):
        F = reference_block(7, 1e7).full()
        odd_mask = (np.arange(8)[:, None] + np.arange(8)[None, :]) % 2 == 1
        assert np.all(F[odd_mask] == 0.0)

    def test_internal_consistency(self):
        n, b = 9, 1e6
        g = default_stretch(b)
        q = 4 * (n + 1) + 200
        a = duffy_block(n, b, DuffyConfig(g, q)).full()
        c = duffy_block(n, b, DuffyConfig(g, q + 37)).full()
        assert np.linalg.norm(a - c) / np.linalg.norm(a) < 1e-12


class TestConvergenceAndPSD:
    @pytest.mark.parametrize("b_eff", [1.0, 1e4, 1e7, 1e10])
    def test_parity_zero_structure_n60(self, b_eff):
        F = duffy_block(60, b_eff).full()
        mask = (np.arange(61)[:, None] + np.arange(61)[None, :]) % 2 == 1
        assert np.all(F[mask] == 0.0)

    @pytest.mark.parametrize("b_eff,g", [(1e3, 2), (1e7, 3)])
    def test_q_doubling_monotone(self, b_eff, g):
        n = 19
        ref = reference_block(n, b_eff).full()
        scale = np.linalg.norm(ref)
        qs = [2 * (n + 1), 4 * (n + 1), 8 * (n + 1)]
        errs = [
            np.linalg.norm(duffy_block(n, b_eff, DuffyConfig(g, q)).full() - ref) / scale
            for q in qs
        ]
        floor = 1e-14
        for lo, hi in zip(errs[1:], errs[:-1]):
            assert lo <= 1.1 * hi + floor, errs

    def test_b_to_zero_rank_one(self):
        F = duffy_block(6, 1e-10).full()
        target = np.zeros_like(F)
        target[0, 0] = 1.0
        assert np.abs(F - target).max() < 1e-6

    @pytest.mark.parametrize("b_eff", [1.0, 1e4, 1e7, 1e10])
    @pytest.mark.parametrize("n", [8, 31])
    def test_positive_semidefinite(self, n, b_eff):
        blk = duffy_block(n, b_eff)
        assert np.linalg.eigvalsh(blk.even).min() >= -1e-10
        assert np.linalg.eigvalsh(blk.odd).min() >= -1e-10


class TestHeuristics:
    def test_default_stretch_table(self):
        assert default_stretch(1.0) == 1
        assert default_stretch(1e3) == 2
        assert default_stretch(1e6) == 3
        assert default_stretch(1e9) == 4
        assert default_stretch(1e12) == 5

    def test_default_q_grows_with_g(self):
        assert default_duffy_config(10, 1e9).q > default_duffy_config(10, 1.0).q


class TestBlockCache:
    def test_roundtrip_and_hit(self, tmp_path):
        cache = BlockCache(tmp_path)
        blk = cached_duffy_block(5, 123.0, DuffyConfig(2, 40), cache)
        hit = cache.get(5, 123.0, 2, 40)
        assert hit is not None
        np.testing.assert_array_equal(hit.even, blk.even)
        np.testing.assert_array_equal(hit.odd, blk.odd)
        assert cache.get(5, 124.0, 2, 40) is None
        again = cached_duffy_block(5, 123.0, DuffyConfig(2, 40), cache)
        np.testing.assert_array_equal(again.full(), blk.full())
