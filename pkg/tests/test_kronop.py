"""Kronecker operators: matvec, trace, materialization, build bookkeeping."""

import numpy as np
import pytest

from klexpand.assembly import duffy_block
from klexpand.kernels import KernelSpec
from klexpand.kronop import Domain, KronOperator, build_operators
from klexpand.sefit import SqExpMixture


def random_operator(rng, D=None, k=None, dmax=5):
    D = D or int(rng.integers(1, 4))
    k = k or int(rng.integers(1, 4))
    dims = rng.integers(2, dmax, D)
    factors = tuple(
        tuple((lambda m: 0.5 * (m + m.T))(rng.standard_normal((d, d))) for d in dims)
        for _ in range(k)
    )
    return KronOperator(parity=(0,) * D, weights=rng.uniform(0.5, 2.0, k), factors=factors)


def moderate_mixture():
    return SqExpMixture(
        a=np.array([0.7, 0.3]),
        b=np.array([1.5, 6.0]),
        kernel=KernelSpec("squared_exponential"),
        fit_domain_L=2.0,
    )


class TestDomain:
    def test_properties(self):
        dom = Domain(((0.0, 1.0), (-1.0, 3.0)))
        assert dom.D == 2
        np.testing.assert_array_equal(dom.lengths, [1.0, 4.0])
        assert dom.volume == 4.0
        assert dom.diameter == pytest.approx(np.sqrt(17.0))

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Domain(((1.0, 1.0),))
        with pytest.raises(ValueError):
            Domain(())


class TestMatvec:
    def test_identity_factors(self):
        op = KronOperator(parity=(0, 0), weights=np.array([1.0]),
                          factors=((np.eye(3), np.eye(2)),))
        x = np.arange(6.0)
        np.testing.assert_array_equal(op.matvec(x), x)

    def test_against_dense(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            op = random_operator(rng)
            A = op.materialize()
            x = rng.standard_normal(op.dim)
            np.testing.assert_allclose(op.matvec(x), A @ x, atol=1e-13 * max(1.0, np.abs(A).sum()))

    def test_first_column_identity(self):
        rng = np.random.default_rng(3)
        B1 = 0.5 * (lambda m: m + m.T)(rng.standard_normal((3, 3)))
        B2 = 0.5 * (lambda m: m + m.T)(rng.standard_normal((2, 2)))
        op = KronOperator(parity=(0, 0), weights=np.array([2.0]), factors=((B1, B2),))
        e1 = np.zeros(6)
        e1[0] = 1.0
        np.testing.assert_allclose(op.matvec(e1), 2.0 * np.kron(B1[:, 0], B2[:, 0]), atol=1e-14)

    def test_length_mismatch(self):
        op = KronOperator(parity=(0,), weights=np.array([1.0]), factors=((np.eye(3),),))
        with pytest.raises(ValueError):
            op.matvec(np.zeros(4))

    def test_symmetry_random_vectors(self):
        rng = np.random.default_rng(7)
        op = random_operator(rng, D=3)
        for _ in range(5):
            x = rng.standard_normal(op.dim)
            y = rng.standard_normal(op.dim)
            lhs = y @ op.matvec(x)
            rhs = x @ op.matvec(y)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


class TestTraceMaterialize:
    def test_identity_trace(self):
        op = KronOperator(parity=(0, 0), weights=np.array([2.0]),
                          factors=((np.eye(3), np.eye(2)),))
        assert op.trace() == pytest.approx(12.0)

    def test_trace_vs_dense(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            op = random_operator(rng)
            assert op.trace() == pytest.approx(np.trace(op.materialize()), rel=1e-13, abs=1e-13)

    def test_materialize_guard(self):
        op = KronOperator(
            parity=(0, 0),
            weights=np.array([1.0]),
            factors=((np.eye(80), np.eye(80)),),
        )
        with pytest.raises(ValueError, match="refusing"):
            op.materialize()

    def test_materialize_symmetric(self):
        rng = np.random.default_rng(11)
        op = random_operator(rng, D=2)
        A = op.materialize()
        np.testing.assert_array_equal(A, A.T)


class TestBuildOperators:
    def test_dims_1d(self):
        ops = build_operators(moderate_mixture(), Domain(((0.0, 1.0),)), 4)
        assert ops[(0,)].dim == 3
        assert ops[(1,)].dim == 2

    def test_dims_2d(self):
        ops = build_operators(moderate_mixture(), Domain(((0.0, 1.0), (0.0, 1.0))), 4)
        dims = {eps: op.dim for eps, op in ops.items()}
        assert dims == {(0, 0): 9, (0, 1): 6, (1, 0): 6, (1, 1): 4}
        assert sum(dims.values()) == 25

    @pytest.mark.parametrize("n,D", [(7, 1), (6, 2), (4, 3)])
    def test_total_dimension(self, n, D):
        ops = build_operators(moderate_mixture(), Domain(((0.0, 1.0),) * D), n)
        assert sum(op.dim for op in ops.values()) == (n + 1) ** D

    def test_constant_kernel_rank_one(self):
        mix = SqExpMixture(
            a=np.array([1.0]), b=np.array([1e-10]),
            kernel=KernelSpec("squared_exponential"), fit_domain_L=2.0,
        )
        ops = build_operators(mix, Domain(((0.0, 1.0), (0.0, 1.0))), 6)
        w00 = np.linalg.eigvalsh(ops[(0, 0)].materialize())
        assert w00[-1] == pytest.approx(1.0, abs=1e-6)
        assert abs(w00[:-1]).max() < 1e-6
        for eps in ((0, 1), (1, 0), (1, 1)):
            w = np.linalg.eigvalsh(ops[eps].materialize())
            assert np.abs(w).max() < 1e-6

    def test_mercer_trace_convergence(self):
        mix = moderate_mixture()
        dom = Domain(((0.0, 1.0), (0.0, 2.0)))
        target = mix.a.sum() * dom.volume
        deficits = []
        for n in (10, 20, 30):
            ops = build_operators(mix, dom, n)
            total = sum(op.trace() for op in ops.values())
            deficits.append(abs(total - target) / target)
        assert deficits == sorted(deficits, reverse=True) or deficits[-1] < 1e-12
        assert deficits[-1] < 1e-8

    def test_trace_split_invariance(self):
        # sum of parity-block traces equals the trace of the unsplit matrix
        mix = moderate_mixture()
        n = 9
        ops = build_operators(mix, Domain(((0.0, 1.0), (0.0, 1.0))), n)
        split_total = sum(op.trace() for op in ops.values())
        A = sum(
            a_i * np.kron(duffy_block(n, b_i).full(), duffy_block(n, b_i).full())
            for a_i, b_i in zip(mix.a, mix.b)
        )
        assert split_total == pytest.approx(np.trace(A), rel=1e-12)

    def test_threads_equivalent(self):
        mix = moderate_mixture()
        dom = Domain(((0.0, 1.0), (0.0, 1.0)))
        ops1 = build_operators(mix, dom, 12, threads=1)
        ops2 = build_operators(mix, dom, 12, threads=4)
        for eps in ops1:
            np.testing.assert_array_equal(ops1[eps].materialize(), ops2[eps].materialize())

    def test_psd_blocks(self):
        ops = build_operators(moderate_mixture(), Domain(((0.0, 1.0), (0.0, 1.0))), 10)
        for op in ops.values():
            w = np.linalg.eigvalsh(op.materialize())
            assert w.min() >= -1e-8 * max(w.max(), 1e-300)

    def test_matvec_cost_scaling(self):
        # operation count grows linearly in the separation rank k
        import time

        rng = np.random.default_rng(1)
        dom = Domain(((0.0, 1.0), (0.0, 1.0)))
        mix1 = SqExpMixture(a=np.array([1.0]), b=np.array([2.0]),
                            kernel=KernelSpec("squared_exponential"), fit_domain_L=2.0)
        mix4 = SqExpMixture(a=np.ones(4) / 4, b=np.array([1.0, 2.0, 3.0, 4.0]),
                            kernel=KernelSpec("squared_exponential"), fit_domain_L=2.0)
        op1 = build_operators(mix1, dom, 40)[(0, 0)]
        op4 = build_operators(mix4, dom, 40)[(0, 0)]
        x = rng.standard_normal(op1.dim)

        def best(op):
            t = []
            for _ in range(7):
                t0 = time.perf_counter()
                for _ in range(10):
                    op.matvec(x)
                t.append(time.perf_counter() - t0)
            return min(t)

        t1, t4 = best(op1), best(op4)
        assert t4 < 12.0 * t1  # 4 terms cost ~4x one term, generous slack
