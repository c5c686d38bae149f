import math

import numpy as np
import pytest

from otx.cross import CrossPlan, cross_brute_force, cross_compute
from otx.kernels import CostWeightedExponential, ExponentialKernel, PolynomialKernel


def random_blocks(rng, p, q, s, integer=False):
    if integer:
        return rng.integers(0, 6, (p, s)).astype(float), rng.integers(0, 6, (q, s)).astype(float)
    return rng.uniform(0, 4, (p, s)), rng.uniform(0, 4, (q, s))


def first_argmin(AD, BD):
    return np.argmin(AD[:, None, :] + BD[None, :, :], axis=2)


class TestExamples:
    def test_single_separator_vertex(self):
        L, R = cross_compute([[1.0], [2.0]], [[3.0]], [0.0, 0.0], [1.0], ExponentialKernel(1.0))
        np.testing.assert_allclose(L, [math.exp(-4), math.exp(-5)], rtol=1e-15)

    def test_dominant_column(self):
        L, _ = cross_compute([[0.0, 10.0]], [[0.0, 10.0]], [1.0], [1.0], ExponentialKernel(1.0))
        np.testing.assert_allclose(L, [1.0], rtol=1e-15)

    def test_column_mismatch(self):
        with pytest.raises(ValueError):
            cross_compute(np.zeros((2, 2)), np.zeros((2, 3)), np.ones(2), np.ones(2))

    def test_vector_mismatch(self):
        with pytest.raises(ValueError):
            cross_compute(np.zeros((2, 2)), np.zeros((3, 2)), np.ones(3), np.ones(3))

    def test_empty_side(self):
        L, R = cross_compute(np.zeros((0, 3)), np.ones((4, 3)), np.zeros(0), np.ones(4))
        assert L.shape == (0,) and np.array_equal(R, np.zeros(4))


class TestBruteForceEquivalence:
    @pytest.mark.parametrize("seed", range(8))
    def test_exponential_200x200(self, seed):
        rng = np.random.default_rng(seed)
        AD, BD = random_blocks(rng, 200, 200, 4)
        u, v = rng.uniform(size=200), rng.uniform(size=200)
        k = ExponentialKernel(rng.uniform(0.5, 2))
        L, R = cross_compute(AD, BD, u, v, k)
        Lb, Rb = cross_brute_force(AD, BD, u, v, k)
        np.testing.assert_allclose(L, Lb, rtol=1e-12)
        np.testing.assert_allclose(R, Rb, rtol=1e-12)

    @pytest.mark.parametrize("kernel", [CostWeightedExponential(1.3), PolynomialKernel([1.0, -0.5, 0.25], 2.0)])
    def test_other_kernels(self, kernel):
        rng = np.random.default_rng(5)
        AD, BD = random_blocks(rng, 150, 170, 5)
        u, v = rng.normal(size=150), rng.normal(size=170)
        L, R = cross_compute(AD, BD, u, v, kernel)
        Lb, Rb = cross_brute_force(AD, BD, u, v, kernel)
        np.testing.assert_allclose(L, Lb, rtol=1e-11, atol=1e-12 * abs(Lb).max())
        np.testing.assert_allclose(R, Rb, rtol=1e-11, atol=1e-12 * abs(Rb).max())

    @pytest.mark.parametrize("cutoff", [0, 1, 4, 32, 1000])
    @pytest.mark.parametrize("pivot", ["merged", "rows"])
    def test_cutoff_and_pivot_do_not_change_result(self, cutoff, pivot):
        rng = np.random.default_rng(cutoff)
        AD, BD = random_blocks(rng, 90, 70, 6)
        u, v = rng.uniform(size=90), rng.uniform(size=70)
        k = ExponentialKernel(1.0)
        L, R = cross_compute(AD, BD, u, v, k, cutoff=cutoff, pivot=pivot)
        Lb, Rb = cross_brute_force(AD, BD, u, v, k)
        np.testing.assert_allclose(L, Lb, rtol=1e-12)
        np.testing.assert_allclose(R, Rb, rtol=1e-12)

    def test_infinite_distances(self):
        rng = np.random.default_rng(2)
        AD, BD = random_blocks(rng, 40, 50, 3)
        AD[:5, 0] = np.inf
        BD[10:20, :] = np.inf
        u, v = rng.uniform(size=40), rng.uniform(size=50)
        k = ExponentialKernel(1.0)
        L, R = cross_compute(AD, BD, u, v, k, cutoff=2)
        Lb, Rb = cross_brute_force(AD, BD, u, v, k)
        np.testing.assert_allclose(L, Lb, rtol=1e-12)
        np.testing.assert_allclose(R, Rb, rtol=1e-12, atol=1e-300)


class TestCoverage:
    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("integer", [False, True])
    def test_each_pair_once_at_first_argmin(self, seed, integer):
        rng = np.random.default_rng(seed)
        p, q, s = rng.integers(1, 101), rng.integers(1, 101), rng.integers(1, 7)
        AD, BD = random_blocks(rng, p, q, s, integer)
        plan = CrossPlan(AD, BD, cutoff=3)
        assert np.all(plan.coverage() == 1)
        assert plan.pair_count() == p * q
        np.testing.assert_array_equal(plan.assignment(), first_argmin(AD, BD))

    def test_all_ties_go_to_column_zero(self):
        plan = CrossPlan(np.zeros((30, 4)), np.zeros((25, 4)), cutoff=1)
        assert np.all(plan.assignment() == 0) and np.all(plan.coverage() == 1)

    def test_close_sums_resolved_exactly(self):
        # 0.1 + 0.2 rounds above 0.3, so column 1 is the floating-point minimum
        a = np.array([[0.1, 0.3], [0.3, 0.1]])
        b = np.array([[0.2, 0.0], [0.0, 0.2]])
        plan = CrossPlan(a, b, cutoff=0)
        np.testing.assert_array_equal(plan.assignment(), first_argmin(a, b))

    def test_count_flag(self):
        rng = np.random.default_rng(0)
        AD, BD = random_blocks(rng, 17, 23, 3)
        *_, c = cross_compute(AD, BD, np.ones(17), np.ones(23), count=True)
        assert c == 17 * 23


@pytest.mark.parametrize("seed", range(12))
def test_compiled_plan_matches_reference_loop(seed):
    rng = np.random.default_rng(100 + seed)
    p, q, s = rng.integers(1, 300), rng.integers(1, 300), rng.integers(1, 8)
    AD, BD = random_blocks(rng, p, q, s, integer=bool(seed % 2))
    for pivot in ("merged", "rows"):
        a = CrossPlan(AD, BD, cutoff=8, pivot=pivot, engine="numba")
        b = CrossPlan(AD, BD, cutoff=8, pivot=pivot, engine="numpy")
        assert len(a.blocks) == len(b.blocks)
        for (ka, ra, ca), (kb, rb, cb) in zip(a.blocks, b.blocks):
            assert ka == kb and np.array_equal(ra, rb) and np.array_equal(ca, cb)
        for x, y in [(a.pair_rows, b.pair_rows), (a.pair_cols, b.pair_cols), (a.pair_k, b.pair_k)]:
            assert np.array_equal(x, y)


def test_plan_grows_subquadratically():
    # doubling |A| = |B| should grow the stored indices far less than fourfold
    sizes = []
    for n in (1000, 2000, 4000):
        rng = np.random.default_rng(0)
        AD, BD = random_blocks(rng, n, n, 3)
        sizes.append(CrossPlan(AD, BD).size())
    assert sizes[1] < 3 * sizes[0] and sizes[2] < 3 * sizes[1]


def test_bad_options():
    with pytest.raises(ValueError):
        CrossPlan(np.zeros((1, 1)), np.zeros((1, 1)), pivot="mean")
    with pytest.raises(ValueError):
        CrossPlan(np.zeros((1, 1)), np.zeros((1, 1)), engine="cuda")
    with pytest.raises(ValueError):
        CrossPlan(np.zeros(3), np.zeros((1, 1)))
