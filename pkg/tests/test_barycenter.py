import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gwpp.barycenter import (EmpiricalMeasure1D, barycenter_exact, barycenter_lp_discrete, barycenter_objective,
                             barycenter_quantile, combine_marginals, w2_empirical_1d)
from gwpp.draws import ChainDraws
from gwpp.errors import InvalidRequest, SchemaMismatch

atoms = arrays(np.float64, st.integers(1, 40), elements=st.floats(-100, 100))


def brute_w2(x, y):
    """W2 between uniform measures via an explicit transport LP-free enumeration."""
    # replicate atoms to a common count so the sorted coupling is optimal and exact
    n = np.lcm(len(x), len(y))
    a = np.repeat(np.sort(x), n // len(x))
    b = np.repeat(np.sort(y), n // len(y))
    return np.sqrt(np.mean((a - b) ** 2))


class TestW2:
    def test_identical(self):
        assert w2_empirical_1d([1, 2, 3], [3, 1, 2]) == 0.0

    def test_point_masses(self):
        assert w2_empirical_1d([0.0], [3.0]) == 3.0

    def test_gaussian_shift(self):
        rng = np.random.default_rng(41)
        assert w2_empirical_1d(rng.normal(0, 1, 50_000), rng.normal(2, 1, 50_000)) == pytest.approx(2.0, abs=0.05)

    @settings(max_examples=80, deadline=None)
    @given(x=atoms, y=atoms)
    def test_matches_replicated_coupling(self, x, y):
        assert w2_empirical_1d(x, y) == pytest.approx(brute_w2(x, y), rel=1e-9, abs=1e-9)

    @settings(max_examples=80, deadline=None)
    @given(x=atoms, y=atoms, z=atoms)
    def test_metric_axioms(self, x, y, z):
        dxy, dyz, dxz = w2_empirical_1d(x, y), w2_empirical_1d(y, z), w2_empirical_1d(x, z)
        assert dxy == pytest.approx(w2_empirical_1d(y, x), rel=1e-12, abs=1e-12)
        assert dxz <= dxy + dyz + 1e-9

    def test_weighted_against_scipy(self):
        from scipy.stats import wasserstein_distance

        rng = np.random.default_rng(42)
        x, y = rng.normal(size=7), rng.normal(size=5)
        wx, wy = rng.dirichlet(np.ones(7)), rng.dirichlet(np.ones(5))
        # for point masses against a shift, W1 == W2; use a pure translation to cross-check
        m = EmpiricalMeasure1D(x, wx)
        shifted = EmpiricalMeasure1D(x + 0.7, wx)
        assert w2_empirical_1d(m, shifted) == pytest.approx(0.7)
        assert wasserstein_distance(x, x + 0.7, wx, wx) == pytest.approx(0.7)
        assert w2_empirical_1d(EmpiricalMeasure1D(x, wx), EmpiricalMeasure1D(y, wy)) >= \
            wasserstein_distance(x, y, wx, wy) - 1e-12

    def test_bad_weights(self):
        with pytest.raises(InvalidRequest):
            EmpiricalMeasure1D([1, 2], [0.5, 0.6])


class TestQuantileBarycenter:
    def test_single_measure(self):
        np.testing.assert_array_equal(barycenter_quantile([[3.0, 1.0, 2.0]]).atoms, [1, 2, 3])

    def test_point_masses(self):
        np.testing.assert_array_equal(barycenter_quantile([[0.0], [2.0]]).atoms, [1.0])

    def test_gaussian_closed_form(self):
        rng = np.random.default_rng(43)
        b = barycenter_quantile([rng.normal(m, 1, 10_000) for m in (-1, 0, 1)]).atoms
        assert abs(b.mean()) < 0.05
        assert b.var() == pytest.approx(1.0, rel=0.05)

    @settings(max_examples=50, deadline=None)
    @given(x=atoms, c=st.floats(-50, 50), s=st.floats(0.1, 10))
    def test_affine_equivariance(self, x, c, s):
        y = x[::-1] + 1.0
        base = barycenter_quantile([x, y]).atoms
        moved = barycenter_quantile([s * x + c, s * y + c]).atoms
        np.testing.assert_allclose(moved, s * base + c, rtol=1e-9, atol=1e-7)

    def test_exact_beats_other_candidates(self):
        rng = np.random.default_rng(44)
        ms = [EmpiricalMeasure1D(rng.normal(k, 1 + k, 9), rng.dirichlet(np.ones(9))) for k in range(3)]
        best = barycenter_objective(barycenter_exact(ms), ms)
        for _ in range(30):
            assert barycenter_objective(rng.normal(1, 2, 20), ms) >= best


class TestLinearProgram:
    def test_single_measure(self):
        w = np.array([0.1, 0.0, 0.6, 0.3])
        b, obj = barycenter_lp_discrete(np.arange(4.0), w[None])
        np.testing.assert_allclose(b, w, atol=1e-9)
        assert obj == pytest.approx(0.0, abs=1e-12)

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(45)
        w = rng.dirichlet(np.ones(21))
        # on the half-step grid the optimum is the unique exact barycenter
        b, _ = barycenter_lp_discrete(np.linspace(-1, 1, 21), np.stack([w, w[::-1]]),
                                      bary_support=np.linspace(-1, 1, 41))
        np.testing.assert_allclose(b, b[::-1], atol=1e-8)

    def test_snapped_equal_size_samples(self):
        rng = np.random.default_rng(46)
        grid = np.linspace(-4, 4, 100)
        W = np.zeros((3, 100))
        ms = []
        for k in range(3):
            idx = np.abs(grid[None, :] - rng.normal(k - 1, 1, 40)[:, None]).argmin(1)
            W[k] = np.bincount(idx, minlength=100) / 40
            ms.append(grid[idx])
        _, lp = barycenter_lp_discrete(grid, W)
        exact = barycenter_objective(barycenter_exact(ms), ms)
        assert lp == pytest.approx(exact, rel=0.01)
        assert lp >= exact - 1e-12

    def test_refined_support_is_exact(self):
        rng = np.random.default_rng(47)
        grid = np.linspace(0, 1, 30)
        W = np.zeros((3, 30))
        ms = []
        for k in range(3):
            idx = rng.choice(30, 8, replace=False)
            W[k, idx] = rng.dirichlet(np.ones(8))
            ms.append(EmpiricalMeasure1D(grid[idx], W[k, idx] / W[k, idx].sum()))
        _, lp = barycenter_lp_discrete(grid, W, bary_support=np.linspace(0, 1, 3 * 29 + 1))
        assert lp == pytest.approx(barycenter_objective(barycenter_exact(ms), ms), rel=1e-8)

    def test_misaligned(self):
        with pytest.raises(InvalidRequest):
            barycenter_lp_discrete(np.arange(3.0), np.ones((2, 4)) / 4)


class TestCombine:
    def chains(self, rng, K=3, S=200):
        names = ["theta[1][1]", "tau[1]"]
        return [ChainDraws(names, rng.normal(size=(S, 2)) + k) for k in range(K)]

    def test_identical_inputs(self, rng):
        c = self.chains(rng, K=1)[0]
        out = combine_marginals([c, c, c])
        np.testing.assert_allclose(out.draws, np.sort(c.draws, axis=0))

    def test_translation(self, rng):
        cs = self.chains(rng)
        base = combine_marginals(cs)
        moved = combine_marginals([ChainDraws(c.names, c.draws + 2.5) for c in cs])
        np.testing.assert_allclose(moved.draws, base.draws + 2.5)
        assert moved.meta["K"] == 3

    def test_mismatched_names(self, rng):
        cs = self.chains(rng)
        cs[1] = ChainDraws(["theta[9][9]", "tau[1]"], cs[1].draws)
        with pytest.raises(SchemaMismatch):
            combine_marginals(cs)
