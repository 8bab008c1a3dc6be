import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from gwpp.draws import ChainDraws
from gwpp.errors import DegenerateInput, SchemaMismatch
from gwpp.metrics import (accuracy_report, ess_fixed_width, kde_gaussian, silverman_bandwidth, summarize,
                          tv_accuracy)


class TestKde:
    def test_standard_normal_peak(self):
        x = np.random.default_rng(51).standard_normal(100_000)
        est = kde_gaussian(x, grid=np.array([0.0]))
        assert est.density[0] == pytest.approx(stats.norm.pdf(0), rel=0.05)

    def test_matches_scipy(self):
        x = np.random.default_rng(52).gamma(2.0, size=3000)
        grid = np.linspace(-1, 12, 300)
        est = kde_gaussian(x, grid=grid)
        ref = stats.gaussian_kde(x, bw_method=est.bandwidth / x.std(ddof=1))
        np.testing.assert_allclose(est.density, ref(est.grid), rtol=1e-8, atol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 10_000), n=st.integers(10, 2000))
    def test_integrates_to_one(self, seed, n):
        x = np.random.default_rng(seed).standard_cauchy(n)
        assert kde_gaussian(x).integral() == pytest.approx(1.0, abs=1e-2)

    def test_cell_averages_match_points_on_fine_grid(self):
        x = np.random.default_rng(58).standard_normal(2000)
        cells = kde_gaussian(x, grid_size=2048)
        points = kde_gaussian(x, grid=cells.grid)
        np.testing.assert_allclose(cells.density, points.density, atol=1e-3)

    def test_constant_samples(self):
        with pytest.raises(DegenerateInput):
            kde_gaussian(np.full(50, 3.0))

    def test_silverman_value(self):
        x = np.arange(1.0, 101.0)
        iqr = np.percentile(x, 75) - np.percentile(x, 25)
        assert silverman_bandwidth(x) == pytest.approx(0.9 * min(x.std(ddof=1), iqr / 1.34) * 100 ** -0.2)


class TestTv:
    def test_identical_is_exactly_one(self, rng):
        x = rng.normal(size=500)
        assert tv_accuracy(x, x.copy()) == 1.0

    def test_disjoint(self, rng):
        assert tv_accuracy(rng.normal(0, 0.1, 1000), rng.normal(100, 0.1, 1000)) <= 0.01

    def test_gaussian_shift_closed_form(self):
        rng = np.random.default_rng(53)
        # TV(N(0,1), N(1,1)) = 2 Phi(1/2) - 1
        expected = 1 - (2 * stats.norm.cdf(0.5) - 1)
        got = tv_accuracy(rng.normal(0, 1, 100_000), rng.normal(1, 1, 100_000))
        assert got == pytest.approx(expected, abs=0.02)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), shift=st.floats(-5, 5))
    def test_bounded_and_symmetric(self, seed, shift):
        rng = np.random.default_rng(seed)
        a, b = rng.normal(size=200), rng.normal(shift, 2, 300)
        v = tv_accuracy(a, b)
        assert 0.0 <= v <= 1.0
        assert v == pytest.approx(tv_accuracy(b, a), abs=1e-12)

    def test_report(self, rng):
        a = ChainDraws(["x", "y"], rng.normal(size=(300, 2)))
        rep = accuracy_report(a, a)
        assert rep.mean == 1.0 and set(rep.as_dict()) == {"x", "y"}
        with pytest.raises(SchemaMismatch):
            accuracy_report(a, ChainDraws(["x", "z"], a.draws))


class TestSummaries:
    def test_constant(self):
        s = summarize(np.full(20, 2.5))
        assert s == {"mean": 2.5, "sd": 0.0, "q2.5": 2.5, "q50": 2.5, "q97.5": 2.5}

    def test_small(self):
        s = summarize([1, 2, 3, 4, 5])
        assert s["mean"] == 3 and s["q50"] == 3

    def test_normal_quantile(self):
        s = summarize(np.random.default_rng(54).standard_normal(100_000))
        assert abs(s["q97.5"] - 1.96) < 0.03


class TestEss:
    def test_iid(self):
        r = ess_fixed_width(np.random.default_rng(55).standard_normal(10_000), 0.05)
        assert r.ess == pytest.approx(10_000, rel=0.2)
        assert r.batch_size == 100

    def test_ar1(self):
        rng = np.random.default_rng(56)
        S, phi = 200_000, 0.9
        e = rng.standard_normal(S)
        x = np.empty(S)
        x[0] = e[0] / np.sqrt(1 - phi**2)
        for i in range(1, S):
            x[i] = phi * x[i - 1] + e[i]
        r = ess_fixed_width(x, 0.1)
        assert r.ess / S == pytest.approx((1 - phi) / (1 + phi), rel=0.3)

    def test_constant_chain(self):
        r = ess_fixed_width(np.ones(400), 0.01)
        assert r.converged and r.half_width == 0.0

    def test_half_width_decides_convergence(self):
        x = np.random.default_rng(57).standard_normal(10_000)
        assert ess_fixed_width(x, 1.0).converged
        assert not ess_fixed_width(x, 1e-4).converged
