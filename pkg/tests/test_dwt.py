import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from marketscale import dwt
from marketscale.errors import InsufficientData
from marketscale.series import TimeSeries
from oracles import periodic_dwt_matrix

EXTENSION_MODES = ["symmetric", "reflect", "antireflect"]
series_strategy = arrays(float, st.integers(8, 512), elements=st.floats(-100, 100, allow_nan=False))


def total_variation(x):
    return float(np.sum(np.abs(np.diff(x))))


class TestFilters:
    def test_admissibility(self):
        h, g = dwt.DB4.lowpass, dwt.DB4.highpass
        assert h.sum() == pytest.approx(np.sqrt(2), abs=1e-12)
        assert g.sum() == pytest.approx(0, abs=1e-12)
        assert h @ h == pytest.approx(1, abs=1e-12)
        assert g @ g == pytest.approx(1, abs=1e-12)
        assert h @ g == pytest.approx(0, abs=1e-12)

    def test_two_vanishing_moments(self):
        k = np.arange(4)
        assert dwt.DB4.highpass @ k == pytest.approx(0, abs=1e-12)

    def test_double_shift_orthogonality(self):
        h = dwt.DB4.lowpass
        assert h[2:] @ h[:2] == pytest.approx(0, abs=1e-15)


class TestForward:
    @pytest.mark.parametrize("mode", dwt.MODES)
    def test_constant(self, mode):
        c = dwt.dwt_level(np.full(64, 3.0), 3, mode)
        for d in c.details:
            np.testing.assert_allclose(d, 0, atol=1e-12)
        np.testing.assert_allclose(c.approx, 3.0 * 2 ** 1.5, rtol=1e-12)

    @pytest.mark.parametrize("mode", ["antireflect", "periodic", "symmetric"])
    def test_ramp_interior_details_vanish(self, mode):
        x = 0.7 * np.arange(128) - 5
        d = dwt.dwt_level(x, 1, mode).details[0]
        np.testing.assert_allclose(d[2:-2], 0, atol=1e-10)

    def test_antireflect_ramp_details_vanish_everywhere(self):
        c = dwt.dwt_level(0.3 * np.arange(300) + 2, 4, "antireflect")
        for d in c.details:
            np.testing.assert_allclose(d, 0, atol=1e-10)

    def test_periodic_matches_matrix_oracle(self, rng):
        x = rng.standard_normal(64)
        w = periodic_dwt_matrix(64, dwt.DB4.lowpass)
        np.testing.assert_allclose(w @ w.T, np.eye(64), atol=1e-12)
        c = dwt.dwt_level(x, 1, "periodic")
        np.testing.assert_allclose(np.concatenate([c.approx, c.details[0]]), w @ x, atol=1e-12)

    def test_parseval(self, rng):
        x = rng.standard_normal(64)
        c = dwt.dwt_level(x, 4, "periodic")
        energy = c.approx @ c.approx + sum(d @ d for d in c.details)
        assert energy == pytest.approx(x @ x, abs=1e-8)

    def test_periodic_counts_halve(self):
        c = dwt.dwt_level(np.ones(300), 4, "periodic")
        assert [d.size for d in c.details] == [150, 75, 38, 19]

    def test_extension_counts(self):
        c = dwt.dwt_level(np.ones(300), 4, "antireflect")
        assert [d.size for d in c.details] == [151, 77, 40, 21]

    @pytest.mark.parametrize("mode", dwt.MODES)
    def test_matches_pywavelets(self, mode, rng):
        pywt = pytest.importorskip("pywt")
        names = {"symmetric": "symmetric", "reflect": "reflect", "antireflect": "antireflect",
                 "periodic": "periodization"}
        for n in (8, 9, 17, 64, 301):
            x = rng.standard_normal(n)
            level = min(2, dwt.max_level(n, mode))
            ours = dwt.dwt_level(x, level, mode)
            ref = pywt.wavedec(x, "db2", mode=names[mode], level=level)
            np.testing.assert_allclose(ours.approx, ref[0], atol=1e-12)
            for mine, theirs in zip(ours.details[::-1], ref[1:]):
                np.testing.assert_allclose(mine, theirs, atol=1e-12)

    @pytest.mark.parametrize("n, level, mode", [(3, 1, "antireflect"), (8, 3, "periodic"), (12, 4, "periodic")])
    def test_insufficient(self, n, level, mode):
        with pytest.raises(InsufficientData):
            dwt.dwt_level(np.ones(n), level, mode)

    @pytest.mark.parametrize("mode", EXTENSION_MODES)
    def test_levels_past_max_still_invert(self, mode, rng):
        x = rng.standard_normal(8)
        assert dwt.max_level(8, mode) == 3
        np.testing.assert_allclose(dwt.idwt(dwt.dwt_level(x, 5, mode)), x, atol=1e-10)

    @pytest.mark.parametrize("n", range(4, 70))
    def test_max_level_is_last_shrinking_level(self, n):
        for mode in dwt.MODES:
            j = dwt.max_level(n, mode)
            sizes = [n] + [d.size for d in dwt.dwt_level(np.ones(n), j, mode).details]
            assert all(b < a for a, b in zip(sizes, sizes[1:]))

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            dwt.dwt_level(np.ones(16), 1, "zero")

    def test_max_level_for_300_months(self):
        assert all(dwt.max_level(300, m) >= 4 for m in dwt.MODES)


class TestReconstruction:
    @settings(max_examples=60, deadline=None)
    @given(series_strategy, st.sampled_from(dwt.MODES))
    def test_perfect_reconstruction(self, x, mode):
        level = min(4, dwt.max_level(x.size, mode))
        c = dwt.dwt_level(x, level, mode)
        scale = max(1.0, np.max(np.abs(x)))
        np.testing.assert_allclose(dwt.idwt(c), x, atol=1e-10 * scale)

    @pytest.mark.parametrize("level", [1, 2, 3, 4])
    def test_ramp_trend_is_ramp(self, level):
        x = 0.25 * np.arange(200) - 3
        np.testing.assert_allclose(dwt.trend_reconstruct(x, level), x, atol=1e-8)

    def test_alternation_has_no_level1_trend(self):
        x = np.where(np.arange(300) % 2, -1.0, 1.0)
        assert np.max(np.abs(dwt.trend_reconstruct(x, 1, "periodic"))) < 0.1
        assert np.max(np.abs(dwt.trend_reconstruct(x, 1, "reflect"))) < 0.1
        interior = dwt.trend_reconstruct(x, 1)[4:-4]
        assert np.max(np.abs(interior)) < 0.1

    def test_trend_matches_matrix_oracle(self, rng):
        x = rng.standard_normal(32)
        w = periodic_dwt_matrix(32, dwt.DB4.lowpass)
        low = w[:16]
        np.testing.assert_allclose(dwt.trend_reconstruct(x, 1, "periodic"), low.T @ (low @ x), atol=1e-12)


class TestFluctuations:
    def test_ramp(self):
        x = 2.0 * np.arange(100)
        for j in range(1, 5):
            np.testing.assert_allclose(dwt.fluctuations(x, j), 0, atol=1e-8)

    def test_palindrome_gives_palindrome(self, rng):
        # forward fluctuations of a palindrome are not palindromic (Db-4 is
        # asymmetric), so the average with the reversed pass is the fixed point
        half = rng.standard_normal(50)
        x = np.concatenate([half, half[::-1]])
        for j in range(1, 5):
            forward = dwt.fluctuations(x, j, False)
            sym = dwt.fluctuations(x, j, True)
            np.testing.assert_allclose(sym, sym[::-1], atol=1e-10)
            np.testing.assert_allclose(sym, 0.5 * (forward + forward[::-1]), atol=1e-10)

    def test_symmetrize_still_acts_on_palindrome(self, rng):
        half = rng.standard_normal(50)
        x = np.concatenate([half, half[::-1]])
        sym = dwt.fluctuations(x, 2, True)
        assert not np.allclose(sym, dwt.fluctuations(x, 2, False))

    @settings(max_examples=40, deadline=None)
    @given(series_strategy.filter(lambda a: a.size >= 64))
    def test_reversal_equivariance(self, x):
        for j in (1, 3):
            f = dwt.fluctuations(x, j)
            g = dwt.fluctuations(x[::-1], j)
            np.testing.assert_allclose(g, f[::-1], atol=1e-10 * max(1.0, np.max(np.abs(x))))


class TestDecompose:
    @settings(max_examples=40, deadline=None)
    @given(series_strategy.filter(lambda a: a.size >= 40), st.sampled_from(dwt.MODES), st.booleans())
    def test_additivity(self, x, mode, sym):
        d = dwt.decompose(TimeSeries(x), 4, symmetrize=sym, mode=mode)
        for t, f in zip(d.trends, d.fluctuations):
            assert t.size == x.size
            np.testing.assert_allclose(t + f, x, atol=1e-8)

    def test_metadata(self):
        s = TimeSeries(np.arange(64.0), (1990, 6), "A")
        d = dwt.decompose(s)
        assert (d.level_count, d.start_period, d.label, d.symmetrized) == (4, (1990, 6), "A", True)
        assert d.timescale_months(3) == 8

    def test_too_deep(self):
        with pytest.raises(InsufficientData):
            dwt.decompose(TimeSeries(np.arange(8.0)), 4, mode="periodic")

    @staticmethod
    def _median_trend_variance(mode):
        profiles = []
        for s in range(100):
            x = np.random.default_rng(s).standard_normal(300)
            profiles.append(dwt.variance_by_level(dwt.decompose(TimeSeries(x), mode=mode))[0])
        return np.median(profiles, axis=0)

    @pytest.mark.parametrize("mode", ["symmetric", "reflect", "periodic"])
    def test_trend_variance_non_increasing(self, mode):
        assert np.all(np.diff(self._median_trend_variance(mode)) <= 0)

    def test_trend_variance_antireflect(self):
        # linear extrapolation at the ends inflates the coarsest trend on white noise
        median = self._median_trend_variance("antireflect")
        assert np.all(np.diff(median[:3]) <= 0)
        assert median[3] > median[2]

    def test_zero_input(self):
        tv, fv = dwt.variance_by_level(dwt.decompose(TimeSeries(np.zeros(64))))
        assert tv == [0.0] * 4 and fv == [0.0] * 4

    def test_period_four_sinusoid(self):
        x = np.sin(2 * np.pi * np.arange(256) / 4)
        _, fv = dwt.variance_by_level(dwt.decompose(TimeSeries(x)))
        # nearly all variance leaves the trend by level 2
        assert fv[1] > 0.95 * np.var(x, ddof=1)
        assert fv[0] < fv[1]

    @pytest.mark.parametrize("mode", ["symmetric", "reflect", "antireflect"])
    def test_nested_smoothing_on_random_walks(self, mode):
        for seed in range(100):
            x = np.cumsum(np.random.default_rng(seed).standard_normal(300))
            x = (x - x.mean()) / x.std()
            tv = [total_variation(t) for t in dwt.decompose(TimeSeries(x), mode=mode).trends]
            assert all(b <= a + 1e-9 for a, b in zip(tv, tv[1:])), seed

    def test_monotone_input_is_already_minimal(self):
        # a monotone series has the least total variation of any path with its
        # endpoints, so filter ripple can only add to it
        x = np.cumsum(np.random.default_rng(0).exponential(size=256))
        tv = [total_variation(t) for t in dwt.decompose(TimeSeries(x)).trends]
        assert min(tv) >= (x[-1] - x[0]) * (1 - 1e-2)
