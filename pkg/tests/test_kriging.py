"""Ordinary kriging: hand-solved system, exactness, weight properties.

The three-point oracle below was solved outside this package: equally
spaced collinear sites (lat 0, 1, 2; shared lon), values 0, 1, 2, an
exponential variogram with nugget 0 / sill 1 / range 1, query at
lat 0.5.  gamma(h) = 1 - exp(-3h); the 4x4 ordinary-kriging system with
a zeroed diagonal gives the constants asserted here to 1e-9.
"""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oasis.baselines.kriging import (Variogram, KrigingModel, kriging_fit,
                                     pairwise_distance, empirical_variogram,
                                     fit_variogram)
from oasis.errors import InvalidConfig, TooFewPoints, Unfitted


ORACLE_LAT = np.array([0.0, 1.0, 2.0])
ORACLE_LON = np.zeros(3)
ORACLE_VAL = np.array([0.0, 1.0, 2.0])
ORACLE_VG = Variogram(model="exponential", nugget=0.0, sill=1.0,
                      range_param=1.0)
# solved by hand for the query at lat 0.5
ORACLE_W = np.array([0.407416651831, 0.397714713809, 0.194868634360])
ORACLE_LAM = 0.204570572381
ORACLE_EST = 0.787451982529
ORACLE_VAR = 1.022756686841


def oracle_model():
    return KrigingModel(ORACLE_LAT, ORACLE_LON, ORACLE_VAL, ORACLE_VG)


class TestVariogram:
    def test_exponential_shape(self):
        vg = Variogram(model="exponential", nugget=0.0, sill=1.0,
                       range_param=1.0)
        assert vg(0.0) == 0.0
        # the 3h/a form reaches ~95% of the sill at the practical range
        assert vg(1.0) == pytest.approx(1.0 - np.exp(-3.0))
        assert vg(100.0) == pytest.approx(1.0, abs=1e-9)

    def test_gaussian_shape(self):
        vg = Variogram(model="gaussian", nugget=0.5, sill=2.0, range_param=2.0)
        assert vg(0.0) == pytest.approx(0.5)
        assert vg(2.0) == pytest.approx(0.5 + 1.5 * (1 - np.exp(-3.0)))

    def test_spherical_clamps_at_range(self):
        vg = Variogram(model="spherical", nugget=0.0, sill=1.0, range_param=2.0)
        assert vg(2.0) == pytest.approx(1.0)
        assert vg(5.0) == pytest.approx(1.0)
        assert vg(1.0) == pytest.approx(1.5 * 0.5 - 0.5 * 0.125)

    def test_monotone_nondecreasing(self):
        for model in ("exponential", "gaussian", "spherical"):
            vg = Variogram(model=model, nugget=0.1, sill=1.0, range_param=1.5)
            h = np.linspace(0, 5, 200)
            assert np.all(np.diff(vg(h)) >= -1e-12)

    def test_invalid_configs(self):
        with pytest.raises(InvalidConfig):
            Variogram(model="cubic")
        with pytest.raises(InvalidConfig):
            Variogram(nugget=2.0, sill=1.0)
        with pytest.raises(InvalidConfig):
            Variogram(range_param=0.0)

    def test_dict_round_trip(self):
        vg = Variogram(model="spherical", nugget=0.2, sill=1.7,
                       range_param=0.9)
        assert Variogram(**vg.to_dict()) == vg


class TestDistance:
    def test_degrees_is_euclidean_with_cos_lat(self):
        # equirectangular: dlon shrinks by cos(mean lat)
        d = pairwise_distance([0.0], [0.0], [0.0], [1.0])
        assert d[0, 0] == pytest.approx(1.0)
        d = pairwise_distance([60.0], [0.0], [60.0], [1.0])
        assert d[0, 0] == pytest.approx(0.5, abs=1e-6)

    def test_haversine_scales_by_earth_radius(self):
        # one degree of latitude is ~111.19 great-circle kilometers
        dkm = pairwise_distance([0.0], [0.0], [1.0], [0.0],
                                metric="haversine")
        assert dkm[0, 0] == pytest.approx(111.19, rel=0.01)

    def test_unknown_metric(self):
        with pytest.raises(InvalidConfig):
            pairwise_distance([0.0], [0.0], [0.0], [0.0], metric="parsec")


class TestOracle:
    def test_estimate_matches_hand_solution(self):
        est, var = oracle_model().predict(0.5, 0.0)
        assert est == pytest.approx(ORACLE_EST, abs=1e-9)
        assert var == pytest.approx(ORACLE_VAR, abs=1e-9)

    def test_weights_match_hand_solution(self):
        # recover the weights by predicting with indicator values
        m = oracle_model()
        for i in range(3):
            vals = np.zeros(3)
            vals[i] = 1.0
            mi = KrigingModel(ORACLE_LAT, ORACLE_LON, vals, ORACLE_VG)
            est, _ = mi.predict(0.5, 0.0)
            assert est == pytest.approx(ORACLE_W[i], abs=1e-9)
        assert ORACLE_W.sum() == pytest.approx(1.0, abs=1e-9)
        assert ORACLE_W @ ORACLE_VAL + 0 * ORACLE_LAM == pytest.approx(
            ORACLE_EST, abs=1e-9)

    def test_exact_at_data_points_with_zero_variance(self):
        m = oracle_model()
        for i in range(3):
            est, var = m.predict(ORACLE_LAT[i], ORACLE_LON[i])
            assert est == pytest.approx(ORACLE_VAL[i], abs=1e-9)
            assert var == pytest.approx(0.0, abs=1e-9)

    def test_vector_query_matches_scalars(self):
        m = oracle_model()
        est, var = m.predict([0.5, 1.0], [0.0, 0.0])
        assert est == pytest.approx([ORACLE_EST, 1.0], abs=1e-9)
        assert var == pytest.approx([ORACLE_VAR, 0.0], abs=1e-9)


class TestProperties:
    def fitted(self, seed, n=12):
        rng = np.random.default_rng(seed)
        lat = rng.uniform(0, 1, n)
        lon = rng.uniform(0, 1, n)
        vals = rng.normal(0, 1, n)
        vg = Variogram(nugget=0.0, sill=1.0, range_param=0.5)
        return KrigingModel(lat, lon, vals, vg), lat, lon, vals

    def test_weights_sum_to_one_over_seeds(self):
        # predicting from all-ones data recovers the weight sum exactly
        for seed in range(100):
            m, lat, lon, _ = self.fitted(seed)
            ones = KrigingModel(lat, lon, np.ones(len(lat)), m.variogram)
            rng = np.random.default_rng(1000 + seed)
            est, _ = ones.predict(rng.uniform(0, 1, 3), rng.uniform(0, 1, 3))
            assert np.max(np.abs(est - 1.0)) <= 1e-9

    def test_far_query_tends_to_mean(self):
        # beyond the correlation range every site is interchangeable,
        # so the estimate collapses to the sample mean
        _, lat, lon, vals = self.fitted(0)
        vg = Variogram(nugget=0.0, sill=1.0, range_param=0.01)
        m = KrigingModel(lat, lon, vals, vg)
        est, _ = m.predict(500.0, 500.0)
        assert est == pytest.approx(vals.mean(), abs=1e-3)

    def test_nugget_free_fit_is_exact_everywhere(self):
        m, lat, lon, vals = self.fitted(3)
        est, var = m.predict(lat, lon)
        assert np.max(np.abs(est - vals)) <= 1e-8
        assert np.max(np.abs(var)) <= 1e-8

    @settings(deadline=None, max_examples=25)
    @given(st.integers(0, 10_000))
    def test_estimate_within_data_hull_values(self, seed):
        # with positive weights not guaranteed, allow a loose envelope
        m, _, _, vals = self.fitted(seed % 1000)
        rng = np.random.default_rng(seed)
        est, _ = m.predict(rng.uniform(0, 1), rng.uniform(0, 1))
        spread = vals.max() - vals.min()
        assert vals.min() - spread <= est <= vals.max() + spread


class TestFitEntry:
    def test_hint_dict_bypasses_fitting(self):
        m = kriging_fit(ORACLE_LAT, ORACLE_LON, ORACLE_VAL,
                        variogram_hint={"model": "exponential", "nugget": 0.0,
                                        "sill": 1.0, "range_param": 1.0})
        est, _ = m.predict(0.5, 0.0)
        assert est == pytest.approx(ORACLE_EST, abs=1e-9)

    def test_auto_fit_runs(self):
        rng = np.random.default_rng(0)
        lat, lon = rng.uniform(0, 1, 40), rng.uniform(0, 1, 40)
        vals = np.sin(4 * lat) + 0.1 * rng.normal(size=40)
        m = kriging_fit(lat, lon, vals)
        est, var = m.predict(0.5, 0.5)
        assert np.isfinite(est) and np.isfinite(var)
        assert m.variogram.sill > m.variogram.nugget >= 0.0

    def test_partial_hint_overrides_fields(self):
        rng = np.random.default_rng(1)
        lat, lon = rng.uniform(0, 1, 30), rng.uniform(0, 1, 30)
        vals = rng.normal(size=30)
        m = kriging_fit(lat, lon, vals, variogram_hint={"nugget": 0.0})
        assert m.variogram.nugget == 0.0

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            kriging_fit([0.0, 1.0], [0.0, 0.0], [1.0, 2.0])

    def test_collocated_points(self):
        with pytest.raises(TooFewPoints):
            kriging_fit([1.0] * 4, [2.0] * 4, [0.0, 1.0, 2.0, 3.0])

    def test_length_mismatch(self):
        with pytest.raises(TooFewPoints):
            kriging_fit([0.0, 1.0, 2.0], [0.0, 0.0], [1.0, 2.0, 3.0])


class TestEmpiricalVariogram:
    def test_pure_nugget_field(self):
        rng = np.random.default_rng(0)
        lat, lon = rng.uniform(0, 1, 120), rng.uniform(0, 1, 120)
        vals = rng.normal(0, 2.0, 120)
        lags, gammas = empirical_variogram(lat, lon, vals)
        # white noise: semivariance ~ variance at every lag
        assert np.nanmedian(gammas) == pytest.approx(4.0, rel=0.35)

    def test_fit_variogram_recovers_curve(self):
        truth = Variogram(nugget=0.2, sill=1.2, range_param=0.6)
        h = np.linspace(0.01, 1.5, 25)
        fit = fit_variogram(h, truth(h))
        assert fit.nugget == pytest.approx(0.2, abs=0.05)
        assert fit.sill == pytest.approx(1.2, abs=0.1)
        assert fit.range_param == pytest.approx(0.6, abs=0.1)

    def test_collocated_rejected(self):
        with pytest.raises(TooFewPoints):
            empirical_variogram([1.0, 1.0], [2.0, 2.0], [0.0, 1.0])


class TestBaselineAdapter:
    def test_fit_predict_on_point_table(self, tiny_split, tiny_traj):
        from oasis.baselines.kriging import KrigingBaseline
        from oasis.features import point_table
        train = point_table(tiny_traj.subset(tiny_split.train_ids))
        test = point_table(tiny_traj.subset(tiny_split.test_ids))
        base = KrigingBaseline()
        base.fit(train)
        pred = base.predict(test)
        assert pred.shape == test.s.shape
        assert np.isfinite(pred).all()

    def test_unfitted_guard(self):
        from oasis.baselines.kriging import KrigingBaseline
        with pytest.raises(Unfitted):
            KrigingBaseline().predict(None)
