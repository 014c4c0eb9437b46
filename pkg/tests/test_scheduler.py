"""Cosine noise schedule and the forward noising step."""

import math

import numpy as np
import pytest

from oasis.errors import InvalidRange, ShapeMismatch, StepOutOfRange
from oasis.scheduler import (DEFAULT_BETA0, DEFAULT_BETA_T, DEFAULT_T_DIFF,
                             add_noise, make_schedule, noise_scale,
                             sample_step)


class TestMakeSchedule:
    def test_endpoint_equals_beta_t(self):
        s = make_schedule(50, 1e-4, 0.02)
        assert abs(s.beta[-1] - 0.02) <= 1e-12

    def test_midpoint(self):
        s = make_schedule(50, 1e-4, 0.02)
        # t = T/2 evaluates the cosine at pi/2
        assert abs(s.beta_at(25) - (1e-4 + 0.02) / 2) <= 1e-12

    def test_hand_chain_T2(self):
        s = make_schedule(2, 0.1, 0.3)
        assert s.beta_at(1) == pytest.approx(0.2, abs=1e-12)
        assert s.beta_at(2) == pytest.approx(0.3, abs=1e-12)
        assert s.alpha_bar_at(2) == pytest.approx(0.8 * 0.7, abs=1e-12)

    def test_monotone_nondecreasing(self):
        s = make_schedule(100, 1e-4, 0.05)
        assert np.all(np.diff(s.beta) >= 0)

    def test_alpha_bar_recurrence(self):
        s = make_schedule(64, 1e-3, 0.04)
        for t in range(2, 65):
            assert abs(s.alpha_bar_at(t)
                       - s.alpha_bar_at(t - 1) * (1 - s.beta_at(t))) <= 1e-12

    def test_alpha_bar_strictly_decreasing_in_unit_interval(self):
        s = make_schedule(50, 1e-4, 0.02)
        assert np.all(np.diff(s.alpha_bar) < 0)
        assert np.all(s.alpha_bar > 0) and np.all(s.alpha_bar <= 1)

    def test_invalid_ranges(self):
        with pytest.raises(InvalidRange):
            make_schedule(0, 1e-4, 0.02)
        with pytest.raises(InvalidRange):
            make_schedule(10, 0.02, 0.01)
        with pytest.raises(InvalidRange):
            make_schedule(10, 0.0, 0.02)


class TestAddNoise:
    def test_zero_noise(self, rng):
        s = make_schedule(50, 1e-4, 0.02)
        x = rng.normal(size=32)
        out = add_noise(x, 10, np.zeros(32), s)
        assert np.max(np.abs(out - math.sqrt(s.alpha_bar_at(10)) * x)) <= 1e-12

    def test_zero_signal(self, rng):
        s = make_schedule(50, 1e-4, 0.02)
        eps = rng.normal(size=16)
        out = add_noise(np.zeros(16), 30, eps, s)
        assert np.allclose(out, math.sqrt(1 - s.alpha_bar_at(30)) * eps)

    def test_small_t_barely_perturbs(self, rng):
        s = make_schedule(50, 1e-8, 0.02)
        x = rng.normal(size=64)
        eps = rng.normal(size=64)
        out = add_noise(x, 1, eps, s)
        # out - x = (sqrt(1-b1) - 1) x + sqrt(b1) eps, |sqrt(1-b)-1| <= b
        b1 = s.beta_at(1)
        bound = math.sqrt(b1) * np.abs(eps) + b1 * np.abs(x)
        assert np.all(np.abs(out - x) <= bound + 1e-12)

    def test_variance_preservation(self, rng):
        s = make_schedule(50, 1e-4, 0.02)
        x = rng.normal(size=10_000)
        eps = rng.normal(size=10_000)
        out = add_noise(x, 40, eps, s)
        assert abs(out.var() - 1.0) <= 0.05

    def test_step_out_of_range(self):
        s = make_schedule(10, 1e-4, 0.02)
        with pytest.raises(StepOutOfRange):
            add_noise(np.zeros(3), 0, np.zeros(3), s)
        with pytest.raises(StepOutOfRange):
            add_noise(np.zeros(3), 11, np.zeros(3), s)

    def test_shape_mismatch(self):
        s = make_schedule(10, 1e-4, 0.02)
        with pytest.raises(ShapeMismatch):
            add_noise(np.zeros(3), 1, np.zeros(4), s)

    def test_noise_scale_consistent(self):
        s = make_schedule(50, 1e-4, 0.02)
        for t in (1, 25, 50):
            assert noise_scale(t, s) == pytest.approx(
                math.sqrt(s.alpha_bar_at(t)))


class TestSampleStep:
    def test_T1_always_1(self, rng):
        assert all(sample_step(rng, 1) == 1 for _ in range(20))

    def test_deterministic_under_seed(self):
        a = [sample_step(np.random.default_rng(9), 50) for _ in range(1)]
        b = [sample_step(np.random.default_rng(9), 50) for _ in range(1)]
        r1, r2 = np.random.default_rng(5), np.random.default_rng(5)
        seq1 = [sample_step(r1, 50) for _ in range(100)]
        seq2 = [sample_step(r2, 50) for _ in range(100)]
        assert a == b and seq1 == seq2

    def test_uniform_frequency(self):
        r = np.random.default_rng(123)
        T = 10
        n = 100_000
        draws = np.array([sample_step(r, T) for _ in range(n)])
        assert draws.min() >= 1 and draws.max() <= T
        p = 1.0 / T
        sigma = math.sqrt(p * (1 - p) / n)
        freq = np.bincount(draws, minlength=T + 1)[1:] / n
        assert np.all(np.abs(freq - p) <= 3 * sigma)


def test_defaults_round_trip_dict():
    s = make_schedule()
    d = s.to_dict()
    assert d["T_diff"] == DEFAULT_T_DIFF
    assert d["beta0"] == DEFAULT_BETA0
    assert d["betaT"] == DEFAULT_BETA_T
