"""Cosine-scheduled forward diffusion.

Precomputes the noise schedule

    beta_t = beta_0 + (beta_T - beta_0)/2 * (1 + cos(pi * (T - t)/T)),
    alpha_t = 1 - beta_t,  alpha_bar_t = prod_{i<=t} alpha_i,

for t = 1..T, and perturbs samples via

    x_t = sqrt(alpha_bar_t) * x + sqrt(1 - alpha_bar_t) * noise.

Noise is always caller-supplied so tests and training stay deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidRange, ShapeMismatch, StepOutOfRange

DEFAULT_T_DIFF = 50
DEFAULT_BETA0 = 1e-4
DEFAULT_BETA_T = 0.02


@dataclass(frozen=True)
class DiffusionSchedule:
    """Immutable precomputed schedule; arrays are 0-indexed by t-1."""

    T_diff: int
    beta0: float
    betaT: float
    beta: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    alpha_bar: np.ndarray = field(repr=False)

    def beta_at(self, t):
        return self.beta[_check_step(t, self.T_diff) - 1]

    def alpha_bar_at(self, t):
        return self.alpha_bar[_check_step(t, self.T_diff) - 1]

    def to_dict(self):
        return {"T_diff": self.T_diff, "beta0": self.beta0, "betaT": self.betaT}


def _check_step(t, T_diff):
    t = int(t)
    if not 1 <= t <= T_diff:
        raise StepOutOfRange(f"step t={t} outside [1, {T_diff}]")
    return t


def make_schedule(T_diff=DEFAULT_T_DIFF, beta0=DEFAULT_BETA0, betaT=DEFAULT_BETA_T):
    """Fill the cosine schedule for t = 1..T_diff."""
    if T_diff < 1:
        raise InvalidRange(f"T_diff must be >= 1, got {T_diff}")
    if not (0.0 < beta0 < betaT < 1.0):
        raise InvalidRange(f"need 0 < beta0 < betaT < 1, got beta0={beta0}, betaT={betaT}")
    t = np.arange(1, T_diff + 1, dtype=float)
    beta = beta0 + 0.5 * (betaT - beta0) * (1.0 + np.cos(np.pi * (T_diff - t) / T_diff))
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    return DiffusionSchedule(T_diff=int(T_diff), beta0=float(beta0), betaT=float(betaT),
                             beta=beta, alpha=alpha, alpha_bar=alpha_bar)


def add_noise(x, t, noise, schedule: DiffusionSchedule):
    """Perturb ``x`` at diffusion step ``t`` with the given unit noise."""
    x = np.asarray(x, dtype=float)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != x.shape:
        raise ShapeMismatch(f"noise shape {noise.shape} != x shape {x.shape}")
    ab = schedule.alpha_bar_at(t)
    return np.sqrt(ab) * x + np.sqrt(1.0 - ab) * noise


def noise_scale(t, schedule: DiffusionSchedule):
    """d(noisy)/d(x) at step t, i.e. sqrt(alpha_bar_t)."""
    return float(np.sqrt(schedule.alpha_bar_at(t)))


def sample_step(rng, T_diff):
    """Uniform diffusion step in [1, T_diff] from a seeded generator."""
    if T_diff < 1:
        raise InvalidRange(f"T_diff must be >= 1, got {T_diff}")
    return int(rng.integers(1, T_diff + 1))
