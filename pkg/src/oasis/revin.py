"""Reversible instance normalization.

Per-trajectory statistics (population mean and variance over observed
entries) followed by a learnable affine map, with an exact algebraic
inverse used to bring model outputs back to physical units:

    normalize:    y = gamma * (x - mu) / (sqrt(var) + eps) + beta
    denormalize:  x = (y - beta) / gamma * (sqrt(var) + eps) + mu

Note the denominator is ``sqrt(var) + eps`` (epsilon added after the
square root), so the inverse is exact for any ``eps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySequence, ShapeMismatch, ZeroGamma

DEFAULT_EPS = 1e-5


def compute_stats(values, mask=None):
    """Population mean and variance over observed entries of one channel.

    Parameters
    ----------
    values : array-like
        Observed values; NaNs are treated as missing.
    mask : array-like of bool, optional
        Explicit observation mask; combined with finiteness.

    Returns
    -------
    (mu, var) : floats, with variance using divisor M (population form).
    """
    x = np.asarray(values, dtype=float)
    keep = np.isfinite(x)
    if mask is not None:
        mask = np.asarray(mask).astype(bool)
        if mask.shape != x.shape:
            raise ShapeMismatch(f"mask shape {mask.shape} != values shape {x.shape}")
        keep &= mask
    obs = x[keep]
    if obs.size == 0:
        raise EmptySequence("no observed values to compute statistics from")
    mu = float(obs.mean())
    var = float(((obs - mu) ** 2).mean())
    return mu, var


@dataclass
class RevinState:
    """Normalization statistics plus the learnable affine parameters.

    ``mu``/``var`` may be scalars or arrays broadcastable against the data
    (e.g. per-point trajectory statistics); ``gamma``/``beta`` start at
    exactly 1 and 0.
    """

    mu: float | np.ndarray = 0.0
    var: float | np.ndarray = 1.0
    gamma: float | np.ndarray = field(default=1.0)
    beta: float | np.ndarray = field(default=0.0)
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.eps <= 0:
            raise ShapeMismatch("eps must be positive")
        if np.any(np.asarray(self.var) < 0):
            raise ShapeMismatch("variance must be nonnegative")

    @classmethod
    def from_observations(cls, values, mask=None, eps=DEFAULT_EPS):
        mu, var = compute_stats(values, mask=mask)
        return cls(mu=mu, var=var, eps=eps)

    @property
    def scale(self):
        """Denominator sqrt(var) + eps."""
        return np.sqrt(np.asarray(self.var, dtype=float)) + self.eps


def _check_broadcast(x, state):
    try:
        np.broadcast_shapes(np.shape(x), np.shape(state.mu), np.shape(state.var),
                            np.shape(state.gamma), np.shape(state.beta))
    except ValueError as exc:
        raise ShapeMismatch(str(exc))


def standardize(x, state: RevinState):
    """(x - mu) / (sqrt(var) + eps), without the affine map."""
    _check_broadcast(x, state)
    return (np.asarray(x, dtype=float) - state.mu) / state.scale


def normalize(x, state: RevinState, mask=None):
    """Apply the full normalization; masked-out entries pass through."""
    _check_broadcast(x, state)
    x = np.asarray(x, dtype=float)
    y = state.gamma * standardize(x, state) + state.beta
    if mask is not None:
        mask = np.asarray(mask).astype(bool)
        if mask.shape != x.shape:
            raise ShapeMismatch(f"mask shape {mask.shape} != data shape {x.shape}")
        y = np.where(mask, y, x)
    return y


def denormalize(y, state: RevinState, mask=None):
    """Exact inverse of :func:`normalize`."""
    _check_broadcast(y, state)
    if np.any(np.asarray(state.gamma) == 0):
        raise ZeroGamma("cannot invert normalization with gamma == 0")
    y = np.asarray(y, dtype=float)
    x = (y - state.beta) / state.gamma * state.scale + state.mu
    if mask is not None:
        mask = np.asarray(mask).astype(bool)
        if mask.shape != y.shape:
            raise ShapeMismatch(f"mask shape {mask.shape} != data shape {y.shape}")
        x = np.where(mask, x, y)
    return x


def normalize_param_grads(x, state: RevinState, upstream):
    """Gradients of ``sum(upstream * normalize(x))`` w.r.t. (gamma, beta).

    Returned with the shapes of ``state.gamma`` / ``state.beta`` (summed
    over broadcast axes).
    """
    xstd = standardize(x, state)
    dgamma_full = np.asarray(upstream) * xstd
    dbeta_full = np.asarray(upstream) * np.ones_like(xstd)
    return (_reduce_to(dgamma_full, np.shape(state.gamma)),
            _reduce_to(dbeta_full, np.shape(state.beta)))


def denormalize_grads(y, state: RevinState, upstream):
    """Gradients of ``sum(upstream * denormalize(y))``.

    Returns ``(dy, dgamma, dbeta)`` where ``dy`` has the shape of ``y``
    and the parameter gradients are reduced to their parameter shapes.
    """
    up = np.asarray(upstream, dtype=float)
    gamma = np.asarray(state.gamma, dtype=float)
    scale = state.scale
    y = np.asarray(y, dtype=float)
    dy = up * scale / gamma
    dgamma_full = up * (-(y - state.beta) / gamma ** 2 * scale)
    dbeta_full = up * (-scale / gamma) * np.ones_like(y)
    return (dy,
            _reduce_to(dgamma_full, np.shape(gamma)),
            _reduce_to(dbeta_full, np.shape(state.beta)))


def _reduce_to(grad, shape):
    """Sum a broadcasted gradient back down to the parameter shape."""
    grad = np.asarray(grad, dtype=float)
    if shape == ():
        return float(grad.sum())
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if grad.shape[ax] != n:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)
