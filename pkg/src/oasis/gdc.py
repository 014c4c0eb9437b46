"""Global-dependency block: positional encoding plus multi-head self-attention.

Implements the standard sinusoidal position table, scaled dot-product
attention with per-row max subtraction, and a residual + layer-norm block.
Forward passes cache what the hand-derived backward passes need; gradients
are verified against finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteLogits, OddDimension, ShapeMismatch
from .nn import Param


@dataclass
class AttentionConfig:
    """Width/head-count configuration for the self-attention block."""

    d_model: int = 64
    n_heads: int = 4
    layer_norm: bool = True

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ShapeMismatch(
                f"d_model={self.d_model} not divisible by n_heads={self.n_heads}")

    @property
    def d_k(self):
        return self.d_model // self.n_heads


def positional_encoding(N, d_model):
    """Sinusoidal position table of shape (N, d_model).

    ``PE[p, 2i] = sin(p / 10000^(2i/d_model))`` and ``PE[p, 2i+1]`` the
    matching cosine.  Deterministic, no learnable state.
    """
    if N < 1:
        raise ShapeMismatch("N must be >= 1")
    if d_model < 2 or d_model % 2 != 0:
        raise OddDimension(f"d_model must be even and >= 2, got {d_model}")
    pos = np.arange(N, dtype=float)[:, None]
    i = np.arange(0, d_model, 2, dtype=float)[None, :]
    angle = pos / np.power(10000.0, i / d_model)
    pe = np.empty((N, d_model))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


def add_pe(x, pe):
    """Elementwise ``x + pe`` broadcast over leading batch axes."""
    x = np.asarray(x, dtype=float)
    pe = np.asarray(pe, dtype=float)
    if x.shape[-2:] != pe.shape:
        raise ShapeMismatch(f"pe shape {pe.shape} does not match x {x.shape}")
    return x + pe


def split_heads(x, n_heads):
    """(B, N, d_model) -> (B, H, N, d_k)."""
    B, N, dm = x.shape
    if dm % n_heads != 0:
        raise ShapeMismatch(f"d_model={dm} not divisible by {n_heads} heads")
    dk = dm // n_heads
    return x.reshape(B, N, n_heads, dk).transpose(0, 2, 1, 3)


def merge_heads(x):
    """(B, H, N, d_k) -> (B, N, d_model)."""
    B, H, N, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, N, H * dk)


def project_qkv(x, W_Q, W_K, W_V, n_heads=1):
    """Project inputs to per-head query/key/value tensors.

    ``x`` has shape (B, N, d_model); each weight matrix is
    (d_model, d_model).  Returns (Q, K, V) of shape (B, H, N, d_k).
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 3:
        raise ShapeMismatch(f"x must be (B, N, d_model), got {x.shape}")
    dm = x.shape[-1]
    for name, W in (("W_Q", W_Q), ("W_K", W_K), ("W_V", W_V)):
        if np.shape(W) != (dm, dm):
            raise ShapeMismatch(f"{name} must be ({dm}, {dm}), got {np.shape(W)}")
    Q = split_heads(x @ W_Q, n_heads)
    K = split_heads(x @ W_K, n_heads)
    V = split_heads(x @ W_V, n_heads)
    return Q, K, V


def attention(Q, K, V):
    """Scaled dot-product attention.

    ``A = softmax(Q K^T / sqrt(d_k))`` row-wise (with max subtraction for
    stability) and ``output_i = sum_j A[i, j] V_j``.  Inputs share shape
    (..., N, d_k); returns ``(output, A)``.
    """
    Q = np.asarray(Q, dtype=float)
    K = np.asarray(K, dtype=float)
    V = np.asarray(V, dtype=float)
    if Q.shape != K.shape or Q.shape != V.shape:
        raise ShapeMismatch(f"Q/K/V shapes differ: {Q.shape}, {K.shape}, {V.shape}")
    dk = Q.shape[-1]
    logits = Q @ np.swapaxes(K, -1, -2) / np.sqrt(dk)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteLogits("attention logits contain NaN or infinity")
    A = _softmax_lastaxis(logits)
    return A @ V, A


def _softmax_lastaxis(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _softmax_backward(A, dA):
    # dS for A = softmax(S): A * (dA - sum(dA*A))
    return A * (dA - (dA * A).sum(axis=-1, keepdims=True))


def layer_norm(x, gamma, beta, eps=1e-5):
    """Layer normalization over the last axis; returns (y, cache)."""
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean) * inv
    return gamma * xhat + beta, (xhat, inv, gamma)


def layer_norm_backward(dy, cache):
    xhat, inv, gamma = cache
    dxhat = dy * gamma
    dgamma = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    dbeta = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dx = inv * (dxhat
                - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, dgamma, dbeta


class SelfAttentionBlock:
    """Multi-head self-attention with residual add and layer normalization.

    The block computes ``y = LN(x + MHA(x) @ W_O)`` (layer norm optional).
    Positional encodings are added by the caller before the block so the
    same weights serve both position-aware and position-free paths.
    """

    PARAM_NAMES = ("W_Q", "W_K", "W_V", "W_O", "ln_gamma", "ln_beta")

    def __init__(self, config: AttentionConfig, rng=None):
        self.config = config
        dm = config.d_model
        rng = rng or np.random.default_rng(0)
        bound = 1.0 / np.sqrt(dm)
        self.params = {
            "W_Q": Param(rng.uniform(-bound, bound, (dm, dm))),
            "W_K": Param(rng.uniform(-bound, bound, (dm, dm))),
            "W_V": Param(rng.uniform(-bound, bound, (dm, dm))),
            "W_O": Param(rng.uniform(-bound, bound, (dm, dm))),
            "ln_gamma": Param(np.ones(dm)),
            "ln_beta": Param(np.zeros(dm)),
        }

    @property
    def param_list(self):
        return [self.params[k] for k in self.PARAM_NAMES]

    def forward(self, x):
        """Returns (y, cache); x has shape (B, N, d_model)."""
        p = {k: v.value for k, v in self.params.items()}
        H = self.config.n_heads
        Q, K, V = project_qkv(x, p["W_Q"], p["W_K"], p["W_V"], n_heads=H)
        ctx, A = attention(Q, K, V)
        ctx_flat = merge_heads(ctx)
        attn_out = ctx_flat @ p["W_O"]
        r = x + attn_out
        if self.config.layer_norm:
            y, ln_cache = layer_norm(r, p["ln_gamma"], p["ln_beta"])
        else:
            y, ln_cache = r, None
        return y, (x, Q, K, V, A, ctx_flat, ln_cache)

    def backward(self, dy, cache):
        """Returns (dx, grads); grads are also accumulated on the params."""
        p = {k: v.value for k, v in self.params.items()}
        x, Q, K, V, A, ctx_flat, ln_cache = cache
        H = self.config.n_heads
        dk = self.config.d_k

        grads = {}
        if self.config.layer_norm:
            dr, grads["ln_gamma"], grads["ln_beta"] = layer_norm_backward(dy, ln_cache)
        else:
            dr = dy
            grads["ln_gamma"] = np.zeros_like(p["ln_gamma"])
            grads["ln_beta"] = np.zeros_like(p["ln_beta"])

        d_attn = dr
        B, N, dm = x.shape
        grads["W_O"] = ctx_flat.reshape(-1, dm).T @ d_attn.reshape(-1, dm)
        d_ctx_flat = d_attn @ p["W_O"].T
        d_ctx = split_heads(d_ctx_flat, H)

        dA = d_ctx @ np.swapaxes(V, -1, -2)
        dV = np.swapaxes(A, -1, -2) @ d_ctx
        dS = _softmax_backward(A, dA)
        dQ = dS @ K / np.sqrt(dk)
        dK = np.swapaxes(dS, -1, -2) @ Q / np.sqrt(dk)

        dQf = merge_heads(dQ)
        dKf = merge_heads(dK)
        dVf = merge_heads(dV)
        x_flat = x.reshape(-1, dm)
        grads["W_Q"] = x_flat.T @ dQf.reshape(-1, dm)
        grads["W_K"] = x_flat.T @ dKf.reshape(-1, dm)
        grads["W_V"] = x_flat.T @ dVf.reshape(-1, dm)

        dx = dr + dQf @ p["W_Q"].T + dKf @ p["W_K"].T + dVf @ p["W_V"].T
        for k, g in grads.items():
            self.params[k].grad += g
        return dx, grads
