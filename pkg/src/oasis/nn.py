"""Minimal dense/recurrent building blocks with explicit backward passes.

Everything here is plain numpy: layers return ``(y, cache)`` from
``forward`` and accumulate parameter gradients in ``backward``.  The
gradients are exercised against central finite differences in the tests.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatch


class Param:
    """A trainable array paired with its gradient accumulator."""

    __slots__ = ("value", "grad")

    def __init__(self, value):
        self.value = np.asarray(value, dtype=float)
        self.grad = np.zeros_like(self.value)


def zero_grads(params):
    for p in params:
        p.grad[...] = 0.0


class Linear:
    """Affine map over the last axis: y = x @ W + b."""

    def __init__(self, n_in, n_out, rng, zero_init=False, bias=True):
        if zero_init:
            W = np.zeros((n_in, n_out))
        else:
            bound = 1.0 / np.sqrt(n_in)
            W = rng.uniform(-bound, bound, (n_in, n_out))
        self.W = Param(W)
        self.b = Param(np.zeros(n_out)) if bias else None

    @property
    def params(self):
        return [self.W] + ([self.b] if self.b is not None else [])

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.W.value.shape[0]:
            raise ShapeMismatch(
                f"linear expects last dim {self.W.value.shape[0]}, got {x.shape}")
        y = x @ self.W.value
        if self.b is not None:
            y = y + self.b.value
        return y, x

    def backward(self, dy, cache):
        x = cache
        n_in, n_out = self.W.value.shape
        self.W.grad += x.reshape(-1, n_in).T @ dy.reshape(-1, n_out)
        if self.b is not None:
            self.b.grad += dy.reshape(-1, n_out).sum(axis=0)
        return dy @ self.W.value.T


class ReLU:
    params = ()

    def forward(self, x):
        y = np.maximum(x, 0.0)
        return y, (x > 0)

    def backward(self, dy, cache):
        return dy * cache


class LeakyReLU:
    params = ()

    def __init__(self, alpha=0.2):
        self.alpha = alpha

    def forward(self, x):
        y = np.where(x > 0, x, self.alpha * x)
        return y, (x > 0)

    def backward(self, dy, cache):
        return np.where(cache, dy, self.alpha * dy)


def sigmoid(z):
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Sequential:
    """A forward/backward chain of the layers above."""

    def __init__(self, layers):
        self.layers = list(layers)

    @property
    def params(self):
        out = []
        for layer in self.layers:
            out.extend(layer.params)
        return out

    def forward(self, x):
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        return x, caches

    def backward(self, dy, caches):
        for layer, c in zip(reversed(self.layers), reversed(caches)):
            dy = layer.backward(dy, c)
        return dy


class LSTM:
    """Single-layer LSTM over (B, T, n_in) sequences, returning all hidden
    states (B, T, n_hidden).  Gate order in the packed weight: i, f, g, o;
    forget-gate bias starts at 1."""

    def __init__(self, n_in, n_hidden, rng):
        bound = 1.0 / np.sqrt(n_in + n_hidden)
        self.W = Param(rng.uniform(-bound, bound, (n_in + n_hidden, 4 * n_hidden)))
        b = np.zeros(4 * n_hidden)
        b[n_hidden:2 * n_hidden] = 1.0
        self.b = Param(b)
        self.n_in = n_in
        self.n_hidden = n_hidden

    @property
    def params(self):
        return [self.W, self.b]

    def forward(self, x):
        x = np.asarray(x, dtype=float)
        B, T, n_in = x.shape
        if n_in != self.n_in:
            raise ShapeMismatch(f"lstm expects input width {self.n_in}, got {n_in}")
        nh = self.n_hidden
        h = np.zeros((B, nh))
        c = np.zeros((B, nh))
        hs = np.empty((B, T, nh))
        steps = []
        for t in range(T):
            xt = x[:, t, :]
            z = np.concatenate([h, xt], axis=1) @ self.W.value + self.b.value
            i = sigmoid(z[:, :nh])
            f = sigmoid(z[:, nh:2 * nh])
            g = np.tanh(z[:, 2 * nh:3 * nh])
            o = sigmoid(z[:, 3 * nh:])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            steps.append((h, c, xt, i, f, g, o, tanh_c))
            h, c = h_new, c_new
            hs[:, t, :] = h
        return hs, (x.shape, steps)

    def backward(self, dhs, cache):
        shape, steps = cache
        B, T, _ = shape
        nh = self.n_hidden
        dx = np.zeros(shape)
        dh_next = np.zeros((B, nh))
        dc_next = np.zeros((B, nh))
        for t in range(T - 1, -1, -1):
            h_prev, c_prev, xt, i, f, g, o, tanh_c = steps[t]
            dh = dhs[:, t, :] + dh_next
            do = dh * tanh_c
            dc = dh * o * (1.0 - tanh_c ** 2) + dc_next
            di = dc * g
            df = dc * c_prev
            dg = dc * i
            dc_next = dc * f
            dz = np.concatenate([
                di * i * (1 - i),
                df * f * (1 - f),
                dg * (1 - g ** 2),
                do * o * (1 - o),
            ], axis=1)
            inp = np.concatenate([h_prev, xt], axis=1)
            self.W.grad += inp.T @ dz
            self.b.grad += dz.sum(axis=0)
            dinp = dz @ self.W.value.T
            dh_next = dinp[:, :nh]
            dx[:, t, :] = dinp[:, nh:]
        return dx


class Adam:
    """Adaptive moment estimation over a fixed list of :class:`Param`."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]
        self.t = 0

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            mhat = m / (1 - b1 ** self.t)
            vhat = v / (1 - b2 ** self.t)
            p.value -= self.lr * mhat / (np.sqrt(vhat) + self.eps)
