"""Neural baselines: MLP, LSTM, and a vanilla GAN.

The MLP and LSTM consume the same per-point feature rows as the main
model (globally scaled coordinates plus standardized tide) and minimize
MSE on the globally standardized salinity target.  The GAN baseline is
the main trainer with attention, diffusion noising, instance
normalization and feature matching all switched off, leaving a plain
conditional GAN with an MSE term and a non-saturating adversarial loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import dan
from ..errors import InvalidConfig, Unfitted
from ..features import (FeatureScaler, coord_features, group_windows_by_length,
                        make_windows, point_table, scaled_features)
from ..nn import Adam, LSTM, Linear, ReLU, Sequential, zero_grads
from ..tensorize import TrajectorySet


def _points(data):
    if isinstance(data, TrajectorySet):
        return point_table(data)
    return data


@dataclass
class NeuralConfig:
    epochs: int = 200
    batch_size: int = 256      # points (mlp) or windows (lstm)
    lr: float = 1e-3
    hidden: int = 64
    window: int = 32
    use_tide: bool = True
    seed: int = 42
    eps: float = 1e-5

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig("epochs and batch_size must be >= 1")


class _ScaledNet:
    """Shared fit-time plumbing: scaler, global stats, z-space target."""

    def __init__(self, cfg: NeuralConfig):
        self.cfg = cfg
        self.scaler = None
        self.stats = None
        self.history = None

    def _prepare(self, pts):
        self.scaler = FeatureScaler.fit(coord_features(pts.t, pts.lat, pts.lon))
        self.stats = {
            "s_mu": float(pts.s.mean()), "s_var": float(pts.s.var()),
            "tide_mu": float(pts.tide.mean()), "tide_var": float(pts.tide.var()),
        }
        xf = self._features(pts)
        scale = np.sqrt(self.stats["s_var"]) + self.cfg.eps
        z = (pts.s - self.stats["s_mu"]) / scale
        return xf, z, scale

    def _features(self, pts):
        tide = pts.tide if self.cfg.use_tide else None
        return scaled_features(self.scaler, pts.t, pts.lat, pts.lon, tide,
                               tide_mu=self.stats["tide_mu"],
                               tide_var=self.stats["tide_var"],
                               eps=self.cfg.eps)

    def _denorm(self, z):
        return z * (np.sqrt(self.stats["s_var"]) + self.cfg.eps) \
            + self.stats["s_mu"]


class MlpBaseline(_ScaledNet):
    """Feed-forward regressor: the feature stack with no attention,
    no diffusion and no adversary."""

    kind = "mlp"

    def __init__(self, **kw):
        super().__init__(NeuralConfig(**kw))
        self.net = None

    def fit(self, data):
        cfg = self.cfg
        pts = _points(data)
        xf, z, scale = self._prepare(pts)
        rng = np.random.default_rng(cfg.seed)
        n_feat = xf.shape[1]
        self.net = Sequential([
            Linear(n_feat, cfg.hidden, rng), ReLU(),
            Linear(cfg.hidden, cfg.hidden, rng), ReLU(),
            Linear(cfg.hidden, cfg.hidden, rng), ReLU(),
            Linear(cfg.hidden, 1, rng),
        ])
        opt = Adam(self.net.params, lr=cfg.lr)
        n = len(pts)
        self.history = {"mse": []}
        for _ in range(cfg.epochs):
            order = rng.permutation(n)
            ep_mse = 0.0
            nb = 0
            for i in range(0, n, cfg.batch_size):
                sel = order[i:i + cfg.batch_size]
                zero_grads(self.net.params)
                out, caches = self.net.forward(xf[sel])
                diff = out[:, 0] - z[sel]
                self.net.backward((2.0 * diff / diff.size)[:, None], caches)
                opt.step()
                ep_mse += float((diff ** 2).mean()) * scale ** 2
                nb += 1
            self.history["mse"].append(ep_mse / nb)
        return self

    def predict(self, pts):
        if self.net is None:
            raise Unfitted("mlp baseline: fit before predict")
        out, _ = self.net.forward(self._features(pts))
        return self._denorm(out[:, 0])


class LstmBaseline(_ScaledNet):
    """Recurrent encoder over trajectory windows with a linear head;
    one salinity estimate per input point."""

    kind = "lstm"

    def __init__(self, **kw):
        super().__init__(NeuralConfig(**kw))
        self.rnn = None
        self.head = None

    def fit(self, data):
        cfg = self.cfg
        pts = _points(data)
        xf, z, scale = self._prepare(pts)
        rng = np.random.default_rng(cfg.seed)
        self.rnn = LSTM(xf.shape[1], cfg.hidden, rng)
        self.head = Linear(cfg.hidden, 1, rng)
        params = self.rnn.params + self.head.params
        opt = Adam(params, lr=cfg.lr)
        groups = group_windows_by_length(make_windows(pts, cfg.window))
        self.history = {"mse": []}
        for _ in range(cfg.epochs):
            ep_mse = 0.0
            nb = 0
            for _, wins in groups.items():
                perm = rng.permutation(len(wins))
                for i in range(0, len(wins), cfg.batch_size):
                    I = np.stack([wins[j] for j in perm[i:i + cfg.batch_size]])
                    zero_grads(params)
                    hs, rc = self.rnn.forward(xf[I])
                    out, hc = self.head.forward(hs)
                    diff = out[..., 0] - z[I]
                    dout = (2.0 * diff / diff.size)[..., None]
                    self.rnn.backward(self.head.backward(dout, hc), rc)
                    opt.step()
                    ep_mse += float((diff ** 2).mean()) * scale ** 2
                    nb += 1
            self.history["mse"].append(ep_mse / max(nb, 1))
        return self

    def predict(self, pts):
        if self.rnn is None:
            raise Unfitted("lstm baseline: fit before predict")
        xf = self._features(pts)
        n = len(pts)
        sums = np.zeros(n)
        counts = np.zeros(n)
        groups = group_windows_by_length(make_windows(pts, self.cfg.window))
        for _, wins in groups.items():
            I = np.stack(wins)
            hs, _ = self.rnn.forward(xf[I])
            out, _ = self.head.forward(hs)
            np.add.at(sums, I.ravel(), out[..., 0].ravel())
            np.add.at(counts, I.ravel(), 1.0)
        return self._denorm(sums / counts)


class GanBaseline:
    """The vanilla configuration of the main trainer: no attention, no
    diffusion noising, no instance normalization, no feature matching."""

    kind = "gan"

    VANILLA = dict(use_gdc=False, use_sd=False, use_norm=False,
                   fm_weight=0.0, adv_weight=1.0)

    def __init__(self, **kw):
        merged = {**self.VANILLA, **kw}
        for k, v in self.VANILLA.items():
            if merged[k] != v:
                raise InvalidConfig(f"vanilla GAN fixes {k}={v}")
        self.cfg = dan.TrainConfig(**merged)
        self.model = None
        self.history = None

    def fit(self, data, val_data=None):
        self.model, self.history = dan.train(data, self.cfg, val_data=val_data)
        return self

    def predict(self, pts):
        if self.model is None:
            raise Unfitted("gan baseline: fit before predict")
        return self.model.predict_table(pts)
