"""Diffusion-adversarial imputation network.

The generator maps per-point feature rows (scaled time/position plus the
tide covariate) to salinity in a normalized space and is trained against
a discriminator that sees diffusion-noised real and generated values at a
shared, randomly drawn noise step.  The generator loss is a reconstruction
term plus feature matching on the discriminator's penultimate layer; the
discriminator trains on the symmetric real/fake cross entropy.

Normalization follows the reversible-instance scheme: during training the
salinity target is standardized with per-trajectory statistics and a
learnable affine pair (gamma, beta); at prediction time the affine is
inverted against global training-set statistics, so outputs are always in
psu.  With ``use_norm=False`` the affine is frozen at identity and global
statistics are used everywhere (a plain fitted scaler).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import (CorruptCheckpoint, DivergedLoss, InvalidConfig,
                     MalformedInput, ShapeMismatch, VersionMismatch)
from .features import (COORD_FEATURES, FeatureScaler, PointTable,
                       coord_features, group_windows_by_length, make_windows,
                       point_table, trajectory_stats)
from .gdc import AttentionConfig, SelfAttentionBlock, add_pe, positional_encoding
from .nn import Adam, LeakyReLU, Linear, Param, ReLU, Sequential, sigmoid, zero_grads
from .scheduler import add_noise, make_schedule, noise_scale, sample_step
from .tensorize import TrajectorySet

_CKPT_MAGIC = b"OASIS-CKPT\n"
_CKPT_VERSION = 1


@dataclass
class TrainConfig:
    """Everything that determines a training run (besides the data)."""

    epochs: int = 40
    batch_size: int = 8          # windows per optimizer step
    window: int = 32             # points per attention window
    lr_g: float = 1e-3
    lr_d: float = 1e-3
    d_model: int = 64
    n_heads: int = 4
    fe_hidden: int = 64
    disc_hidden: int = 64
    disc_feature_dim: int = 32   # width of the feature-matching tap
    use_norm: bool = True        # reversible instance normalization
    use_gdc: bool = True         # attention over window context
    use_sd: bool = True          # diffusion noising before the critic
    use_tide: bool = True        # tide covariate as a generator input
    conditional_disc: bool = True
    noise_reals: bool = True     # noise the real branch at the same step
    fm_weight: float = 1.0
    adv_weight: float = 0.0      # optional non-saturating adversarial term
    T_diff: int = 50
    beta0: float = 1e-4
    betaT: float = 0.02
    eps: float = 1e-5
    seed: int = 42

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.window < 1:
            raise InvalidConfig("epochs, batch_size and window must be >= 1")
        if self.lr_g <= 0 or self.lr_d <= 0:
            raise InvalidConfig("learning rates must be positive")
        if self.fm_weight < 0 or self.adv_weight < 0:
            raise InvalidConfig("loss weights must be non-negative")
        AttentionConfig(d_model=self.d_model, n_heads=self.n_heads)

    @property
    def n_features(self):
        return len(COORD_FEATURES) + (1 if self.use_tide else 0)

    @property
    def feature_names(self):
        names = list(COORD_FEATURES)
        if self.use_tide:
            names.append("tide")
        return names

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


class Generator:
    """Feature extractor, optional attention block, and a scalar head.

    Output is in the normalized salinity space; the caller applies the
    inverse normalization.  The learnable affine pairs for the salinity
    and tide channels live here so one optimizer covers them.
    """

    def __init__(self, cfg: TrainConfig, rng):
        self.cfg = cfg
        self.tide_col = len(COORD_FEATURES) if cfg.use_tide else None
        self.fe = Sequential([
            Linear(cfg.n_features, cfg.fe_hidden, rng), ReLU(),
            Linear(cfg.fe_hidden, cfg.fe_hidden, rng), ReLU(),
            Linear(cfg.fe_hidden, cfg.d_model, rng), ReLU(),
        ])
        self.attn = None
        if cfg.use_gdc:
            self.attn = SelfAttentionBlock(
                AttentionConfig(d_model=cfg.d_model, n_heads=cfg.n_heads), rng)
        self.head = Linear(cfg.d_model, 1, rng)
        self.gamma_s = Param(np.asarray(1.0))
        self.beta_s = Param(np.asarray(0.0))
        self.gamma_tide = Param(np.asarray(1.0))
        self.beta_tide = Param(np.asarray(0.0))
        self._pe_cache = {}

    @property
    def params(self):
        ps = list(self.fe.params)
        if self.attn is not None:
            ps.extend(self.attn.param_list)
        ps.extend(self.head.params)
        if self.cfg.use_norm:
            ps.extend([self.gamma_s, self.beta_s])
            if self.tide_col is not None:
                ps.extend([self.gamma_tide, self.beta_tide])
        return ps

    def named_params(self):
        out = {}
        k = 0
        for layer in self.fe.layers:
            if isinstance(layer, Linear):
                out[f"g.fe{k}.W"] = layer.W
                out[f"g.fe{k}.b"] = layer.b
                k += 1
        if self.attn is not None:
            for name in SelfAttentionBlock.PARAM_NAMES:
                out[f"g.attn.{name}"] = self.attn.params[name]
        out["g.head.W"] = self.head.W
        out["g.head.b"] = self.head.b
        out["g.norm.gamma_s"] = self.gamma_s
        out["g.norm.beta_s"] = self.beta_s
        if self.tide_col is not None:
            out["g.norm.gamma_tide"] = self.gamma_tide
            out["g.norm.beta_tide"] = self.beta_tide
        return out

    def _pe(self, n):
        if n not in self._pe_cache:
            self._pe_cache[n] = positional_encoding(n, self.cfg.d_model)
        return self._pe_cache[n]

    def forward(self, xf):
        """xf: (B, N, F) feature windows -> (y, cache), y shape (B, N)."""
        xf = np.asarray(xf, dtype=float)
        if xf.ndim != 3 or xf.shape[-1] != self.cfg.n_features:
            raise ShapeMismatch(
                f"generator expects (B, N, {self.cfg.n_features}), got {xf.shape}")
        z = None
        x_in = xf
        if self.tide_col is not None and self.cfg.use_norm:
            z = xf[..., self.tide_col]
            x_in = xf.copy()
            x_in[..., self.tide_col] = (self.gamma_tide.value * z
                                        + self.beta_tide.value)
        h, fe_cache = self.fe.forward(x_in)
        if self.attn is not None:
            y1, attn_cache = self.attn.forward(add_pe(h, self._pe(h.shape[1])))
        else:
            y1, attn_cache = h, None
        out, head_cache = self.head.forward(y1)
        return out[..., 0], (z, fe_cache, attn_cache, head_cache)

    def backward(self, dy, cache):
        """dy: (B, N) gradient on the normalized output."""
        z, fe_cache, attn_cache, head_cache = cache
        d1 = self.head.backward(dy[..., None], head_cache)
        if self.attn is not None:
            d1, _ = self.attn.backward(d1, attn_cache)
        dxf = self.fe.backward(d1, fe_cache)
        if z is not None:
            col = dxf[..., self.tide_col]
            self.gamma_tide.grad += (col * z).sum()
            self.beta_tide.grad += col.sum()
        return dxf


class Discriminator:
    """Two hidden layers with a feature-matching tap before the logit."""

    def __init__(self, n_in, cfg: TrainConfig, rng):
        self.n_in = n_in
        self.l1 = Linear(n_in, cfg.disc_hidden, rng)
        self.a1 = LeakyReLU(0.2)
        self.l2 = Linear(cfg.disc_hidden, cfg.disc_feature_dim, rng)
        self.a2 = LeakyReLU(0.2)
        # zero logit layer: D starts undecided, p = 0.5 everywhere
        self.l3 = Linear(cfg.disc_feature_dim, 1, rng, zero_init=True)

    @property
    def params(self):
        return self.l1.params + self.l2.params + self.l3.params

    def named_params(self):
        out = {}
        for k, layer in enumerate((self.l1, self.l2, self.l3), start=1):
            out[f"d.l{k}.W"] = layer.W
            out[f"d.l{k}.b"] = layer.b
        return out

    def forward(self, x):
        """x: (n, n_in) -> (probs (n,), features (n, tap), cache)."""
        x = np.asarray(x, dtype=float)
        h1, c1 = self.l1.forward(x)
        a1, ca1 = self.a1.forward(h1)
        h2, c2 = self.l2.forward(a1)
        f, ca2 = self.a2.forward(h2)
        logit, c3 = self.l3.forward(f)
        return sigmoid(logit[:, 0]), f, (c1, ca1, c2, ca2, c3)

    def backward(self, dlogit, dtap, cache):
        """Accumulates parameter grads; returns the input gradient.

        dlogit: (n, 1) gradient on the pre-sigmoid output, or None.
        dtap:   (n, tap) gradient on the feature layer, or None.
        """
        c1, ca1, c2, ca2, c3 = cache
        df = None
        if dlogit is not None:
            df = self.l3.backward(dlogit, c3)
        if dtap is not None:
            df = dtap if df is None else df + dtap
        dh2 = self.a2.backward(df, ca2)
        da1 = self.l2.backward(dh2, c2)
        dh1 = self.a1.backward(da1, ca1)
        return self.l1.backward(dh1, c1)


# ---------------------------------------------------------------------------
# losses


def bce(probs, label, clip=1e-7):
    """Mean binary cross entropy of probabilities against a 0/1 label."""
    p = np.clip(np.asarray(probs, dtype=float), clip, 1.0 - clip)
    if label:
        return float(-np.log(p).mean())
    return float(-np.log(1.0 - p).mean())


def d_loss(real_probs, fake_probs):
    """Symmetric critic loss: 1/2 [BCE(fake, 0) + BCE(real, 1)]."""
    return 0.5 * (bce(fake_probs, 0) + bce(real_probs, 1))


def feature_distance(f_real, f_fake):
    """L1 distance between batch-mean features, averaged over channels."""
    f_real = np.atleast_2d(np.asarray(f_real, dtype=float))
    f_fake = np.atleast_2d(np.asarray(f_fake, dtype=float))
    if f_real.shape[1] != f_fake.shape[1]:
        raise ShapeMismatch(
            f"feature widths differ: {f_real.shape} vs {f_fake.shape}")
    gap = f_real.mean(axis=0) - f_fake.mean(axis=0)
    return float(np.abs(gap).mean())


def g_loss(s_true, s_hat, f_real, f_fake, fm_weight=1.0):
    """Reconstruction MSE plus feature matching."""
    s_true = np.asarray(s_true, dtype=float)
    s_hat = np.asarray(s_hat, dtype=float)
    if s_true.shape != s_hat.shape:
        raise ShapeMismatch(f"targets {s_true.shape} vs outputs {s_hat.shape}")
    mse = float(((s_true - s_hat) ** 2).mean())
    return mse + fm_weight * feature_distance(f_real, f_fake)


# ---------------------------------------------------------------------------
# model bundle


class DanModel:
    """A trained generator plus everything needed to run it on raw points."""

    def __init__(self, cfg: TrainConfig, gen: Generator, scaler: FeatureScaler,
                 stats: dict, region: dict, disc: Discriminator = None):
        self.cfg = cfg
        self.gen = gen
        self.scaler = scaler
        self.stats = dict(stats)
        self.region = dict(region)
        self.disc = disc

    # -- feature plumbing ---------------------------------------------------

    def _tide_z(self, tide):
        scale = np.sqrt(self.stats["tide_var"]) + self.cfg.eps
        return (np.asarray(tide, dtype=float) - self.stats["tide_mu"]) / scale

    def features(self, t_sec, lat, lon, tide=None):
        """Scaled feature rows (n, F) for raw point coordinates."""
        rows = self.scaler.transform(coord_features(t_sec, lat, lon))
        if self.cfg.use_tide:
            if tide is None:
                raise MalformedInput("this model requires a tide covariate")
            rows = np.column_stack([rows, self._tide_z(tide)])
        return rows

    def denorm(self, y):
        """Normalized output -> psu, using global training statistics."""
        scale = np.sqrt(self.stats["s_var"]) + self.cfg.eps
        gam = float(self.gen.gamma_s.value)
        bet = float(self.gen.beta_s.value)
        return (y - bet) / gam * scale + self.stats["s_mu"]

    # -- prediction ----------------------------------------------------------

    def predict_sequence(self, t_sec, lat, lon, tide=None):
        """Impute one consecutive sequence of points (psu array).

        The sequence is windowed exactly like training input; where
        windows overlap, per-point predictions are averaged.
        """
        xf = self.features(t_sec, lat, lon, tide)
        return self._predict_rows(xf, np.zeros(xf.shape[0], dtype=int))

    def predict_table(self, pts: PointTable):
        """Impute every row of a point table (psu array, row order kept)."""
        xf = self.features(pts.t, pts.lat, pts.lon,
                           pts.tide if self.cfg.use_tide else None)
        return self._predict_rows(xf, pts.traj)

    def predict_single(self, t_sec, lat, lon, tide=None):
        tide_arg = None if tide is None else [tide]
        return float(self.predict_sequence([t_sec], [lat], [lon], tide_arg)[0])

    def _predict_rows(self, xf, traj):
        n = xf.shape[0]
        pseudo = PointTable(t=np.zeros(n), lat=np.zeros(n), lon=np.zeros(n),
                            tide=np.zeros(n), s=np.zeros(n), traj=traj,
                            traj_ids=list(range(int(traj.max()) + 1 if n else 0)))
        windows = make_windows(pseudo, self.cfg.window)
        sums = np.zeros(n)
        counts = np.zeros(n)
        for _, wins in group_windows_by_length(windows).items():
            idx = np.stack(wins)
            y, _ = self.gen.forward(xf[idx])
            np.add.at(sums, idx.ravel(), y.ravel())
            np.add.at(counts, idx.ravel(), 1.0)
        return self.denorm(sums / counts)


def generator_forward(model: DanModel, xf):
    """Run feature windows (B, N, F) through the generator; returns psu."""
    y, _ = model.gen.forward(xf)
    return model.denorm(y)


def discriminator_forward(disc: Discriminator, x):
    """Returns (probabilities, feature-tap activations)."""
    p, f, _ = disc.forward(x)
    return p, f


# ---------------------------------------------------------------------------
# training


def _point_input(data):
    if isinstance(data, PointTable):
        return data
    if isinstance(data, TrajectorySet):
        return point_table(data)
    raise MalformedInput(f"cannot train on {type(data).__name__}")


def _region_of(pts: PointTable):
    return {
        "lat_min": float(pts.lat.min()), "lat_max": float(pts.lat.max()),
        "lon_min": float(pts.lon.min()), "lon_max": float(pts.lon.max()),
        "t_min": float(pts.t.min()), "t_max": float(pts.t.max()),
        "n_train": int(len(pts)),
    }


def _iter_batches(groups, rng, batch_size):
    """Shuffled (B, N) index matrices; batches never mix window lengths."""
    batches = []
    for _, wins in groups.items():
        perm = rng.permutation(len(wins))
        for i in range(0, len(wins), batch_size):
            chunk = [wins[j] for j in perm[i:i + batch_size]]
            batches.append(np.stack(chunk))
    return batches


def train(train_data, cfg: TrainConfig = None, val_data=None, callback=None):
    """Fit the model; returns (DanModel, history dict of per-epoch lists).

    ``train_data``/``val_data`` are TrajectorySet or PointTable.  With a
    validation set the returned generator is the epoch snapshot with the
    best validation MAE; otherwise it is the final epoch.  Histories and
    parameters are bit-reproducible for a fixed config and seed.
    """
    cfg = cfg or TrainConfig()
    pts = _point_input(train_data)
    val_pts = None
    if val_data is not None and not (
            isinstance(val_data, TrajectorySet) and not val_data.records):
        val_pts = _point_input(val_data)

    rng = np.random.default_rng(cfg.seed)
    gen = Generator(cfg, rng)
    disc = Discriminator(1 + (cfg.n_features if cfg.conditional_disc else 0),
                         cfg, rng)
    sched = make_schedule(cfg.T_diff, cfg.beta0, cfg.betaT)

    # global stats always; per-trajectory salinity stats when normalizing
    scaler = FeatureScaler.fit(coord_features(pts.t, pts.lat, pts.lon))
    stats = {
        "s_mu": float(pts.s.mean()),
        "s_var": float(pts.s.var()),
        "tide_mu": float(pts.tide.mean()),
        "tide_var": float(pts.tide.var()),
    }
    model = DanModel(cfg, gen, scaler, stats, _region_of(pts), disc=disc)

    xf_all = model.features(pts.t, pts.lat, pts.lon,
                            pts.tide if cfg.use_tide else None)
    if cfg.use_norm:
        mu_k, var_k = trajectory_stats(pts.s, pts.traj, pts.n_traj)
        mu_pt = mu_k[pts.traj]
        sc_pt = np.sqrt(var_k[pts.traj]) + cfg.eps
    else:
        mu_pt = np.full(len(pts), stats["s_mu"])
        sc_pt = np.full(len(pts), np.sqrt(stats["s_var"]) + cfg.eps)
    s_all = pts.s

    groups = group_windows_by_length(make_windows(pts, cfg.window))
    opt_g = Adam(gen.params, lr=cfg.lr_g)
    opt_d = Adam(disc.params, lr=cfg.lr_d)

    history = {"d_loss": [], "g_loss": [], "mse": [], "fm": []}
    if val_pts is not None:
        history["val_mae"] = []
    best = None

    for epoch in range(cfg.epochs):
        ep = {"d_loss": 0.0, "g_loss": 0.0, "mse": 0.0, "fm": 0.0}
        batches = _iter_batches(groups, rng, cfg.batch_size)
        for I in batches:
            gam = float(gen.gamma_s.value)
            bet = float(gen.beta_s.value)
            xf = xf_all[I]
            s = s_all[I]
            mu = mu_pt[I]
            sc = sc_pt[I]

            y, gcache = gen.forward(xf)
            s_hat = (y - bet) / gam * sc + mu
            s_norm = gam * (s - mu) / sc + bet   # treated as data below

            yf = y.reshape(-1)
            n = yf.size
            cond = xf.reshape(n, -1)

            if cfg.use_sd:
                t_step = sample_step(rng, cfg.T_diff)
                if cfg.noise_reals:
                    real_in = add_noise(s_norm.reshape(-1), t_step,
                                        rng.standard_normal(n), sched)
                else:
                    real_in = s_norm.reshape(-1)
                fake_in = add_noise(yf, t_step, rng.standard_normal(n), sched)
                gscale = noise_scale(t_step, sched)
            else:
                real_in, fake_in, gscale = s_norm.reshape(-1), yf, 1.0

            if cfg.conditional_disc:
                x_real = np.column_stack([real_in, cond])
                x_fake = np.column_stack([fake_in, cond])
            else:
                x_real = real_in[:, None]
                x_fake = fake_in[:, None]

            # critic step
            zero_grads(disc.params)
            p_r, f_r, c_r = disc.forward(x_real)
            p_f, f_f, c_f = disc.forward(x_fake)
            loss_d = d_loss(p_r, p_f)
            disc.backward(((p_r - 1.0) / (2.0 * n))[:, None], None, c_r)
            disc.backward((p_f / (2.0 * n))[:, None], None, c_f)
            opt_d.step()

            # generator step against the updated critic
            zero_grads(gen.params)
            zero_grads(disc.params)
            p_f2, f_f2, c_f2 = disc.forward(x_fake)
            _, f_r2, _ = disc.forward(x_real)
            diff = s_hat - s
            mse = float((diff ** 2).mean())
            fm = feature_distance(f_r2, f_f2)
            loss_g = mse + cfg.fm_weight * fm
            if cfg.adv_weight:
                loss_g += cfg.adv_weight * bce(p_f2, 1)

            dshat = 2.0 * diff / n
            dy = dshat * sc / gam
            if cfg.use_norm:
                gen.gamma_s.grad += np.sum(dshat * (-(y - bet) / gam ** 2) * sc)
                gen.beta_s.grad += np.sum(dshat * (-sc / gam))

            gap = f_r2.mean(axis=0) - f_f2.mean(axis=0)
            dtap = None
            if cfg.fm_weight:
                dtap = np.broadcast_to(
                    -np.sign(gap) * (cfg.fm_weight / (gap.size * n)),
                    f_f2.shape)
            dlogit = None
            if cfg.adv_weight:
                dlogit = (cfg.adv_weight * (p_f2 - 1.0) / n)[:, None]
            if dtap is not None or dlogit is not None:
                dx_fake = disc.backward(dlogit, dtap, c_f2)
                dy = dy + (dx_fake[:, 0] * gscale).reshape(y.shape)
            gen.backward(dy, gcache)
            opt_g.step()

            if not (np.isfinite(loss_d) and np.isfinite(loss_g)):
                raise DivergedLoss(
                    f"non-finite loss at epoch {epoch}: d={loss_d} g={loss_g}")
            ep["d_loss"] += loss_d
            ep["g_loss"] += loss_g
            ep["mse"] += mse
            ep["fm"] += fm

        nb = max(len(batches), 1)
        for k in ep:
            history[k].append(ep[k] / nb)
        if val_pts is not None:
            pred = model.predict_table(val_pts)
            val_mae = float(np.abs(pred - val_pts.s).mean())
            history["val_mae"].append(val_mae)
            if best is None or val_mae < best[0]:
                snap = {k: p.value.copy()
                        for k, p in {**gen.named_params(),
                                     **disc.named_params()}.items()}
                best = (val_mae, snap)
        if callback is not None:
            callback(epoch, {k: history[k][-1] for k in history if history[k]})

    if best is not None:
        named = {**gen.named_params(), **disc.named_params()}
        for k, v in best[1].items():
            named[k].value[...] = v
    return model, history


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, model: DanModel, include_disc=True):
    """Serialize config, stats, scaler and weights to one binary file."""
    named = dict(model.gen.named_params())
    if include_disc and model.disc is not None:
        named.update(model.disc.named_params())
    arrays = {k: np.asarray(p.value, dtype=float) for k, p in named.items()}
    arrays["scaler.mean"] = np.asarray(model.scaler.mean, dtype=float)
    arrays["scaler.std"] = np.asarray(model.scaler.std, dtype=float)

    header = {
        "format": "oasis-checkpoint",
        "config": model.cfg.to_dict(),
        "config_digest": model.cfg.digest(),
        "feature_names": model.cfg.feature_names,
        "stats": model.stats,
        "region": model.region,
        "has_discriminator": bool(include_disc and model.disc is not None),
        "arrays": [{"name": k, "shape": list(arrays[k].shape)}
                   for k in arrays],
    }
    blob = json.dumps(header).encode()
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(np.uint32(_CKPT_VERSION).tobytes())
        fh.write(np.uint64(len(blob)).tobytes())
        fh.write(blob)
        for k in arrays:
            fh.write(np.ascontiguousarray(arrays[k]).tobytes())


def load_checkpoint(path) -> DanModel:
    """Rebuild a model from :func:`save_checkpoint` output."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(_CKPT_MAGIC):
        raise CorruptCheckpoint("bad magic; not a checkpoint file")
    off = len(_CKPT_MAGIC)
    try:
        version = int(np.frombuffer(raw, np.uint32, 1, off)[0])
        off += 4
        hlen = int(np.frombuffer(raw, np.uint64, 1, off)[0])
        off += 8
        header = json.loads(raw[off:off + hlen].decode())
        off += hlen
    except (ValueError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"unreadable header: {exc}") from exc
    if version != _CKPT_VERSION:
        raise VersionMismatch(
            f"checkpoint version {version}, this build reads {_CKPT_VERSION}")
    if header.get("format") != "oasis-checkpoint":
        raise CorruptCheckpoint("header is not a checkpoint header")

    arrays = {}
    for entry in header["arrays"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        end = off + 8 * count
        if end > len(raw):
            raise CorruptCheckpoint(f"array {entry['name']} is truncated")
        arrays[entry["name"]] = np.frombuffer(
            raw, np.float64, count, off).reshape(shape).copy()
        off = end

    cfg = TrainConfig.from_dict(header["config"])
    rng = np.random.default_rng(0)
    gen = Generator(cfg, rng)
    disc = None
    named = dict(gen.named_params())
    if header.get("has_discriminator"):
        disc = Discriminator(
            1 + (cfg.n_features if cfg.conditional_disc else 0), cfg, rng)
        named.update(disc.named_params())
    for k, p in named.items():
        if k not in arrays:
            raise CorruptCheckpoint(f"missing weight {k}")
        if arrays[k].shape != p.value.shape:
            raise CorruptCheckpoint(
                f"weight {k}: shape {arrays[k].shape}, expected {p.value.shape}")
        p.value = arrays[k]
    for k in ("scaler.mean", "scaler.std"):
        if k not in arrays:
            raise CorruptCheckpoint(f"missing array {k}")
    scaler = FeatureScaler(mean=arrays["scaler.mean"], std=arrays["scaler.std"])
    return DanModel(cfg, gen, scaler, header["stats"], header["region"],
                    disc=disc)
