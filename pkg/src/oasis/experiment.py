"""Experiment orchestration: fit a model on the train split, select on
validation where the model supports it, and report test metrics.

Each run is identified by a hash of its full configuration; artifacts
(metrics, result row, checkpoint for the trainable model) land in a
directory named by that hash, so re-running an identical config
overwrites identical content.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import dan
from .baselines import make_baseline
from .errors import InvalidConfig, Unfitted
from .features import point_table
from .metrics import summarize
from .tensorize import (GridSpec, SyntheticConfig, TrajectorySet,
                        generate_synthetic, parse_trajectories,
                        split_trajectories, to_epoch_seconds)

MODEL_NAMES = ("oasis", "kriging", "gwr", "mlp", "lstm", "gan")


@dataclass
class ExperimentConfig:
    model: str = "oasis"
    dataset: str = "synthetic"      # "synthetic" or a trajectory-file path
    seed: int = 42
    use_tide: bool = True
    use_norm: bool = True
    use_gdc: bool = True
    use_sd: bool = True
    ratios: tuple = (0.7, 0.15, 0.15)
    out_dir: str = None
    train: dict = field(default_factory=dict)     # trainer overrides
    baseline: dict = field(default_factory=dict)  # baseline options
    synth: dict = field(default_factory=dict)     # synthetic-data overrides

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise InvalidConfig(
                f"unknown model {self.model!r}; choose from {MODEL_NAMES}")
        self.ratios = tuple(float(r) for r in self.ratios)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def load_dataset(cfg: ExperimentConfig) -> TrajectorySet:
    if cfg.dataset == "synthetic":
        synth = dict(cfg.synth)
        synth.setdefault("seed", cfg.seed)
        traj, _ = generate_synthetic(SyntheticConfig(**synth))
        return traj
    return parse_trajectories(cfg.dataset)


class _TrainedOasis:
    """Adapter giving the main model the baseline fit/predict shape."""

    kind = "oasis"

    def __init__(self, model: dan.DanModel, history):
        self.model = model
        self.history = history

    def predict(self, pts):
        return self.model.predict_table(pts)


def fit_model(cfg: ExperimentConfig, train_data, val_data=None):
    """Build and fit the configured model; returns the fitted object."""
    if cfg.model == "oasis":
        kw = dict(seed=cfg.seed, use_tide=cfg.use_tide, use_norm=cfg.use_norm,
                  use_gdc=cfg.use_gdc, use_sd=cfg.use_sd)
        kw.update(cfg.train)   # nested trainer overrides win
        model, history = dan.train(train_data, dan.TrainConfig(**kw),
                                   val_data=val_data)
        return _TrainedOasis(model, history)
    opts = dict(cfg.baseline)
    if cfg.model == "gan":
        opts.setdefault("seed", cfg.seed)
        opts.setdefault("use_tide", cfg.use_tide)
        opts.update({k: v for k, v in cfg.train.items()
                     if k not in ("use_gdc", "use_sd", "use_norm",
                                  "fm_weight", "adv_weight")})
        return make_baseline("gan", **opts).fit(train_data, val_data=val_data)
    if cfg.model in ("mlp", "lstm"):
        opts.setdefault("seed", cfg.seed)
        opts.setdefault("use_tide", cfg.use_tide)
        return make_baseline(cfg.model, **opts).fit(train_data)
    if cfg.model == "gwr":
        opts.setdefault("use_tide", cfg.use_tide)
    return make_baseline(cfg.model, **opts).fit(point_table(train_data))


def run_experiment(cfg: ExperimentConfig, dataset: TrajectorySet = None):
    """One (model, dataset) row plus artifacts.

    Returns {"row": metrics row dict, "run_dir": path or None,
    "model": fitted object}.  Deterministic for a fixed config.
    """
    traj = dataset if dataset is not None else load_dataset(cfg)
    split = split_trajectories(traj, ratios=cfg.ratios, seed=cfg.seed)
    train_set = traj.subset(split.train_ids)
    val_set = traj.subset(split.val_ids) if split.val_ids else None
    test_set = traj.subset(split.test_ids)

    fitted = fit_model(cfg, train_set, val_data=val_set)
    test_pts = point_table(test_set)
    pred = fitted.predict(test_pts)
    report = summarize(test_pts.s, pred)

    row = {"model": cfg.model, "dataset": cfg.dataset, "seed": cfg.seed,
           **report}
    run_dir = None
    if cfg.out_dir:
        run_dir = os.path.join(cfg.out_dir, cfg.digest())
        os.makedirs(run_dir, exist_ok=True)
        with open(os.path.join(run_dir, "metrics.json"), "w") as fh:
            json.dump({"config": cfg.to_dict(), "digest": cfg.digest(),
                       "row": row}, fh, indent=2, sort_keys=True)
        with open(os.path.join(run_dir, "result.csv"), "w") as fh:
            fh.write(ResultsTable([row]).to_csv())
        if isinstance(fitted, _TrainedOasis):
            dan.save_checkpoint(os.path.join(run_dir, "model.ckpt"),
                                fitted.model)
    return {"row": row, "run_dir": run_dir, "model": fitted}


@dataclass
class ResultsTable:
    rows: list

    COLUMNS = ("model", "dataset", "seed", "mae", "rmse", "mape", "n")

    def to_csv(self):
        lines = [",".join(self.COLUMNS)]
        for r in self.rows:
            lines.append(",".join(self._fmt(r.get(c)) for c in self.COLUMNS))
        return "\n".join(lines) + "\n"

    def to_text(self):
        widths = {c: max(len(c), *(len(self._fmt(r.get(c)))
                                   for r in self.rows)) if self.rows else len(c)
                  for c in self.COLUMNS}
        head = "  ".join(c.ljust(widths[c]) for c in self.COLUMNS)
        sep = "  ".join("-" * widths[c] for c in self.COLUMNS)
        body = ["  ".join(self._fmt(r.get(c)).ljust(widths[c])
                          for c in self.COLUMNS) for r in self.rows]
        return "\n".join([head, sep] + body) + "\n"

    @staticmethod
    def _fmt(v):
        if isinstance(v, float):
            return f"{v:.4f}"
        return "" if v is None else str(v)


def run_table(configs, dataset: TrajectorySet = None) -> ResultsTable:
    rows = [run_experiment(c, dataset=dataset)["row"] for c in configs]
    return ResultsTable(rows)


ABLATION_VARIANTS = (
    ("full", {}),
    ("no_norm", {"use_norm": False}),
    ("no_gdc", {"use_gdc": False}),
    ("no_sd", {"use_sd": False}),
)


def ablate(cfg: ExperimentConfig, dataset: TrajectorySet = None) -> ResultsTable:
    """Four rows: the full model and the three single-switch ablations."""
    if cfg.model != "oasis":
        raise InvalidConfig("ablation sweeps the main model only")
    rows = []
    for name, flags in ABLATION_VARIANTS:
        d = cfg.to_dict()
        d.update(flags)
        variant = ExperimentConfig.from_dict(d)
        row = run_experiment(variant, dataset=dataset)["row"]
        row = {**row, "model": f"oasis[{name}]"}
        rows.append(row)
    return ResultsTable(rows)


def emit_field_plot(model, grid: GridSpec, when, out_path, tide=None,
                    observations=None, cmap="viridis"):
    """Render the imputed salinity field over a grid at one timestamp.

    ``model`` needs predict_sequence (the trained imputer); ``when`` is a
    datetime or epoch seconds; ``tide`` is the tide height in meters for
    tide-aware models.  ``observations`` (a PointTable) are overlaid as
    circled markers sharing the color scale.  The legend endpoints equal
    the plotted data's min/max.  Output bytes are deterministic for
    identical inputs.
    """
    import matplotlib
    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    if model is None or not hasattr(model, "predict_sequence"):
        raise Unfitted("field plot needs a trained imputation model")
    t_sec = to_epoch_seconds(when) if hasattr(when, "tzinfo") else float(when)

    lat_c = np.array([grid.cell_center(u, 0)[0] for u in range(grid.U)])
    lon_c = np.array([grid.cell_center(0, v)[1] for v in range(grid.V)])
    glon, glat = np.meshgrid(lon_c, lat_c)
    flat_lat = glat.ravel()
    flat_lon = glon.ravel()
    tide_arr = None
    if tide is not None:
        tide_arr = np.full(flat_lat.size, float(tide))
    vals = model.predict_sequence(np.full(flat_lat.size, t_sec),
                                  flat_lat, flat_lon, tide_arr)
    field = vals.reshape(grid.U, grid.V)

    vmin, vmax = float(field.min()), float(field.max())
    if observations is not None and len(observations):
        vmin = min(vmin, float(observations.s.min()))
        vmax = max(vmax, float(observations.s.max()))

    fig, ax = plt.subplots(figsize=(7, 5))
    im = ax.imshow(field, origin="lower", cmap=cmap, vmin=vmin, vmax=vmax,
                   extent=(grid.lon_min, grid.lon_max,
                           grid.lat_min, grid.lat_max), aspect="auto")
    if observations is not None and len(observations):
        ax.scatter(observations.lon, observations.lat, c=observations.s,
                   cmap=cmap, vmin=vmin, vmax=vmax, s=28, edgecolors="black",
                   linewidths=0.6)
    cbar = fig.colorbar(im, ax=ax)
    cbar.set_ticks([vmin, 0.5 * (vmin + vmax), vmax])
    cbar.set_label("salinity (psu)")
    ax.set_xlabel("longitude")
    ax.set_ylabel("latitude")
    fig.savefig(out_path, dpi=110, metadata={"Software": "oasis"})
    plt.close(fig)
    return out_path
