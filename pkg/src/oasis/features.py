"""Point-level feature construction shared by the imputation model and the
neural baselines.

Each drifter record becomes one feature row: calendar time (linear days
plus sin/cos of the daily phase), latitude, longitude, and the tide
covariate.  Coordinate/time columns are standardized with a global scaler
fitted on training data (stored in checkpoints); the tide and salinity
channels are handled by the reversible normalization layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrainingSet
from .tensorize import TrajectorySet

COORD_FEATURES = ("t_days", "sin_day", "cos_day", "lat", "lon")


@dataclass
class PointTable:
    """Flat arrays for every record carrying a salinity value, sorted by
    (trajectory, time)."""

    t: np.ndarray        # epoch seconds
    lat: np.ndarray
    lon: np.ndarray
    tide: np.ndarray     # NaN where the covariate is absent
    s: np.ndarray        # salinity (psu)
    traj: np.ndarray     # integer trajectory index into traj_ids
    traj_ids: list

    def __len__(self):
        return self.t.size

    @property
    def n_traj(self):
        return len(self.traj_ids)


def point_table(traj: TrajectorySet, tide_channel="tide") -> PointTable:
    """Flatten a trajectory set into per-point arrays.

    Records without salinity are dropped (they carry no training or
    evaluation signal).  Missing tide values are imputed with the
    trajectory mean tide, or 0.0 when a trajectory has none.
    """
    rows = []
    ids = list(traj.trajectory_ids)
    idx_of = {tid: k for k, tid in enumerate(ids)}
    for rec in traj.records:
        if rec.salinity is None:
            continue
        tide = rec.covariates.get(tide_channel, np.nan)
        rows.append((rec.t_seconds, rec.lat, rec.lon, tide, rec.salinity,
                     idx_of[rec.trajectory_id]))
    if not rows:
        raise EmptyTrainingSet("no records carry a salinity value")
    arr = np.array(rows, dtype=float)
    order = np.lexsort((arr[:, 0], arr[:, 5]))
    arr = arr[order]
    tide = arr[:, 3].copy()
    trajs = arr[:, 5].astype(int)
    for k in range(len(ids)):
        sel = trajs == k
        miss = sel & ~np.isfinite(tide)
        if miss.any():
            have = tide[sel & np.isfinite(tide)]
            tide[miss] = have.mean() if have.size else 0.0
    return PointTable(t=arr[:, 0], lat=arr[:, 1], lon=arr[:, 2], tide=tide,
                      s=arr[:, 4], traj=trajs, traj_ids=ids)


def coord_features(t_sec, lat, lon):
    """Raw coordinate/time feature matrix (n, 5), before scaling."""
    t_sec = np.asarray(t_sec, dtype=float)
    t_days = t_sec / 86400.0
    phase = 2.0 * np.pi * np.mod(t_days, 1.0)
    return np.column_stack([
        t_days,
        np.sin(phase),
        np.cos(phase),
        np.asarray(lat, dtype=float),
        np.asarray(lon, dtype=float),
    ])


@dataclass
class FeatureScaler:
    """Column-wise standardization fitted on training rows."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, rows):
        rows = np.asarray(rows, dtype=float)
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        std = np.where(std < 1e-9, 1.0, std)
        return cls(mean=mean, std=std)

    def transform(self, rows):
        return (np.asarray(rows, dtype=float) - self.mean) / self.std


def scaled_features(scaler: FeatureScaler, t_sec, lat, lon, tide=None,
                    tide_mu=0.0, tide_var=1.0, eps=1e-5):
    """Scaled coordinate rows, optionally with a standardized tide column."""
    rows = scaler.transform(coord_features(t_sec, lat, lon))
    if tide is not None:
        z = (np.asarray(tide, dtype=float) - tide_mu) / (np.sqrt(tide_var) + eps)
        rows = np.column_stack([rows, z])
    return rows


def trajectory_stats(values, traj, n_traj):
    """Per-trajectory population mean/variance arrays of one channel."""
    mu = np.zeros(n_traj)
    var = np.ones(n_traj)
    for k in range(n_traj):
        v = values[traj == k]
        v = v[np.isfinite(v)]
        if v.size:
            mu[k] = v.mean()
            var[k] = ((v - mu[k]) ** 2).mean()
    return mu, var


def make_windows(points: PointTable, window):
    """Index windows of consecutive points per trajectory.

    Every window has exactly ``window`` entries when a trajectory is long
    enough (the last window is shifted back to end on the final point, so
    tails overlap); shorter trajectories yield one window of their full
    length.  Returns a list of int index arrays.
    """
    out = []
    for k in range(points.n_traj):
        idx = np.flatnonzero(points.traj == k)
        n = idx.size
        if n == 0:
            continue
        if n <= window:
            out.append(idx)
            continue
        starts = list(range(0, n - window + 1, window))
        if starts[-1] != n - window:
            starts.append(n - window)
        for s0 in starts:
            out.append(idx[s0:s0 + window])
    return out


def group_windows_by_length(windows):
    """{length: [window, ...]} with lengths in sorted order."""
    groups = {}
    for w in windows:
        groups.setdefault(len(w), []).append(w)
    return {n: groups[n] for n in sorted(groups)}
