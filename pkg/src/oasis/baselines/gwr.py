"""Geographically weighted regression.

Each query location gets its own weighted least-squares fit of

    value ~ 1 + lat + lon (+ tide)

with gaussian kernel weights w_i = exp(-d_i^2 / (2 b^2)).  Bandwidth is
either fixed (degrees) or selected by leave-one-out cross-validation over
a log-spaced grid.  Queries whose weighted design is rank deficient fall
back to the global OLS fit and are reported by index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidConfig, TooFewPoints, Unfitted
from .kriging import pairwise_distance

CV_GRID_SIZE = 10
CV_MAX_POINTS = 300     # LOO subsample cap keeps selection O(n * grid)


@dataclass
class GwrConfig:
    kernel: str = "gaussian"
    bandwidth: object = "cv"     # positive float (degrees) or "cv"
    use_tide: bool = False
    metric: str = "degrees"
    cv_seed: int = 0

    def __post_init__(self):
        if self.kernel != "gaussian":
            raise InvalidConfig(f"unsupported kernel {self.kernel!r}")
        if self.bandwidth != "cv":
            b = float(self.bandwidth)
            if not (b > 0):
                raise InvalidConfig("bandwidth must be positive or 'cv'")


@dataclass
class GwrResult:
    values: np.ndarray
    bandwidth: float
    fallback_queries: list = field(default_factory=list)


def _design(lat, lon, tide, use_tide):
    cols = [np.ones_like(lat), lat, lon]
    if use_tide:
        cols.append(tide)
    return np.column_stack(cols)


def _wls(X, y, w):
    """Weighted least squares via lstsq on the sqrt-weighted system.

    Returns (beta, full_rank).
    """
    sw = np.sqrt(w)[:, None]
    beta, _, rank, _ = np.linalg.lstsq(sw * X, np.sqrt(w) * y, rcond=None)
    return beta, rank == X.shape[1]


def _kernel_weights(d, bandwidth):
    return np.exp(-(d ** 2) / (2.0 * bandwidth ** 2))


def gwr_fit_predict(points, queries, cfg: GwrConfig = None) -> GwrResult:
    """Fit-and-predict in one pass (GWR keeps no reusable global state).

    ``points``/``queries`` are mappings or objects exposing lat, lon,
    tide (when cfg.use_tide) arrays; points additionally expose s.
    """
    cfg = cfg or GwrConfig()
    plat = np.asarray(points.lat, dtype=float)
    plon = np.asarray(points.lon, dtype=float)
    ptide = np.asarray(points.tide, dtype=float) if cfg.use_tide else None
    y = np.asarray(points.s, dtype=float)
    p = 3 + (1 if cfg.use_tide else 0)
    if y.size < p + 1:
        raise TooFewPoints(f"GWR needs at least {p + 1} points, got {y.size}")
    X = _design(plat, plon, ptide, cfg.use_tide)

    beta_global, ok = _wls(X, y, np.ones_like(y))
    bandwidth = (select_bandwidth(X, y, plat, plon, cfg)
                 if cfg.bandwidth == "cv" else float(cfg.bandwidth))

    qlat = np.atleast_1d(np.asarray(queries.lat, dtype=float))
    qlon = np.atleast_1d(np.asarray(queries.lon, dtype=float))
    qtide = (np.atleast_1d(np.asarray(queries.tide, dtype=float))
             if cfg.use_tide else None)
    Xq = _design(qlat, qlon, qtide, cfg.use_tide)

    d = pairwise_distance(qlat, qlon, plat, plon, metric=cfg.metric)
    out = np.empty(qlat.size)
    fallback = []
    for j in range(qlat.size):
        w = _kernel_weights(d[j], bandwidth)
        beta, full_rank = _wls(X, y, w)
        if not full_rank or not np.isfinite(beta).all():
            beta = beta_global
            fallback.append(j)
        out[j] = Xq[j] @ beta
    return GwrResult(values=out, bandwidth=bandwidth,
                     fallback_queries=fallback)


def select_bandwidth(X, y, lat, lon, cfg: GwrConfig):
    """Leave-one-out CV over a 10-point log grid of bandwidths.

    The grid spans the 5th-percentile to the maximum pairwise distance.
    LOO is evaluated on a fixed-size subsample when n is large.
    """
    n = y.size
    d = pairwise_distance(lat, lon, lat, lon, metric=cfg.metric)
    off = d[np.triu_indices(n, k=1)]
    off = off[off > 0]
    if off.size == 0:
        raise TooFewPoints("all points are collocated")
    lo = max(np.percentile(off, 5), 1e-6)
    hi = off.max()
    grid = np.logspace(np.log10(lo), np.log10(max(hi, lo * 1.001)),
                       CV_GRID_SIZE)

    idx = np.arange(n)
    if n > CV_MAX_POINTS:
        idx = np.sort(np.random.default_rng(cfg.cv_seed).choice(
            n, CV_MAX_POINTS, replace=False))

    best_b, best_err = grid[0], np.inf
    for b in grid:
        errs = np.empty(idx.size)
        for k, i in enumerate(idx):
            w = _kernel_weights(d[i], b)
            w[i] = 0.0
            beta, full_rank = _wls(X, y, w)
            if not full_rank or not np.isfinite(beta).all():
                errs[k] = np.inf
                continue
            errs[k] = (y[i] - X[i] @ beta) ** 2
        score = errs.mean()
        if score < best_err:
            best_err, best_b = score, b
    return float(best_b)


class GwrBaseline:
    """fit/predict wrapper; fit only captures the training table."""

    kind = "gwr"

    def __init__(self, bandwidth="cv", use_tide=False, metric="degrees"):
        self.cfg = GwrConfig(bandwidth=bandwidth, use_tide=use_tide,
                             metric=metric)
        self._train = None
        self.last_result = None

    def fit(self, pts):
        self._train = pts
        return self

    def predict(self, pts):
        if self._train is None:
            raise Unfitted("GWR baseline: fit before predict")
        self.last_result = gwr_fit_predict(self._train, pts, self.cfg)
        return self.last_result.values
