"""Drifter trajectory ingestion and gridding.

Raw drifter records (time, lat, lon, covariates, salinity) are parsed from
delimited text, deduplicated, and aggregated onto a regular lat/lon/time
grid, producing a partially observed 4D value tensor with a binary mask.
Trajectory-level train/val/test splits and a synthetic trajectory generator
for desk-scale experiments live here as well.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import (
    DegenerateGrid,
    EmptyInput,
    InvalidConfig,
    MalformedInput,
    TooFewTrajectories,
)

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

# Principal semidiurnal constituent, hours.
SEMIDIURNAL_PERIOD_H = 12.4206

_TENSOR_MAGIC = b"OASIS-TENSOR\n"
_TENSOR_VERSION = 1


def parse_timestamp(text):
    """Parse an ISO-8601 UTC timestamp; returns an aware datetime."""
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def to_epoch_seconds(dt: datetime) -> float:
    return (dt - EPOCH).total_seconds()


def from_epoch_seconds(sec: float) -> datetime:
    return datetime.fromtimestamp(sec, tz=timezone.utc)


@dataclass
class DrifterRecord:
    """One drifter observation: position, time, salinity and covariates."""

    trajectory_id: str
    timestamp: datetime
    lat: float
    lon: float
    salinity: float | None = None
    covariates: dict = field(default_factory=dict)

    @property
    def t_seconds(self) -> float:
        return to_epoch_seconds(self.timestamp)


@dataclass
class TrajectorySet:
    """Records grouped by trajectory, with a stable trajectory-id order."""

    records: list
    trajectory_ids: list
    diagnostics: list = field(default_factory=list)

    def by_trajectory(self, tid):
        recs = [r for r in self.records if r.trajectory_id == tid]
        recs.sort(key=lambda r: r.timestamp)
        return recs

    def subset(self, ids) -> "TrajectorySet":
        keep = set(ids)
        recs = [r for r in self.records if r.trajectory_id in keep]
        order = [t for t in self.trajectory_ids if t in keep]
        return TrajectorySet(records=recs, trajectory_ids=order)

    def __len__(self):
        return len(self.records)


@dataclass
class GridSpec:
    """Regular lat/lon/time grid over the study region.

    Cell (u, v) covers the half-open box
    ``[lat_min + u*dlat, lat_min + (u+1)*dlat) x [lon_min + v*dlon, ...)``;
    time bin t covers ``[origin + t*step, origin + (t+1)*step)``.  Points on
    the closed max edge of any axis fall outside the grid.
    """

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float
    U: int
    V: int
    time_origin: datetime
    time_step: float  # seconds
    T_data: int

    def __post_init__(self):
        if self.lat_min >= self.lat_max or self.lon_min >= self.lon_max:
            raise DegenerateGrid("lat/lon bounds must be strictly increasing")
        if self.U <= 0 or self.V <= 0 or self.T_data <= 0:
            raise DegenerateGrid("U, V and T_data must be positive")
        if self.time_step <= 0:
            raise DegenerateGrid("time_step must be positive")

    @property
    def dlat(self):
        return (self.lat_max - self.lat_min) / self.U

    @property
    def dlon(self):
        return (self.lon_max - self.lon_min) / self.V

    def cell_index(self, lat, lon):
        """(u, v) of the cell containing (lat, lon), or None if outside."""
        u = math.floor((lat - self.lat_min) / self.dlat)
        v = math.floor((lon - self.lon_min) / self.dlon)
        if 0 <= u < self.U and 0 <= v < self.V:
            return u, v
        return None

    def time_index(self, ts: datetime):
        """Time bin of ts, or None if outside [origin, origin + T*step)."""
        t = math.floor((to_epoch_seconds(ts) - to_epoch_seconds(self.time_origin)) / self.time_step)
        if 0 <= t < self.T_data:
            return int(t)
        return None

    def cell_center(self, u, v):
        return (self.lat_min + (u + 0.5) * self.dlat,
                self.lon_min + (v + 0.5) * self.dlon)

    def to_dict(self):
        return {
            "lat_min": self.lat_min, "lat_max": self.lat_max,
            "lon_min": self.lon_min, "lon_max": self.lon_max,
            "U": self.U, "V": self.V,
            "time_origin": self.time_origin.isoformat(),
            "time_step": self.time_step, "T_data": self.T_data,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["time_origin"] = parse_timestamp(d["time_origin"])
        return cls(**d)


@dataclass
class ObservationTensor:
    """Gridded observations: X holds NaN where nothing was observed, and the
    mask M is 1 exactly where X is a finite observed value."""

    X: np.ndarray  # (T, U, V, D) float64, NaN = missing
    M: np.ndarray  # (T, U, V, D) uint8
    channel_names: list

    def __post_init__(self):
        if self.X.shape != self.M.shape:
            raise DegenerateGrid("X and M shapes differ")
        if self.X.shape[-1] != len(self.channel_names):
            raise DegenerateGrid("channel count mismatch")

    @property
    def shape(self):
        return self.X.shape


@dataclass
class SplitAssignment:
    """Disjoint trajectory-id lists covering the full id set."""

    train_ids: list
    val_ids: list
    test_ids: list
    seed: int


def _map_columns(header, schema):
    """Resolve schema field -> column index; returns (core_idx, covariate_idx)."""
    col_of = {name.strip(): i for i, name in enumerate(header)}
    core = {}
    for fld in ("trajectory_id", "timestamp", "lat", "lon", "salinity"):
        col = schema.get(fld, fld)
        if col in col_of:
            core[fld] = col_of[col]
    required = ("trajectory_id", "timestamp", "lat", "lon")
    missing = [f for f in required if f not in core]
    if missing:
        raise MalformedInput(f"header lacks mappable columns for: {', '.join(missing)}")
    covariates = schema.get("covariates")
    if covariates is None:
        used = set(core.values())
        cov_idx = {name: i for name, i in col_of.items() if i not in used}
    else:
        cov_idx = {}
        for name, col in covariates.items():
            if col not in col_of:
                raise MalformedInput(f"covariate column {col!r} not in header")
            cov_idx[name] = col_of[col]
    return core, cov_idx


def parse_trajectories(source, schema=None, delimiter=",") -> TrajectorySet:
    """Parse delimited drifter records into a :class:`TrajectorySet`.

    Parameters
    ----------
    source : bytes, str, or text file object
        Delimited table with a header row.
    schema : dict, optional
        Maps field names (``trajectory_id``, ``timestamp``, ``lat``, ``lon``,
        ``salinity``) to column names, plus optionally ``covariates``:
        a dict of covariate name -> column name.  Unmapped extra columns
        become covariates by their header name.

    Rows with unparseable timestamps or out-of-range coordinates are
    skipped and reported in ``TrajectorySet.diagnostics`` with their
    1-based data row index.  Duplicate (trajectory_id, timestamp) rows are
    collapsed to the mean of their salinity and covariate values.
    """
    schema = schema or {}
    if isinstance(source, bytes):
        source = io.StringIO(source.decode("utf-8"))
    elif isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source, delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedInput("empty input: no header row")
    core, cov_idx = _map_columns(header, schema)

    diagnostics = []
    by_key = {}       # (tid, timestamp) -> list of (salinity, covariates)
    order = []        # insertion order of keys
    id_order = []     # first-seen order of trajectory ids
    seen_ids = set()

    for rownum, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            tid = row[core["trajectory_id"]].strip()
            ts = parse_timestamp(row[core["timestamp"]])
            lat = float(row[core["lat"]])
            lon = float(row[core["lon"]])
        except (ValueError, IndexError) as exc:
            diagnostics.append(f"row {rownum}: unparseable record ({exc})")
            continue
        if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
            diagnostics.append(f"row {rownum}: coordinates out of range (lat={lat}, lon={lon})")
            continue
        salinity = None
        if "salinity" in core and core["salinity"] < len(row):
            raw = row[core["salinity"]].strip()
            if raw:
                try:
                    salinity = float(raw)
                except ValueError:
                    diagnostics.append(f"row {rownum}: bad salinity {raw!r}")
                    continue
                if not math.isfinite(salinity) or salinity < 0:
                    diagnostics.append(f"row {rownum}: salinity {salinity} not finite and >= 0")
                    continue
        covs = {}
        for name, i in cov_idx.items():
            if i < len(row) and row[i].strip():
                try:
                    covs[name] = float(row[i])
                except ValueError:
                    pass  # non-numeric extras are not covariates
        key = (tid, ts)
        if key not in by_key:
            by_key[key] = []
            order.append(key)
        by_key[key].append((lat, lon, salinity, covs))
        if tid not in seen_ids:
            seen_ids.add(tid)
            id_order.append(tid)

    records = []
    for key in order:
        tid, ts = key
        entries = by_key[key]
        lat = float(np.mean([e[0] for e in entries]))
        lon = float(np.mean([e[1] for e in entries]))
        sals = [e[2] for e in entries if e[2] is not None]
        salinity = float(np.mean(sals)) if sals else None
        covs = {}
        all_names = {n for e in entries for n in e[3]}
        for n in sorted(all_names):
            vals = [e[3][n] for e in entries if n in e[3]]
            covs[n] = float(np.mean(vals))
        records.append(DrifterRecord(tid, ts, lat, lon, salinity, covs))

    if not records:
        raise EmptyInput("no valid rows after parsing")
    return TrajectorySet(records=records, trajectory_ids=id_order, diagnostics=diagnostics)


def rasterize(traj: TrajectorySet, grid: GridSpec, channels=("salinity",)):
    """Aggregate records onto the grid by arithmetic mean per cell.

    Returns ``(ObservationTensor, skipped)`` where ``skipped`` counts
    records falling outside the grid bounds or time range.
    """
    channels = list(channels)
    D = len(channels)
    sums = np.zeros((grid.T_data, grid.U, grid.V, D))
    counts = np.zeros((grid.T_data, grid.U, grid.V, D), dtype=np.int64)
    skipped = 0
    for rec in traj.records:
        cell = grid.cell_index(rec.lat, rec.lon)
        tbin = grid.time_index(rec.timestamp)
        if cell is None or tbin is None:
            skipped += 1
            continue
        u, v = cell
        for d, name in enumerate(channels):
            if name == "salinity":
                val = rec.salinity
            else:
                val = rec.covariates.get(name)
            if val is None:
                continue
            sums[tbin, u, v, d] += val
            counts[tbin, u, v, d] += 1
    X = np.full(sums.shape, np.nan)
    M = (counts > 0).astype(np.uint8)
    nz = counts > 0
    X[nz] = sums[nz] / counts[nz]
    return ObservationTensor(X=X, M=M, channel_names=channels), skipped


def split_trajectories(traj: TrajectorySet, ratios=(0.7, 0.15, 0.15), seed=42) -> SplitAssignment:
    """Shuffle trajectory ids with a seeded PRNG and slice by the ratios.

    First ``floor(r_train*K)`` ids go to train, the next ``floor(r_val*K)``
    to val, and the remainder to test.  Deterministic for a fixed seed.
    """
    ids = list(traj.trajectory_ids)
    K = len(ids)
    if K < 3:
        raise TooFewTrajectories(f"need at least 3 trajectories, got {K}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(K)
    shuffled = [ids[i] for i in perm]
    n_train = int(math.floor(ratios[0] * K))
    n_val = int(math.floor(ratios[1] * K))
    return SplitAssignment(
        train_ids=shuffled[:n_train],
        val_ids=shuffled[n_train:n_train + n_val],
        test_ids=shuffled[n_train + n_val:],
        seed=seed,
    )


@dataclass
class SyntheticConfig:
    """Closed-form salinity field sampled along random-walk trajectories.

    The field is ``S*(t, lat, lon) = c0 + lon_gradient*(lon - lon_min)
    + tide_coupling*sin(omega*t)`` with ``omega = 2*pi/tide_period_h`` in
    rad/hour, t measured in hours from ``time_origin``.  Each record also
    carries a ``tide`` covariate ``tide_height_amp*sin(omega*t)`` (meters),
    so salinity is linear in the covariate.  ``traj_offset_sigma`` adds an
    optional per-trajectory salinity bias (sensor drift stand-in).
    """

    lat_min: float = 27.40
    lat_max: float = 27.55
    lon_min: float = -80.40
    lon_max: float = -80.20
    n_trajectories: int = 10
    steps: int = 100
    time_origin: datetime = field(default_factory=lambda: datetime(2016, 6, 16, tzinfo=timezone.utc))
    time_step: float = 300.0       # seconds between samples along a walk
    noise_sigma: float = 0.1       # psu
    c0: float = 35.0
    lon_gradient: float = 20.0     # psu per degree lon
    tide_coupling: float = 1.5     # psu
    tide_period_h: float = SEMIDIURNAL_PERIOD_H
    tide_height_amp: float = 0.6   # meters
    walk_step: float = 0.002       # degrees per step
    traj_offset_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_trajectories <= 0 or self.steps <= 0:
            raise InvalidConfig("n_trajectories and steps must be positive")
        if self.noise_sigma < 0 or self.time_step <= 0:
            raise InvalidConfig("noise_sigma must be >= 0 and time_step > 0")
        if self.lat_min >= self.lat_max or self.lon_min >= self.lon_max:
            raise InvalidConfig("region bounds must be strictly increasing")

    @property
    def omega(self):
        """Tidal angular frequency, rad/hour."""
        return 2.0 * math.pi / self.tide_period_h

    def field_at(self, t_seconds, lat, lon):
        """Noise-free salinity S* at epoch time / position (vectorizable)."""
        t_h = (np.asarray(t_seconds) - to_epoch_seconds(self.time_origin)) / 3600.0
        return (self.c0
                + self.lon_gradient * (np.asarray(lon) - self.lon_min)
                + self.tide_coupling * np.sin(self.omega * t_h))

    def tide_at(self, t_seconds):
        """Tide covariate (meters) at epoch time."""
        t_h = (np.asarray(t_seconds) - to_epoch_seconds(self.time_origin)) / 3600.0
        return self.tide_height_amp * np.sin(self.omega * t_h)


def generate_synthetic(config: SyntheticConfig):
    """Sample drifter trajectories from the synthetic field.

    Returns ``(TrajectorySet, oracle)`` where ``oracle(t_seconds, lat, lon)``
    evaluates the noise-free field for error measurement.
    """
    rng = np.random.default_rng(config.seed)
    t0 = to_epoch_seconds(config.time_origin)
    records = []
    ids = []
    for k in range(config.n_trajectories):
        tid = f"synth-{k:03d}"
        ids.append(tid)
        lat = rng.uniform(config.lat_min, config.lat_max)
        lon = rng.uniform(config.lon_min, config.lon_max)
        offset = rng.normal(0.0, config.traj_offset_sigma) if config.traj_offset_sigma > 0 else 0.0
        # Stagger launch times so trajectories cover different tide phases.
        start = t0 + k * config.time_step * max(1, config.steps // config.n_trajectories)
        for i in range(config.steps):
            t_sec = start + i * config.time_step
            s = float(config.field_at(t_sec, lat, lon)) + offset
            if config.noise_sigma > 0:
                s += rng.normal(0.0, config.noise_sigma)
            records.append(DrifterRecord(
                trajectory_id=tid,
                timestamp=from_epoch_seconds(t_sec),
                lat=float(lat),
                lon=float(lon),
                salinity=max(s, 0.0),
                covariates={"tide": float(config.tide_at(t_sec))},
            ))
            lat = min(max(lat + rng.normal(0.0, config.walk_step), config.lat_min), config.lat_max)
            lon = min(max(lon + rng.normal(0.0, config.walk_step), config.lon_min), config.lon_max)
    traj = TrajectorySet(records=records, trajectory_ids=ids)
    return traj, config.field_at


def write_trajectories(path, traj: TrajectorySet):
    """Write records as delimited text readable by :func:`parse_trajectories`.

    Floats use repr precision, so a write/parse round trip preserves
    values exactly.
    """
    cov_names = sorted({n for r in traj.records for n in r.covariates})
    with open(path, "w", newline="") as f:
        f.write(",".join(["trajectory_id", "timestamp", "lat", "lon",
                          "salinity"] + cov_names) + "\n")
        for r in traj.records:
            ts = r.timestamp.isoformat().replace("+00:00", "Z")
            cells = [r.trajectory_id, ts, repr(r.lat), repr(r.lon),
                     "" if r.salinity is None else repr(r.salinity)]
            for n in cov_names:
                v = r.covariates.get(n)
                cells.append("" if v is None else repr(v))
            f.write(",".join(cells) + "\n")


def tensor_to_trajectories(tensor: ObservationTensor, grid: GridSpec,
                           salinity_channel="salinity") -> TrajectorySet:
    """View each grid cell's observed time series as a pseudo-trajectory.

    Records sit at cell centers and time-bin centers; channels other
    than salinity become covariates where observed.
    """
    if salinity_channel not in tensor.channel_names:
        raise MalformedInput(f"tensor lacks channel {salinity_channel!r}")
    d_sal = tensor.channel_names.index(salinity_channel)
    t0 = to_epoch_seconds(grid.time_origin)
    records = []
    ids = []
    for u in range(grid.U):
        for v in range(grid.V):
            cell_ts = np.flatnonzero(tensor.M[:, u, v, d_sal] == 1)
            if cell_ts.size == 0:
                continue
            tid = f"cell-{u}-{v}"
            ids.append(tid)
            lat, lon = grid.cell_center(u, v)
            for t in cell_ts:
                covs = {}
                for d, name in enumerate(tensor.channel_names):
                    if d != d_sal and tensor.M[t, u, v, d] == 1:
                        covs[name] = float(tensor.X[t, u, v, d])
                records.append(DrifterRecord(
                    trajectory_id=tid,
                    timestamp=from_epoch_seconds(
                        t0 + (float(t) + 0.5) * grid.time_step),
                    lat=lat, lon=lon,
                    salinity=float(tensor.X[t, u, v, d_sal]),
                    covariates=covs))
    if not records:
        raise EmptyInput("tensor holds no observed salinity cells")
    return TrajectorySet(records=records, trajectory_ids=ids)


# --- tensor container -------------------------------------------------------

def save_tensor(path, tensor: ObservationTensor, grid: GridSpec):
    """Write the versioned binary tensor container.

    Layout: magic, u32 version, u64 header length, JSON header (shape,
    channels, grid), X as row-major float64, M as uint8.
    """
    header = json.dumps({
        "shape": list(tensor.shape),
        "channel_names": tensor.channel_names,
        "grid": grid.to_dict(),
    }).encode("utf-8")
    with open(path, "wb") as f:
        f.write(_TENSOR_MAGIC)
        f.write(struct.pack("<I", _TENSOR_VERSION))
        f.write(struct.pack("<Q", len(header)))
        f.write(header)
        f.write(np.ascontiguousarray(tensor.X, dtype=np.float64).tobytes())
        f.write(np.ascontiguousarray(tensor.M, dtype=np.uint8).tobytes())


def load_tensor(path):
    """Read a tensor container; returns ``(ObservationTensor, GridSpec)``."""
    with open(path, "rb") as f:
        magic = f.read(len(_TENSOR_MAGIC))
        if magic != _TENSOR_MAGIC:
            raise MalformedInput(f"{path}: not a tensor container")
        try:
            (version,) = struct.unpack("<I", f.read(4))
            if version != _TENSOR_VERSION:
                raise MalformedInput(f"{path}: unsupported tensor version {version}")
            (hlen,) = struct.unpack("<Q", f.read(8))
            header = json.loads(f.read(hlen).decode("utf-8"))
            shape = tuple(header["shape"])
            n = int(np.prod(shape))
            X = np.frombuffer(f.read(n * 8), dtype=np.float64).reshape(shape).copy()
            M = np.frombuffer(f.read(n), dtype=np.uint8).reshape(shape).copy()
        except (struct.error, ValueError, KeyError, UnicodeDecodeError) as exc:
            raise MalformedInput(f"{path}: truncated or damaged tensor ({exc})")
    tensor = ObservationTensor(X=X, M=M, channel_names=header["channel_names"])
    grid = GridSpec.from_dict(header["grid"])
    return tensor, grid


def export_tensor_csv(path, tensor: ObservationTensor, grid: GridSpec):
    """Lossless delimited-text export: one row per observed cell.

    Float values are printed with repr precision so a reimport reproduces
    the exact bit pattern.
    """
    with open(path, "w", newline="") as f:
        f.write("# oasis-tensor-csv v1\n")
        f.write("# grid: " + json.dumps(grid.to_dict()) + "\n")
        f.write("# channels: " + json.dumps(tensor.channel_names) + "\n")
        f.write("t,u,v,channel,value\n")
        idx = np.argwhere(tensor.M == 1)
        for t, u, v, d in idx:
            f.write(f"{t},{u},{v},{tensor.channel_names[d]},{float(tensor.X[t, u, v, d])!r}\n")


def import_tensor_csv(path):
    """Inverse of :func:`export_tensor_csv`."""
    grid_d = None
    channels = None
    rows = []
    with open(path) as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("# grid: "):
                grid_d = json.loads(line[len("# grid: "):])
            elif line.startswith("# channels: "):
                channels = json.loads(line[len("# channels: "):])
            elif line.startswith("#") or line == "t,u,v,channel,value" or not line:
                continue
            else:
                rows.append(line.split(","))
    if grid_d is None or channels is None:
        raise MalformedInput(f"{path}: missing grid/channel metadata")
    grid = GridSpec.from_dict(grid_d)
    shape = (grid.T_data, grid.U, grid.V, len(channels))
    X = np.full(shape, np.nan)
    M = np.zeros(shape, dtype=np.uint8)
    chan_idx = {c: i for i, c in enumerate(channels)}
    for t, u, v, c, val in rows:
        d = chan_idx[c]
        X[int(t), int(u), int(v), d] = float(val)
        M[int(t), int(u), int(v), d] = 1
    return ObservationTensor(X=X, M=M, channel_names=channels), grid
