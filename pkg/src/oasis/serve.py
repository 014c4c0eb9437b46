"""HTTP inference service.

Loads a checkpoint, answers single-point and batch imputation requests,
resolves the tide covariate (request override, fetched-and-fitted daily
events, or extrapolation from the nearest fitted day), and supports
atomic checkpoint hot-swap: the serving state is one immutable snapshot
swapped by reference, so every response reflects exactly one model
version and a failed swap leaves the old model serving.

Error bodies are machine readable: {"error": {"code", "message"}} where
the code is the raising exception class name.
"""

import csv
import hashlib
import io
import os
import threading
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import dan
from . import tide as tide_mod
from .errors import (CorruptCheckpoint, MalformedHeader, MalformedInput,
                     OasisError, OutOfRegion, TideUnavailable, VersionMismatch)
from .tensorize import parse_timestamp, to_epoch_seconds

DEFAULT_STATION = "8722212"
ADMIN_TOKEN_ENV = "OASIS_ADMIN_TOKEN"

_ERROR_STATUS = {
    MalformedInput: 400,
    MalformedHeader: 400,
    CorruptCheckpoint: 400,
    VersionMismatch: 409,
    OutOfRegion: 422,
    TideUnavailable: 503,
}

_TS_KEYS = ("timestamp", "time", "ts", "datetime")
_LAT_KEYS = ("lat", "latitude")
_LON_KEYS = ("lon", "longitude", "lng")
_TIDE_KEYS = ("tide_override", "tide", "tide_m")


def _status_of(exc):
    for cls, code in _ERROR_STATUS.items():
        if isinstance(exc, cls):
            return code
    return 500


def _error_body(exc):
    return {"error": {"code": type(exc).__name__, "message": str(exc)}}


@dataclass(frozen=True)
class ServingState:
    model: dan.DanModel
    version: str
    path: str


def load_state(path) -> ServingState:
    model = dan.load_checkpoint(path)
    with open(path, "rb") as fh:
        version = hashlib.sha256(fh.read()).hexdigest()[:16]
    return ServingState(model=model, version=version, path=str(path))


class ModelHolder:
    """Single-slot model store; swap publishes a fully built snapshot."""

    def __init__(self, path):
        self._state = load_state(path)
        self._swap_lock = threading.Lock()

    def snapshot(self) -> ServingState:
        return self._state

    def swap(self, path) -> ServingState:
        with self._swap_lock:
            state = load_state(path)   # raises before anything is replaced
            self._state = state
            return state


class TideProvider:
    """Per-day sinusoid fits over high/low events.

    Events for a query's UTC date come from a fixture directory
    (``<yyyymmdd>.json`` raw response bodies) or the live endpoint.  A
    timestamp inside the fitted window resolves as source "noaa";
    outside it (or when only another day's fit is available) the fit is
    extrapolated and the source is "model-extrapolated".
    """

    def __init__(self, station=DEFAULT_STATION, fixture_dir=None,
                 transport=None, tide_model=None):
        self.station = station
        self.fixture_dir = fixture_dir
        self.transport = transport
        self._fits = {}
        if tide_model is not None:
            self._fits["pinned"] = tide_model
        self._lock = threading.Lock()

    def _events_body(self, day):
        if self.fixture_dir is not None:
            path = os.path.join(self.fixture_dir, f"{day}.json")
            if not os.path.exists(path):
                raise TideUnavailable(f"no tide fixture for {day}")
            with open(path) as fh:
                return fh.read()
        status, body = (self.transport or tide_mod._default_transport)(
            tide_mod.NOAA_URL, {
                "product": "predictions", "application": "oasis-salinity",
                "station": self.station, "begin_date": day, "end_date": day,
                "datum": "MLLW", "units": "metric", "time_zone": "gmt",
                "interval": "hilo", "format": "json",
            }, 30.0)
        if status != 200:
            raise TideUnavailable(f"tide endpoint returned HTTP {status}")
        return body

    def _fit_day(self, day):
        with self._lock:
            if day in self._fits:
                return self._fits[day]
        events = tide_mod.parse_predictions(self._events_body(day))
        model = tide_mod.fit_events(events)
        with self._lock:
            self._fits[day] = model
        return model

    def resolve(self, t_sec):
        """(height_m, source) for one epoch-second timestamp."""
        pinned = self._fits.get("pinned")
        if pinned is not None and self.fixture_dir is None \
                and self.transport is None:
            src = ("noaa" if pinned.t_min <= t_sec <= pinned.t_max
                   else "model-extrapolated")
            return float(pinned.height_at(t_sec)), src
        day = datetime.fromtimestamp(t_sec, tz=timezone.utc).strftime("%Y%m%d")
        try:
            model = self._fit_day(day)
        except OasisError:
            model = self._nearest_fit(t_sec)
            if model is None:
                raise TideUnavailable(
                    f"no tide data for {day} and no earlier fit to extrapolate")
            return float(model.height_at(t_sec)), "model-extrapolated"
        if model.t_min <= t_sec <= model.t_max:
            return float(model.height_at(t_sec)), "noaa"
        return float(model.height_at(t_sec)), "model-extrapolated"

    def _nearest_fit(self, t_sec):
        with self._lock:
            fits = list(self._fits.values())
        if not fits:
            return None
        center = lambda m: 0.5 * (m.t_min + m.t_max)
        return min(fits, key=lambda m: abs(center(m) - t_sec))


def _require_number(row, keys, name):
    for k in keys:
        if k in row and row[k] is not None and row[k] != "":
            try:
                v = float(row[k])
            except (TypeError, ValueError):
                raise MalformedInput(f"{name} is not a number: {row[k]!r}")
            if not np.isfinite(v):
                raise MalformedInput(f"{name} must be finite")
            return v
    raise MalformedInput(f"missing required field {name}")


def _optional_number(row, keys, name):
    for k in keys:
        if k in row and row[k] is not None and row[k] != "":
            try:
                v = float(row[k])
            except (TypeError, ValueError):
                raise MalformedInput(f"{name} is not a number: {row[k]!r}")
            return v
    return None


def impute_point(row, state: ServingState, tide_provider: TideProvider):
    """Answer one request dict against one serving snapshot."""
    if not isinstance(row, dict):
        raise MalformedInput("each request must be an object")
    ts_raw = None
    for k in _TS_KEYS:
        if k in row and row[k] not in (None, ""):
            ts_raw = row[k]
            break
    if ts_raw is None:
        raise MalformedInput("missing required field timestamp")
    try:
        t_sec = to_epoch_seconds(parse_timestamp(str(ts_raw)))
    except ValueError as exc:
        raise MalformedInput(f"bad timestamp {ts_raw!r}: {exc}") from exc
    lat = _require_number(row, _LAT_KEYS, "lat")
    lon = _require_number(row, _LON_KEYS, "lon")
    if not (-90.0 <= lat <= 90.0) or not (-180.0 <= lon <= 180.0):
        raise MalformedInput(f"coordinates out of valid range: {lat}, {lon}")
    region = state.model.region
    if not (region["lat_min"] <= lat <= region["lat_max"]
            and region["lon_min"] <= lon <= region["lon_max"]):
        raise OutOfRegion(
            f"({lat}, {lon}) outside model region "
            f"[{region['lat_min']}, {region['lat_max']}] x "
            f"[{region['lon_min']}, {region['lon_max']}]")

    override = _optional_number(row, _TIDE_KEYS, "tide_override")
    if state.model.cfg.use_tide:
        if override is not None:
            tide_used, tide_source = float(override), "override"
        else:
            tide_used, tide_source = tide_provider.resolve(t_sec)
    else:
        # tide plays no role in this checkpoint; echo any override
        tide_used = float(override) if override is not None else 0.0
        tide_source = "override"

    tide_arg = tide_used if state.model.cfg.use_tide else None
    salinity = state.model.predict_single(t_sec, lat, lon, tide_arg)
    return {
        "salinity": salinity,
        "tide_used": tide_used,
        "tide_source": tide_source,
        "model_version": state.version,
    }


def _rows_from_csv(text):
    """Batch rows from delimited text with a header line."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeader("batch input is empty")
    cols = [h.strip().lower() for h in header]
    missing = []
    for keys, name in ((_TS_KEYS, "timestamp"), (_LAT_KEYS, "lat"),
                       (_LON_KEYS, "lon")):
        if not any(k in cols for k in keys):
            missing.append(name)
    if missing:
        raise MalformedHeader(f"batch header lacks columns: {missing}")
    rows = []
    for raw in reader:
        if not raw or all(not c.strip() for c in raw):
            continue
        rows.append({cols[i]: raw[i].strip()
                     for i in range(min(len(cols), len(raw)))})
    return rows


def impute_batch(rows, state: ServingState, tide_provider: TideProvider):
    """Order-preserving per-row results; row failures never abort."""
    results = []
    for i, row in enumerate(rows):
        try:
            results.append({"index": i, "ok": True,
                            "result": impute_point(row, state, tide_provider)})
        except OasisError as exc:
            results.append({"index": i, "ok": False,
                            "error": _error_body(exc)["error"]})
    return results


def create_app(ckpt_path, station=DEFAULT_STATION, fixture_dir=None,
               transport=None, tide_model=None, admin_token=None,
               static_dir=None):
    """Build the ASGI application around one checkpoint.

    ``static_dir`` mounts a directory of built web-client files at the
    root path; the API stays under ``/v1``.
    """
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    holder = ModelHolder(ckpt_path)
    tides = TideProvider(station=station, fixture_dir=fixture_dir,
                         transport=transport, tide_model=tide_model)
    app = FastAPI(title="salinity imputation service", docs_url=None,
                  redoc_url=None)
    app.state.holder = holder
    app.state.tides = tides

    def _fail(exc):
        return JSONResponse(status_code=_status_of(exc),
                            content=_error_body(exc))

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "model_version": holder.snapshot().version}

    @app.get("/v1/model")
    async def model_info():
        s = holder.snapshot()
        return {
            "model_version": s.version,
            "checkpoint_path": s.path,
            "config_digest": s.model.cfg.digest(),
            "feature_names": s.model.cfg.feature_names,
            "uses_tide": s.model.cfg.use_tide,
            "region": s.model.region,
            "stats": s.model.stats,
        }

    @app.post("/v1/impute")
    async def impute(request: Request):
        state = holder.snapshot()
        try:
            try:
                row = await request.json()
            except Exception as exc:
                raise MalformedInput(f"request body is not JSON: {exc}")
            return impute_point(row, state, tides)
        except OasisError as exc:
            return _fail(exc)

    @app.post("/v1/impute/batch")
    async def impute_batch_endpoint(request: Request):
        state = holder.snapshot()
        ctype = request.headers.get("content-type", "")
        try:
            if "json" in ctype:
                try:
                    payload = await request.json()
                except Exception as exc:
                    raise MalformedInput(f"request body is not JSON: {exc}")
                rows = payload.get("rows") if isinstance(payload, dict) \
                    else payload
                if not isinstance(rows, list):
                    raise MalformedInput("JSON batch must be a list of rows")
            else:
                body = await request.body()
                rows = _rows_from_csv(body.decode("utf-8", errors="replace"))
            results = impute_batch(rows, state, tides)
            return {"model_version": state.version, "results": results}
        except OasisError as exc:
            return _fail(exc)

    @app.post("/v1/model/swap")
    async def swap(request: Request):
        token = admin_token or os.environ.get(ADMIN_TOKEN_ENV)
        supplied = request.headers.get("x-admin-token")
        if not token:
            return JSONResponse(status_code=403, content=_error_body(
                MalformedInput("swap disabled: no admin token configured")))
        if supplied != token:
            return JSONResponse(status_code=403, content=_error_body(
                MalformedInput("bad admin token")))
        try:
            try:
                payload = await request.json()
            except Exception as exc:
                raise MalformedInput(f"request body is not JSON: {exc}")
            path = payload.get("path") if isinstance(payload, dict) else None
            if not path:
                raise MalformedInput("swap body needs a checkpoint path")
            if not os.path.exists(path):
                raise CorruptCheckpoint(f"no such checkpoint: {path}")
            state = holder.swap(path)
            return {"model_version": state.version, "checkpoint_path": state.path}
        except OasisError as exc:
            return _fail(exc)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # mounted last so /v1 routes keep precedence
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="webui")

    return app


def run_server(ckpt_path, host="127.0.0.1", port=8000, **app_kwargs):
    """Blocking uvicorn runner used by the command-line entry point."""
    import uvicorn

    app = create_app(ckpt_path, **app_kwargs)
    uvicorn.run(app, host=host, port=port, log_level="info")
