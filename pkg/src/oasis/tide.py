"""Tide covariate acquisition and harmonic fitting.

High/low tide predictions come from the NOAA CO-OPS data API (or from a
saved response body in tests).  A single sinusoid

    h(t) = offset + amplitude * sin(omega * t + phase)

is fitted to the events by linear least squares in the coefficients of
sin/cos at a fixed angular frequency; time enters in hours since the Unix
epoch.  The default frequency is the principal lunar semidiurnal
constituent; passing ``period_hours=None`` searches the period over a
grid and refines the best cell.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from datetime import datetime, timezone

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (DegenerateFit, EmptyResponse, InvalidConfig,
                     LengthMismatch, MalformedInput, NetworkError, ParseError,
                     TideUnavailable, TooFewEvents)
from .tensorize import SEMIDIURNAL_PERIOD_H

NOAA_URL = "https://api.tidesandcurrents.noaa.gov/api/prod/datagetter"

# free-frequency search range, hours per cycle (diurnal through semidiurnal)
PERIOD_SEARCH_H = (6.0, 26.0)


@dataclass
class TideEvent:
    """One predicted high or low water."""

    t_seconds: float     # epoch seconds, UTC
    height: float        # meters relative to the requested datum
    kind: str            # "H" or "L"

    @property
    def time(self) -> datetime:
        return datetime.fromtimestamp(self.t_seconds, tz=timezone.utc)


def _default_transport(url, params, timeout):
    import requests

    try:
        resp = requests.get(url, params=params, timeout=timeout)
    except requests.RequestException as exc:
        raise NetworkError(f"tide request failed: {exc}") from exc
    return resp.status_code, resp.text


def fetch_noaa_predictions(station, begin_date, end_date, datum="MLLW",
                           transport=None, timeout=30.0):
    """High/low tide predictions for one station, sorted by time.

    ``begin_date``/``end_date`` use the API's yyyymmdd form.  ``transport``
    is ``fn(url, params, timeout) -> (status_code, body_text)`` and exists
    so tests can replay saved responses without a network.
    """
    station = str(station).strip()
    if not station:
        raise MalformedInput("station id is required")
    for d in (begin_date, end_date):
        ds = str(d)
        if len(ds) != 8 or not ds.isdigit():
            raise MalformedInput(f"dates must be yyyymmdd, got {d!r}")
    params = {
        "product": "predictions",
        "application": "oasis-salinity",
        "station": station,
        "begin_date": str(begin_date),
        "end_date": str(end_date),
        "datum": datum,
        "units": "metric",
        "time_zone": "gmt",
        "interval": "hilo",
        "format": "json",
    }
    transport = transport or _default_transport
    status, body = transport(NOAA_URL, params, timeout)
    if status != 200:
        raise NetworkError(f"tide endpoint returned HTTP {status}")
    return parse_predictions(body)


def parse_predictions(body):
    """Parse a raw CO-OPS predictions response into [TideEvent]."""
    import json

    try:
        payload = json.loads(body)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"tide response is not JSON: {exc}") from exc
    if "error" in payload:
        msg = payload["error"].get("message", "unspecified error")
        raise EmptyResponse(f"tide service: {msg}")
    rows = payload.get("predictions")
    if rows is None:
        raise ParseError("tide response lacks a predictions list")
    if not rows:
        raise EmptyResponse("tide response contains no events")
    events = []
    for row in rows:
        try:
            when = datetime.strptime(row["t"], "%Y-%m-%d %H:%M")
            when = when.replace(tzinfo=timezone.utc)
            events.append(TideEvent(t_seconds=when.timestamp(),
                                    height=float(row["v"]),
                                    kind=str(row.get("type", "")).upper()))
        except (KeyError, ValueError, TypeError) as exc:
            raise ParseError(f"malformed prediction row {row!r}") from exc
    events.sort(key=lambda e: e.t_seconds)
    return events


@dataclass
class TideModel:
    """Fitted sinusoid; heights in meters, phase in radians."""

    amplitude: float
    phase: float
    offset: float
    period_hours: float
    t_min: float = 0.0       # epoch-second span of the fitting data
    t_max: float = 0.0
    fit_rmse: float = 0.0

    @property
    def omega(self):
        # radians per hour
        return 2.0 * np.pi / self.period_hours

    def height_at(self, t_seconds, extrapolate=True):
        t = np.asarray(t_seconds, dtype=float)
        if not extrapolate:
            lo, hi = float(np.min(t)), float(np.max(t))
            if lo < self.t_min or hi > self.t_max:
                raise TideUnavailable(
                    "requested time lies outside the fitted window "
                    f"[{self.t_min}, {self.t_max}]")
        th = t / 3600.0
        h = self.offset + self.amplitude * np.sin(self.omega * th + self.phase)
        return float(h) if np.isscalar(t_seconds) else h

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: float(v) for k, v in d.items()
                      if k in cls.__dataclass_fields__})


def _solve_at_omega(th, h, omega):
    """Least-squares (a, b, c) for h = a sin(wt) + b cos(wt) + c.

    Rejects ill-conditioned designs (e.g. events sampled exactly every
    half period, which leaves the phase/amplitude unidentifiable).
    """
    design = np.column_stack([np.sin(omega * th), np.cos(omega * th),
                              np.ones_like(th)])
    coef, _, rank, _ = np.linalg.lstsq(design, h, rcond=None)
    if rank < 3 or np.linalg.cond(design) > 1e8:
        raise DegenerateFit("event times do not constrain the sinusoid")
    resid = h - design @ coef
    return coef, float(np.sqrt((resid ** 2).mean()))


def fit_sinusoid(t_seconds, heights, period_hours=SEMIDIURNAL_PERIOD_H):
    """Fit the sinusoid to event times/heights; returns :class:`TideModel`.

    With ``period_hours=None`` the period is also estimated (grid search
    over PERIOD_SEARCH_H, then a bounded scalar refinement).
    """
    t = np.asarray(t_seconds, dtype=float).ravel()
    h = np.asarray(heights, dtype=float).ravel()
    if t.size != h.size:
        raise LengthMismatch(f"{t.size} times vs {h.size} heights")
    need = 3 if period_hours is not None else 4
    if t.size < need:
        raise TooFewEvents(f"need at least {need} events, got {t.size}")
    if not (np.isfinite(t).all() and np.isfinite(h).all()):
        raise MalformedInput("event times/heights must be finite")
    if np.ptp(t) == 0:
        raise DegenerateFit("all events share one timestamp")
    th = t / 3600.0

    if period_hours is None:
        lo, hi = PERIOD_SEARCH_H
        grid = np.linspace(lo, hi, 4001)
        errs = np.empty_like(grid)
        for i, p in enumerate(grid):
            try:
                _, errs[i] = _solve_at_omega(th, h, 2.0 * np.pi / p)
            except DegenerateFit:
                errs[i] = np.inf
        if not np.isfinite(errs).any():
            raise DegenerateFit("no period in the search range fits the events")
        p0 = grid[int(np.argmin(errs))]
        step = grid[1] - grid[0]

        def cost(p):
            try:
                return _solve_at_omega(th, h, 2.0 * np.pi / p)[1]
            except DegenerateFit:
                return np.inf

        res = minimize_scalar(cost, bounds=(max(lo, p0 - step), min(hi, p0 + step)),
                              method="bounded")
        period_hours = float(res.x) if res.fun <= cost(p0) else float(p0)

    coef, rmse = _solve_at_omega(th, h, 2.0 * np.pi / period_hours)
    a, b, c = coef
    return TideModel(amplitude=float(np.hypot(a, b)),
                     phase=float(np.arctan2(b, a)),
                     offset=float(c),
                     period_hours=float(period_hours),
                     t_min=float(t.min()), t_max=float(t.max()),
                     fit_rmse=rmse)


def fit_events(events, period_hours=SEMIDIURNAL_PERIOD_H):
    """Fit from a list of :class:`TideEvent`."""
    if not events:
        raise TooFewEvents("no events to fit")
    t = [e.t_seconds for e in events]
    h = [e.height for e in events]
    return fit_sinusoid(t, h, period_hours=period_hours)


def fit_by_window(events, mode="daily", period_hours=SEMIDIURNAL_PERIOD_H):
    """One sinusoid per calendar day or month.

    Returns an ordered dict mapping the window key ("YYYY-MM-DD" or
    "YYYY-MM") to its fitted TideModel.  Windows with too few events are
    skipped silently; an empty result raises TooFewEvents.
    """
    if mode not in ("daily", "monthly"):
        raise InvalidConfig(f"unknown fit window mode {mode!r}")
    fmt = "%Y-%m-%d" if mode == "daily" else "%Y-%m"
    buckets = {}
    for e in sorted(events, key=lambda e: e.t_seconds):
        buckets.setdefault(e.time.strftime(fmt), []).append(e)
    out = {}
    for key, evs in buckets.items():
        try:
            out[key] = fit_events(evs, period_hours=period_hours)
        except (TooFewEvents, DegenerateFit):
            continue
    if not out:
        raise TooFewEvents("no window had enough events for a fit")
    return out
