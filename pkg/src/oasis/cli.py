"""Command-line entry points.

Subcommands: ingest, synth, train, tide, baseline, eval, ablate, plot,
serve.  All heavy lifting stays in the library modules; this file only
parses arguments, wires files together, and prints results.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import dan, experiment, serve, tide as tide_mod
from .baselines import make_baseline
from .errors import InvalidConfig, MalformedInput, OasisError
from .features import point_table
from .tensorize import (GridSpec, SyntheticConfig, generate_synthetic,
                        load_tensor, parse_timestamp, parse_trajectories,
                        rasterize, save_tensor, tensor_to_trajectories,
                        to_epoch_seconds, write_trajectories,
                        _TENSOR_MAGIC)


def _read_json_arg(value):
    """Accept inline JSON (object or array) or a path to a JSON file."""
    text = value
    if not value.lstrip().startswith(("{", "[")):
        with open(value) as fh:
            text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"bad JSON argument {value!r}: {exc}")


def _load_any_trajectories(path):
    """Trajectory file or tensor container -> TrajectorySet."""
    with open(path, "rb") as fh:
        head = fh.read(len(_TENSOR_MAGIC))
    if head == _TENSOR_MAGIC:
        tensor, grid = load_tensor(path)
        return tensor_to_trajectories(tensor, grid)
    with open(path) as fh:
        return parse_trajectories(fh)


def _grid_from_arg(spec, traj):
    """GridSpec from a possibly partial dict; bounds and the time axis
    default to the extent of the data."""
    d = dict(spec)
    lats = [r.lat for r in traj.records]
    lons = [r.lon for r in traj.records]
    secs = [r.t_seconds for r in traj.records]
    d.setdefault("lat_min", min(lats))
    d.setdefault("lat_max", max(lats) + 1e-9)
    d.setdefault("lon_min", min(lons))
    d.setdefault("lon_max", max(lons) + 1e-9)
    d.setdefault("U", 16)
    d.setdefault("V", 16)
    d.setdefault("time_step", 3600.0)
    if "time_origin" not in d:
        d["time_origin"] = datetime.fromtimestamp(min(secs), tz=timezone.utc).isoformat()
    origin = to_epoch_seconds(parse_timestamp(d["time_origin"]))
    if "T_data" not in d:
        span = max(secs) - origin
        d["T_data"] = max(1, int(math.floor(span / d["time_step"])) + 1)
    return GridSpec.from_dict(d)


def cmd_ingest(args):
    with open(args.input) as fh:
        traj = parse_trajectories(fh, schema=_read_json_arg(args.schema)
                                  if args.schema else None)
    grid = _grid_from_arg(_read_json_arg(args.grid), traj)
    channels = [c.strip() for c in args.channels.split(",") if c.strip()]
    tensor, skipped = rasterize(traj, grid, channels=channels)
    save_tensor(args.out, tensor, grid)
    observed = int(tensor.M.sum())
    print(f"wrote {args.out}: shape {tensor.shape}, "
          f"{observed} observed cells, {skipped} records outside grid")
    for line in traj.diagnostics[:10]:
        print(f"  note: {line}")
    return 0


def cmd_synth(args):
    overrides = _read_json_arg(args.config) if args.config else {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = SyntheticConfig(**overrides)
    traj, _ = generate_synthetic(cfg)
    write_trajectories(args.out, traj)
    print(f"wrote {args.out}: {len(traj.records)} records over "
          f"{len(traj.trajectory_ids)} trajectories")
    return 0


def cmd_train(args):
    traj = _load_any_trajectories(args.data)
    overrides = _read_json_arg(args.config) if args.config else {}
    for name in args.ablate or []:
        overrides[f"use_{name}"] = False
    if args.no_tide:
        overrides["use_tide"] = False
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = dan.TrainConfig(**overrides)

    from .tensorize import split_trajectories
    split = split_trajectories(traj, seed=cfg.seed)
    train_set = traj.subset(split.train_ids)
    val_set = traj.subset(split.val_ids) if split.val_ids else None

    def progress(epoch, rec):
        parts = "  ".join(f"{k}={v:.5f}" for k, v in rec.items())
        print(f"epoch {epoch + 1}/{cfg.epochs}  {parts}")

    model, _ = dan.train(train_set, cfg, val_data=val_set,
                         callback=progress if args.verbose else None)
    dan.save_checkpoint(args.out, model)
    print(f"wrote {args.out} (config {cfg.digest()})")
    return 0


def cmd_tide(args):
    day = args.date.replace("-", "")
    if args.fixture:
        path = os.path.join(args.fixture, f"{day}.json")
        with open(path) as fh:
            events = tide_mod.parse_predictions(fh.read())
    else:
        events = tide_mod.fetch_noaa_predictions(args.station, day, day)
    period = None if args.free_period else tide_mod.SEMIDIURNAL_PERIOD_H
    model = tide_mod.fit_events(events, period_hours=period)
    print(f"{len(events)} events from station {args.station} on {args.date}")
    print(f"amplitude {model.amplitude:.4f} m, phase {model.phase:.4f} rad, "
          f"offset {model.offset:.4f} m, period {model.period_hours:.4f} h "
          f"(fit rmse {model.fit_rmse:.4f} m)")
    t = np.linspace(model.t_min, model.t_max, args.samples)
    h = model.height_at(t)
    for ti, hi in zip(t, h):
        print(f"  {ti:.0f}s  {hi:+.3f} m")
    return 0


def cmd_baseline(args):
    traj = _load_any_trajectories(args.data)
    pts = point_table(traj)
    opts = _read_json_arg(args.options) if args.options else {}
    model = make_baseline(args.kind, **opts).fit(
        pts if args.kind in ("kriging", "gwr") else traj)
    with open(args.queries) as fh:
        queries = point_table(parse_trajectories(fh))
    values = model.predict(queries)
    with open(args.out, "w") as fh:
        fh.write("timestamp_s,lat,lon,predicted_salinity\n")
        for t, la, lo, v in zip(queries.t, queries.lat, queries.lon, values):
            fh.write(f"{float(t)!r},{float(la)!r},{float(lo)!r},{float(v)!r}\n")
    print(f"wrote {args.out}: {values.size} predictions ({args.kind})")
    return 0


def _experiment_configs(path):
    payload = _read_json_arg(path)
    if isinstance(payload, dict):
        payload = [payload]
    return [experiment.ExperimentConfig.from_dict(d) for d in payload]


def cmd_eval(args):
    configs = _experiment_configs(args.config)
    failures = 0
    rows = []
    for cfg in configs:
        try:
            rows.append(experiment.run_experiment(cfg)["row"])
        except OasisError as exc:
            failures += 1
            print(f"run {cfg.model}/{cfg.dataset} failed: "
                  f"{type(exc).__name__}: {exc}", file=sys.stderr)
    table = experiment.ResultsTable(rows)
    print(table.to_text(), end="")
    return 1 if failures else 0


def cmd_ablate(args):
    configs = _experiment_configs(args.config)
    if len(configs) != 1:
        raise InvalidConfig("ablate expects exactly one experiment config")
    table = experiment.ablate(configs[0])
    print(table.to_text(), end="")
    return 0


def cmd_plot(args):
    model = dan.load_checkpoint(args.ckpt)
    when = to_epoch_seconds(parse_timestamp(args.time))
    tide = args.tide
    if tide is None and model.cfg.use_tide:
        tide = 0.0
        print("note: model uses a tide covariate, assuming tide height 0.0 "
              "(pass --tide to override)")
    args.tide = tide
    r = model.region
    grid = GridSpec.from_dict({
        "lat_min": r["lat_min"], "lat_max": r["lat_max"],
        "lon_min": r["lon_min"], "lon_max": r["lon_max"],
        "U": args.cells, "V": args.cells,
        "time_origin": args.time, "time_step": 3600.0, "T_data": 1,
    })
    experiment.emit_field_plot(model, grid, when, args.out, tide=args.tide)
    print(f"wrote {args.out}")
    return 0


def cmd_serve(args):
    serve.run_server(args.ckpt, host=args.host, port=args.port,
                     station=args.station, fixture_dir=args.fixture,
                     static_dir=args.static)
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="oasis",
        description="spatiotemporal salinity imputation toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("ingest", help="rasterize a trajectory file")
    q.add_argument("--input", required=True)
    q.add_argument("--grid", required=True,
                   help="grid spec: JSON text or a JSON file path")
    q.add_argument("--schema", help="column mapping JSON")
    q.add_argument("--channels", default="salinity,tide")
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_ingest)

    q = sub.add_parser("synth", help="generate synthetic trajectories")
    q.add_argument("--config", help="synthetic-config JSON")
    q.add_argument("--seed", type=int)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_synth)

    q = sub.add_parser("train", help="train the imputation model")
    q.add_argument("--data", required=True, help="trajectory file or tensor")
    q.add_argument("--config", help="trainer-config JSON")
    q.add_argument("--ablate", action="append", choices=("norm", "gdc", "sd"))
    q.add_argument("--no-tide", action="store_true")
    q.add_argument("--seed", type=int)
    q.add_argument("--verbose", action="store_true")
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_train)

    q = sub.add_parser("tide", help="fit the tide sinusoid for one day")
    q.add_argument("--station", default=serve.DEFAULT_STATION)
    q.add_argument("--date", required=True, help="YYYY-MM-DD")
    q.add_argument("--fixture", help="directory of saved response bodies")
    q.add_argument("--free-period", action="store_true")
    q.add_argument("--samples", type=int, default=12)
    q.set_defaults(fn=cmd_tide)

    q = sub.add_parser("baseline", help="fit a baseline and predict")
    q.add_argument("--kind", required=True,
                   choices=("kriging", "gwr", "mlp", "lstm", "gan"))
    q.add_argument("--data", required=True)
    q.add_argument("--queries", required=True)
    q.add_argument("--options", help="baseline options JSON")
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_baseline)

    q = sub.add_parser("eval", help="run experiment configs, print a table")
    q.add_argument("--config", required=True)
    q.set_defaults(fn=cmd_eval)

    q = sub.add_parser("ablate", help="full model vs single-switch ablations")
    q.add_argument("--config", required=True)
    q.set_defaults(fn=cmd_ablate)

    q = sub.add_parser("plot", help="render an imputed field image")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--time", required=True, help="ISO-8601 timestamp")
    q.add_argument("--tide", type=float)
    q.add_argument("--cells", type=int, default=40)
    q.add_argument("--out", required=True)
    q.set_defaults(fn=cmd_plot)

    q = sub.add_parser("serve", help="run the HTTP inference service")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--host", default="127.0.0.1")
    q.add_argument("--port", type=int, default=8000)
    q.add_argument("--station", default=serve.DEFAULT_STATION)
    q.add_argument("--fixture", help="tide fixture directory")
    q.add_argument("--static", help="directory of built web-client files")
    q.set_defaults(fn=cmd_serve)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (OasisError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
