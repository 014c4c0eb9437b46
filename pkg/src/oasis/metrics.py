"""Point-estimate error metrics.

MAPE is reported in percent and skips targets with magnitude below 1e-9;
the number of skipped targets is available from :func:`mape_with_count`.
"""

from __future__ import annotations

import numpy as np

from .errors import EmptyInput, LengthMismatch

MAPE_FLOOR = 1e-9


def _pair(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    if y_true.size != y_pred.size:
        raise LengthMismatch(f"{y_true.size} targets vs {y_pred.size} predictions")
    if y_true.size == 0:
        raise EmptyInput("metrics need at least one pair")
    return y_true, y_pred


def mae(y_true, y_pred):
    y_true, y_pred = _pair(y_true, y_pred)
    return float(np.abs(y_true - y_pred).mean())


def rmse(y_true, y_pred):
    y_true, y_pred = _pair(y_true, y_pred)
    return float(np.sqrt(((y_true - y_pred) ** 2).mean()))


def mape_with_count(y_true, y_pred):
    """(MAPE in percent, number of near-zero targets excluded)."""
    y_true, y_pred = _pair(y_true, y_pred)
    keep = np.abs(y_true) >= MAPE_FLOOR
    skipped = int((~keep).sum())
    if not keep.any():
        raise EmptyInput("all targets are below the MAPE magnitude floor")
    val = float(100.0 * (np.abs(y_true[keep] - y_pred[keep])
                         / np.abs(y_true[keep])).mean())
    return val, skipped


def mape(y_true, y_pred):
    return mape_with_count(y_true, y_pred)[0]


def summarize(y_true, y_pred):
    """{"mae", "rmse", "mape", "mape_skipped", "n"} for one prediction set."""
    y_true, y_pred = _pair(y_true, y_pred)
    try:
        m, skipped = mape_with_count(y_true, y_pred)
    except EmptyInput:
        m, skipped = float("nan"), int(y_true.size)
    return {
        "mae": mae(y_true, y_pred),
        "rmse": rmse(y_true, y_pred),
        "mape": m,
        "mape_skipped": skipped,
        "n": int(y_true.size),
    }
