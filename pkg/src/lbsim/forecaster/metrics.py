from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def evaluate(actual: Sequence[float], predicted: Sequence[float]) -> dict[str, float]:
    """RMSE, MAE and coefficient of determination of ``predicted``.

    R^2 is taken about the mean of ``actual``. A constant ``actual`` gives
    R^2 = 1 for an exact fit and 0 otherwise.
    """
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.size} actual vs {p.size} predicted")
    if a.size == 0:
        raise ValueError("cannot evaluate empty series")
    err = a - p
    ss_res = float(np.sum(err * err))
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res == 0.0 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return {
        "rmse": math.sqrt(ss_res / a.size),
        "mae": float(np.mean(np.abs(err))),
        "r2": r2,
    }
