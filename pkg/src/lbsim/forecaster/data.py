from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class SeriesScaler:
    """Min-max scaler; a degenerate (constant) series maps to 0."""

    min: float
    max: float

    def __post_init__(self) -> None:
        if self.max < self.min:
            raise ValueError(f"scaler max {self.max} < min {self.min}")

    @property
    def span(self) -> float:
        return self.max - self.min


def scaler_fit(series: Sequence[float]) -> SeriesScaler:
    values = np.asarray(series, dtype=float)
    if values.size == 0:
        raise ValueError("cannot fit a scaler on an empty series")
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains non-finite values")
    return SeriesScaler(float(values.min()), float(values.max()))


def scaler_apply(s: SeriesScaler, v):
    if s.span == 0:
        return np.zeros_like(v, dtype=float) if isinstance(v, np.ndarray) else 0.0
    return (v - s.min) / s.span


def scaler_invert(s: SeriesScaler, v):
    if s.span == 0:
        return np.full_like(v, s.min, dtype=float) if isinstance(v, np.ndarray) else s.min
    return v * s.span + s.min


def make_supervised(
    series: Sequence[float], lookback: int
) -> list[tuple[np.ndarray, float]]:
    """Slide a window of ``lookback`` samples over the series.

    Pair k is ``(series[k:k+lookback], series[k+lookback])``.
    """
    if lookback < 1:
        raise ValueError("lookback must be >= 1")
    values = np.asarray(series, dtype=float)
    if len(values) <= lookback:
        raise ValueError(
            f"series of length {len(values)} too short for lookback {lookback}"
        )
    return [
        (values[k : k + lookback].copy(), float(values[k + lookback]))
        for k in range(len(values) - lookback)
    ]


def split_point(n_pairs: int, train_fraction: float) -> int:
    return int(math.floor(n_pairs * train_fraction))


def minimum_length(lookback: int, train_fraction: float) -> int:
    """Shortest series giving at least one training and one held-out pair."""
    n = lookback + 2
    while True:
        k = split_point(n - lookback, train_fraction)
        if k >= 1 and n - lookback - k >= 1:
            return n
        n += 1
