from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .data import (
    SeriesScaler,
    make_supervised,
    minimum_length,
    scaler_apply,
    scaler_fit,
    scaler_invert,
    split_point,
)
from .metrics import evaluate
from .network import (
    AdamMoments,
    ForecastError,
    LstmParameters,
    adam_step,
    init_parameters,
    lstm_backward,
    lstm_forward,
)

DEFAULT_LOOKBACK = {"cpu": 5, "mem": 2, "disk": 5, "bw": 5}


@dataclass(frozen=True)
class LstmConfig:
    hidden_units: int = 5
    num_layers: int = 1
    lookback: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_LOOKBACK))
    epochs: int = 15
    batch_size: int = 1
    learning_rate: float = 0.001
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    train_fraction: float = 0.8
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.hidden_units < 1 or self.num_layers < 1:
            raise ValueError("hidden_units and num_layers must be >= 1")
        if any(v < 1 for v in self.lookback.values()):
            raise ValueError("every lookback must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")

    @property
    def max_lookback(self) -> int:
        return max(self.lookback.values())


@dataclass(frozen=True)
class ForecastVector:
    x_hat: float
    y_hat: float
    z_hat: float
    w_hat: float

    def __post_init__(self) -> None:
        for v in self.as_tuple():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"forecast component {v} outside [0, 1]")

    def __iter__(self) -> Iterator[float]:
        return iter(self.as_tuple())

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_hat, self.y_hat, self.z_hat, self.w_hat)


@dataclass(frozen=True)
class TrainingReport:
    rmse: float
    mae: float
    r2: float
    epochs_run: int
    final_loss: float
    loss_history: tuple[float, ...] = ()
    actual: tuple[float, ...] = ()
    predicted: tuple[float, ...] = ()


@dataclass
class TrainedForecaster:
    params: LstmParameters
    scaler: SeriesScaler
    lookback: int
    report: TrainingReport


def _batch_gradients(params, batch):
    total = None
    loss = 0.0
    for window, target in batch:
        pred, cache = lstm_forward(params, window)
        loss += 0.5 * (pred - target) ** 2
        g = lstm_backward(params, cache, target)
        if total is None:
            total = g
        else:
            for k in total:
                total[k] += g[k]
    n = len(batch)
    return {k: v / n for k, v in total.items()}, loss


def train_forecaster(
    series: Sequence[float],
    config: LstmConfig = LstmConfig(),
    metric: str = "cpu",
    lookback: int | None = None,
) -> TrainedForecaster:
    """Fit one model on the chronological first part of ``series``.

    The scaler is fitted on the training portion only. Error metrics are
    computed on the held-out pairs in the series' own units.
    """
    lookback = lookback if lookback is not None else config.lookback[metric]
    values = np.asarray(series, dtype=float)
    need = minimum_length(lookback, config.train_fraction)
    if len(values) < need:
        raise ValueError(
            f"series of length {len(values)} too short: need at least {need} samples "
            f"for lookback {lookback} and train fraction {config.train_fraction}"
        )
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains non-finite values")

    n_pairs = len(values) - lookback
    n_train = split_point(n_pairs, config.train_fraction)
    scaler = scaler_fit(values[: n_train + lookback])
    scaled = scaler_apply(scaler, values)
    pairs = make_supervised(scaled, lookback)
    train, test = pairs[:n_train], pairs[n_train:]

    rng = np.random.default_rng(config.rng_seed)
    params = init_parameters(config.hidden_units, config.num_layers, rng)
    moments = AdamMoments.zeros(params)
    step = 0
    history = []
    for _ in range(config.epochs):
        epoch_loss = 0.0
        for start in range(0, len(train), config.batch_size):
            grads, loss = _batch_gradients(params, train[start : start + config.batch_size])
            epoch_loss += loss
            step += 1
            params, moments = adam_step(
                params,
                grads,
                moments,
                step,
                learning_rate=config.learning_rate,
                beta1=config.adam_beta1,
                beta2=config.adam_beta2,
                epsilon=config.adam_epsilon,
            )
        if not params.all_finite():
            raise ForecastError("training diverged to non-finite parameters")
        history.append(2.0 * epoch_loss / len(train))

    predicted = [float(scaler_invert(scaler, lstm_forward(params, w)[0])) for w, _ in test]
    actual = [float(v) for v in values[n_train + lookback :]]
    scores = evaluate(actual, predicted)
    report = TrainingReport(
        rmse=scores["rmse"],
        mae=scores["mae"],
        r2=scores["r2"],
        epochs_run=config.epochs,
        final_loss=history[-1] if history else float("nan"),
        loss_history=tuple(history),
        actual=tuple(actual),
        predicted=tuple(predicted),
    )
    return TrainedForecaster(params, scaler, lookback, report)


def predict_next(
    params: LstmParameters,
    scaler: SeriesScaler,
    recent: Sequence[float],
    lookback: int | None = None,
    clamp: bool = True,
) -> float:
    """Forecast the value following ``recent`` (raw units, oldest first)."""
    recent = np.asarray(recent, dtype=float)
    if lookback is not None and len(recent) != lookback:
        raise ValueError(f"expected {lookback} recent values, got {len(recent)}")
    raw = float(scaler_invert(scaler, lstm_forward(params, scaler_apply(scaler, recent))[0]))
    return clamp_unit(raw) if clamp else raw


def clamp_unit(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def forecast_series(model: TrainedForecaster, series: Sequence[float], clamp: bool = False) -> list[float]:
    """One-step-ahead predictions for every index from ``lookback`` on."""
    values = np.asarray(series, dtype=float)
    return [
        predict_next(model.params, model.scaler, values[k - model.lookback : k], model.lookback, clamp)
        for k in range(model.lookback, len(values))
    ]
