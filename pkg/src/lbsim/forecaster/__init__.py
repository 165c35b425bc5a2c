"""Per-metric LSTM forecasting of server utilization."""

from .data import (
    SeriesScaler,
    make_supervised,
    minimum_length,
    scaler_apply,
    scaler_fit,
    scaler_invert,
)
from .io import load_parameters, save_parameters
from .metrics import evaluate
from .network import (
    AdamMoments,
    ForecastError,
    LstmParameters,
    adam_step,
    init_parameters,
    lstm_backward,
    lstm_forward,
    zero_parameters,
)
from .training import (
    ForecastVector,
    LstmConfig,
    TrainedForecaster,
    TrainingReport,
    clamp_unit,
    forecast_series,
    predict_next,
    train_forecaster,
)

__all__ = [
    "AdamMoments",
    "ForecastError",
    "ForecastVector",
    "LstmConfig",
    "LstmParameters",
    "SeriesScaler",
    "TrainedForecaster",
    "TrainingReport",
    "adam_step",
    "clamp_unit",
    "evaluate",
    "forecast_series",
    "init_parameters",
    "load_parameters",
    "lstm_backward",
    "lstm_forward",
    "make_supervised",
    "minimum_length",
    "predict_next",
    "save_parameters",
    "scaler_apply",
    "scaler_fit",
    "scaler_invert",
    "train_forecaster",
    "zero_parameters",
]
