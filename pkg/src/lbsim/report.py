"""Persistence of traces, forecast metrics and plot-ready series."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .balancer import describe, servers_touched
from .domain import METRICS, LoadLevel
from .engine import SimulationTrace, _seed_for
from .forecaster import LstmConfig, forecast_series, minimum_length, train_forecaster

TRACE_COLUMNS = (
    "step",
    "flow_id",
    "policy",
    "server_id",
    "x",
    "y",
    "z",
    "w",
    "level",
    "powered_on",
    "action",
)
PLOT_COLUMNS = ("actual", "predicted")


class ReportError(OSError):
    pass


@dataclass(frozen=True)
class TraceRow:
    step: int
    flow_id: int | None
    policy: str
    server_id: int
    x: float
    y: float
    z: float
    w: float
    level: LoadLevel | None
    powered_on: bool
    actions: tuple[str, ...]

    def as_csv(self) -> list[str]:
        return [
            str(self.step),
            "" if self.flow_id is None else str(self.flow_id),
            self.policy,
            str(self.server_id),
            repr(self.x),
            repr(self.y),
            repr(self.z),
            repr(self.w),
            "" if self.level is None else self.level.token,
            "1" if self.powered_on else "0",
            ";".join(self.actions),
        ]

    @classmethod
    def from_csv(cls, row: Mapping[str, str]) -> "TraceRow":
        return cls(
            step=int(row["step"]),
            flow_id=int(row["flow_id"]) if row["flow_id"] else None,
            policy=row["policy"],
            server_id=int(row["server_id"]),
            x=float(row["x"]),
            y=float(row["y"]),
            z=float(row["z"]),
            w=float(row["w"]),
            level=LoadLevel.from_token(row["level"]) if row["level"] else None,
            powered_on=row["powered_on"] == "1",
            actions=tuple(row["action"].split(";")) if row["action"] else (),
        )


def trace_rows(trace: SimulationTrace) -> list[TraceRow]:
    """One row per (step, server) present at that step, in id order.

    An action is listed on every server it touches; actions touching no
    server (diagnostics, sourceless redirects) are listed on every row.
    """
    rows = []
    for rec in trace.records:
        untargeted = [describe(a) for a in rec.actions if not servers_touched(a)]
        for sid in sorted(rec.powered_on):
            u = rec.utilization[sid]
            rows.append(
                TraceRow(
                    step=rec.step,
                    flow_id=rec.flow_id,
                    policy=rec.policy,
                    server_id=sid,
                    x=u.x,
                    y=u.y,
                    z=u.z,
                    w=u.w,
                    level=rec.levels.get(sid),
                    powered_on=rec.powered_on[sid],
                    actions=tuple(rec.actions_for(sid) + untargeted),
                )
            )
    return rows


def _write_text(path: str | Path, text: str) -> Path:
    p = Path(path)
    try:
        with open(p, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ReportError(f"cannot write {p}: {exc.strerror or exc}") from None
    return p


def format_trace_csv(trace: SimulationTrace | None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    if trace is not None:
        for row in trace_rows(trace):
            writer.writerow(row.as_csv())
    return buf.getvalue()


def emit_trace_csv(trace: SimulationTrace | None, path: str | Path) -> Path:
    return _write_text(path, format_trace_csv(trace))


def read_trace_csv(path: str | Path) -> list[TraceRow]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ReportError(f"cannot read {p}: {exc.strerror or exc}") from None
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
        raise ValueError(f"{p}: unexpected header {reader.fieldnames}")
    return [TraceRow.from_csv(row) for row in reader]


# -- forecast metrics ------------------------------------------------------

@dataclass(frozen=True)
class SeriesFit:
    server_id: int
    metric: str
    rmse: float
    mae: float
    r2: float
    n_test: int
    actual: tuple[float, ...]
    predicted: tuple[float, ...]


def fit_trace_series(trace: SimulationTrace, lstm: LstmConfig) -> list[SeriesFit]:
    """Train one forecaster per (server, metric) on the trace's utilization.

    Scores cover the held-out tail; the plot series covers every one-step
    prediction from the first full lookback window on. Series too short for
    the configured split are skipped.
    """
    fits = []
    for sid in trace.server_ids():
        for k, metric in enumerate(METRICS):
            series = trace.series(sid, metric)
            lookback = lstm.lookback[metric]
            if len(series) < minimum_length(lookback, lstm.train_fraction):
                continue
            cfg = replace(lstm, rng_seed=_seed_for(trace.seed, 0, sid, k))
            model = train_forecaster(series, cfg, metric=metric)
            rep = model.report
            fits.append(
                SeriesFit(
                    server_id=sid,
                    metric=metric,
                    rmse=rep.rmse,
                    mae=rep.mae,
                    r2=rep.r2,
                    n_test=len(rep.actual),
                    actual=tuple(series[lookback:]),
                    predicted=tuple(forecast_series(model, series, clamp=True)),
                )
            )
    return fits


def _finite_or_none(v: float) -> float | None:
    return v if math.isfinite(v) else None


def metrics_document(fits: Iterable[SeriesFit], extra: Mapping[str, Any] | None = None) -> dict[str, Any]:
    servers: dict[str, dict[str, Any]] = {}
    for f in fits:
        servers.setdefault(str(f.server_id), {})[f.metric] = {
            "rmse": _finite_or_none(f.rmse),
            "mae": _finite_or_none(f.mae),
            "r2": _finite_or_none(f.r2),
            "n_test": f.n_test,
        }
    doc: dict[str, Any] = dict(extra or {})
    doc["servers"] = servers
    return doc


def emit_metrics_json(report: Mapping[str, Any], path: str | Path) -> Path:
    # json writes floats with repr, i.e. the shortest round-tripping form
    return _write_text(path, json.dumps(report, indent=2, sort_keys=False, allow_nan=False) + "\n")


def emit_plot_data(series: Sequence[tuple[float, float]], path: str | Path) -> Path:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PLOT_COLUMNS)
    for actual, predicted in series:
        writer.writerow([repr(float(actual)), repr(float(predicted))])
    return _write_text(path, buf.getvalue())


def final_levels(trace: SimulationTrace) -> dict[int, str]:
    return {sid: (lvl.token if lvl is not None else "off") for sid, lvl in sorted(trace.final.levels.items())}
