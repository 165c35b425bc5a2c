"""Plain-text parameter files.

Layout::

    lbsim-lstm 1
    scaler <min> <max>          (optional)
    <name> <dim> [<dim> ...]
    <values, row-major, space separated>
    ...
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import SeriesScaler
from .network import LstmParameters

MAGIC = "lbsim-lstm"
VERSION = 1


def dumps_parameters(params: LstmParameters, scaler: SeriesScaler | None = None) -> str:
    lines = [f"{MAGIC} {VERSION}"]
    if scaler is not None:
        lines.append(f"scaler {scaler.min!r} {scaler.max!r}")
    for name, arr in params.items():
        lines.append(" ".join([name, *(str(d) for d in arr.shape)]))
        lines.append(" ".join(repr(float(v)) for v in arr.ravel(order="C")))
    return "\n".join(lines) + "\n"


def loads_parameters(text: str) -> tuple[LstmParameters, SeriesScaler | None]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty parameter file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != MAGIC:
        raise ValueError(f"not an {MAGIC} file")
    if int(head[1]) != VERSION:
        raise ValueError(f"unsupported parameter file version {head[1]}")
    scaler = None
    arrays: dict[str, np.ndarray] = {}
    idx = 1
    while idx < len(lines):
        parts = lines[idx].split()
        if parts[0] == "scaler":
            scaler = SeriesScaler(float(parts[1]), float(parts[2]))
            idx += 1
            continue
        name, shape = parts[0], tuple(int(d) for d in parts[1:])
        if idx + 1 >= len(lines):
            raise ValueError(f"missing values for {name}")
        values = np.array([float(v) for v in lines[idx + 1].split()])
        if values.size != int(np.prod(shape)):
            raise ValueError(f"{name}: expected {int(np.prod(shape))} values, found {values.size}")
        arrays[name] = values.reshape(shape)
        idx += 2
    return LstmParameters(arrays), scaler


def save_parameters(path, params: LstmParameters, scaler: SeriesScaler | None = None) -> None:
    Path(path).write_text(dumps_parameters(params, scaler))


def load_parameters(path) -> tuple[LstmParameters, SeriesScaler | None]:
    return loads_parameters(Path(path).read_text())
