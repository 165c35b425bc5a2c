"""Stacked LSTM with a one-unit dense head, written directly in numpy.

Gate rows inside each layer's weight matrices are ordered
input, forget, candidate, output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np


class ForecastError(ValueError):
    pass


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class LstmParameters:
    arrays: dict[str, np.ndarray]

    @property
    def num_layers(self) -> int:
        return sum(1 for k in self.arrays if k.startswith("Wx"))

    @property
    def hidden_units(self) -> int:
        return self.arrays["Wh0"].shape[1]

    def __getitem__(self, key: str) -> np.ndarray:
        return self.arrays[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self.arrays)

    def items(self):
        return self.arrays.items()

    def copy(self) -> "LstmParameters":
        return LstmParameters({k: v.copy() for k, v in self.arrays.items()})

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {k: v.shape for k, v in self.arrays.items()}

    def zeros_like(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.arrays.items()}

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.arrays.values())


def init_parameters(
    hidden_units: int, num_layers: int = 1, rng: np.random.Generator | None = None, input_width: int = 1
) -> LstmParameters:
    """Weights uniform in [-0.5, 0.5] / sqrt(hidden_units); biases zero."""
    if hidden_units < 1 or num_layers < 1:
        raise ValueError("hidden_units and num_layers must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    h = hidden_units
    scale = 1.0 / np.sqrt(h)
    arrays: dict[str, np.ndarray] = {}
    n_in = input_width
    for layer in range(num_layers):
        arrays[f"Wx{layer}"] = rng.uniform(-0.5, 0.5, size=(4 * h, n_in)) * scale
        arrays[f"Wh{layer}"] = rng.uniform(-0.5, 0.5, size=(4 * h, h)) * scale
        arrays[f"b{layer}"] = np.zeros(4 * h)
        n_in = h
    arrays["Wy"] = rng.uniform(-0.5, 0.5, size=h) * scale
    arrays["by"] = np.zeros(1)
    return LstmParameters(arrays)


def zero_parameters(hidden_units: int, num_layers: int = 1) -> LstmParameters:
    p = init_parameters(hidden_units, num_layers)
    return LstmParameters(p.zeros_like())


def lstm_forward(params: LstmParameters, window) -> tuple[float, dict]:
    """Run the window (oldest first) through the network.

    Returns the dense-head prediction and a cache for :func:`lstm_backward`.
    """
    xs_in = np.asarray(window, dtype=float).reshape(-1, 1)
    steps = xs_in.shape[0]
    if steps == 0:
        raise ForecastError("empty input window")
    h_units = params.hidden_units
    layer_caches = []
    inputs = [xs_in[t] for t in range(steps)]
    for layer in range(params.num_layers):
        wx, wh, b = params[f"Wx{layer}"], params[f"Wh{layer}"], params[f"b{layer}"]
        h = np.zeros(h_units)
        c = np.zeros(h_units)
        rec = {"x": [], "h_prev": [], "c_prev": [], "i": [], "f": [], "g": [], "o": [], "tc": []}
        outputs = []
        for t in range(steps):
            z = wx @ inputs[t] + wh @ h + b
            i = sigmoid(z[:h_units])
            f = sigmoid(z[h_units : 2 * h_units])
            g = np.tanh(z[2 * h_units : 3 * h_units])
            o = sigmoid(z[3 * h_units :])
            c_new = f * c + i * g
            tc = np.tanh(c_new)
            h_new = o * tc
            if not (np.all(np.isfinite(c_new)) and np.all(np.isfinite(h_new))):
                raise ForecastError(f"non-finite activation at layer {layer}, step {t}")
            for key, val in (("x", inputs[t]), ("h_prev", h), ("c_prev", c), ("i", i),
                             ("f", f), ("g", g), ("o", o), ("tc", tc)):
                rec[key].append(val)
            h, c = h_new, c_new
            outputs.append(h)
        layer_caches.append(rec)
        inputs = outputs
    h_last = inputs[-1]
    pred = float(params["Wy"] @ h_last + params["by"][0])
    if not np.isfinite(pred):
        raise ForecastError("non-finite prediction at output head")
    cache = {
        "shapes": params.shapes(),
        "steps": steps,
        "layers": layer_caches,
        "h_last": h_last,
        "pred": pred,
    }
    return pred, cache


def lstm_backward(
    params: LstmParameters, cache: Mapping, target: float, loss_scale: float = 1.0
) -> dict[str, np.ndarray]:
    """Gradient of ``loss_scale * 0.5 * (pred - target)**2`` by BPTT."""
    if cache.get("shapes") != params.shapes():
        raise ForecastError("cache was produced by parameters of a different shape")
    h_units = params.hidden_units
    steps = cache["steps"]
    grads = params.zeros_like()
    dy = loss_scale * (cache["pred"] - target)
    grads["Wy"] = dy * cache["h_last"]
    grads["by"] = np.array([dy])

    # gradient flowing into each layer's hidden output at every step
    dh_out = [np.zeros(h_units) for _ in range(steps)]
    dh_out[-1] = dy * params["Wy"]
    for layer in reversed(range(params.num_layers)):
        rec = cache["layers"][layer]
        wx, wh = params[f"Wx{layer}"], params[f"Wh{layer}"]
        dwx = np.zeros_like(wx)
        dwh = np.zeros_like(wh)
        db = np.zeros(4 * h_units)
        dh_next = np.zeros(h_units)
        dc_next = np.zeros(h_units)
        dx = [None] * steps
        for t in reversed(range(steps)):
            i, f, g, o, tc = rec["i"][t], rec["f"][t], rec["g"][t], rec["o"][t], rec["tc"][t]
            dh = dh_out[t] + dh_next
            do = dh * tc
            dc = dh * o * (1.0 - tc * tc) + dc_next
            di = dc * g
            dg = dc * i
            df = dc * rec["c_prev"][t]
            dz = np.concatenate(
                (di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o))
            )
            dwx += np.outer(dz, rec["x"][t])
            dwh += np.outer(dz, rec["h_prev"][t])
            db += dz
            dh_next = wh.T @ dz
            dc_next = dc * f
            dx[t] = wx.T @ dz
        grads[f"Wx{layer}"] = dwx
        grads[f"Wh{layer}"] = dwh
        grads[f"b{layer}"] = db
        dh_out = dx
    return grads


@dataclass
class AdamMoments:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]

    @classmethod
    def zeros(cls, params: LstmParameters) -> "AdamMoments":
        return cls(params.zeros_like(), params.zeros_like())


def adam_step(
    params: LstmParameters,
    grads: Mapping[str, np.ndarray],
    moments: AdamMoments,
    t: int,
    learning_rate: float = 0.001,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> tuple[LstmParameters, AdamMoments]:
    """One bias-corrected Adam update; ``t`` counts from 1."""
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    new_p, new_m, new_v = {}, {}, {}
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape} for {key}")
        m = beta1 * moments.m[key] + (1.0 - beta1) * g
        v = beta2 * moments.v[key] + (1.0 - beta2) * g * g
        new_p[key] = p - learning_rate * (m / c1) / (np.sqrt(v / c2) + epsilon)
        new_m[key] = m
        new_v[key] = v
    return LstmParameters(new_p), AdamMoments(new_m, new_v)
