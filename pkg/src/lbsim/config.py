"""Run configuration: a flat ``key = value`` text format with dotted namespaces.

Example::

    # comments and blank lines are ignored
    scenario = paper
    policy = round-robin
    seed = 0
    lstm.hidden_units = 64
    lstm.lookback.mem = 3
    cost.bw_per_rate = 0.3
    fuzzy.high = 0.5, 1.0, 1.0

Every key has a default; unknown keys are rejected by name.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from .domain import METRICS
from .engine import DEFAULT_SEED, POLICIES, SimulationConfig
from .forecaster import LstmConfig
from .fuzzy import DEFAULT_INPUT_TERMS, GRID_POINTS, FuzzyClassifier, H, L, M, classifier_from_breakpoints
from .scenario import CostModel

ALL_POLICIES = "all"
DEFAULT_OUT = "lbsim-out"


class ConfigError(ValueError):
    pass


def parse_key_values(text: str, origin: str = "<config>") -> dict[str, str]:
    """Ordered ``{key: raw value}``; later duplicates override earlier ones."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        entries[key] = value.strip()
    return entries


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_triple(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated breakpoints, got {text!r}")
    return tuple(parts)  # type: ignore[return-value]


def _coerce(default: Any, text: str) -> Any:
    if isinstance(default, bool):
        return _parse_bool(text)
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    if isinstance(default, tuple):
        return _parse_triple(text)
    return text


def _field_defaults(cls) -> dict[str, Any]:
    out = {}
    for f in dataclasses.fields(cls):
        if f.default is not dataclasses.MISSING:
            out[f.name] = f.default
    return out


_LSTM_DEFAULTS = {k: v for k, v in _field_defaults(LstmConfig).items() if k != "rng_seed"}
_LSTM_LOOKBACK = dict(LstmConfig().lookback)
_COST_DEFAULTS = _field_defaults(CostModel)
_SIM_DEFAULTS = _field_defaults(SimulationConfig)
_BALANCER_DEFAULTS = {k: _SIM_DEFAULTS[k] for k in ("controller_capacity", "min_active", "other_domains")}
_ENGINE_DEFAULTS = {k: _SIM_DEFAULTS[k] for k in ("use_forecast", "warmup_extra", "window")}
_FUZZY_DEFAULTS = {
    "low": (DEFAULT_INPUT_TERMS[L].a, DEFAULT_INPUT_TERMS[L].b, DEFAULT_INPUT_TERMS[L].c),
    "medium": (DEFAULT_INPUT_TERMS[M].a, DEFAULT_INPUT_TERMS[M].b, DEFAULT_INPUT_TERMS[M].c),
    "high": (DEFAULT_INPUT_TERMS[H].a, DEFAULT_INPUT_TERMS[H].b, DEFAULT_INPUT_TERMS[H].c),
    "grid_points": GRID_POINTS,
}

# namespace -> {field: default}
_SECTIONS: dict[str, dict[str, Any]] = {
    "lstm": {**_LSTM_DEFAULTS, **{f"lookback.{m}": v for m, v in _LSTM_LOOKBACK.items()}},
    "fuzzy": _FUZZY_DEFAULTS,
    "cost": _COST_DEFAULTS,
    "balancer": _BALANCER_DEFAULTS,
    "engine": _ENGINE_DEFAULTS,
}
_TOP = {"scenario": "paper", "policy": "proposed", "seed": DEFAULT_SEED, "out": DEFAULT_OUT}


def known_keys() -> list[str]:
    keys = list(_TOP)
    for ns, fields in _SECTIONS.items():
        keys.extend(f"{ns}.{name}" for name in fields)
    return keys


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "paper"
    policy: str = "proposed"
    seed: int = DEFAULT_SEED
    out: str = DEFAULT_OUT
    lstm: Mapping[str, Any] = field(default_factory=dict)
    fuzzy: Mapping[str, Any] = field(default_factory=dict)
    cost: Mapping[str, Any] = field(default_factory=dict)
    balancer: Mapping[str, Any] = field(default_factory=dict)
    engine: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.policy not in (*POLICIES, ALL_POLICIES):
            raise ConfigError(
                f"policy: unknown value {self.policy!r}; valid values: {', '.join((*POLICIES, ALL_POLICIES))}"
            )
        for ns in _SECTIONS:
            for key in getattr(self, ns):
                if key not in _SECTIONS[ns]:
                    raise ConfigError(f"unknown config key {ns}.{key!r}")

    @property
    def policies(self) -> tuple[str, ...]:
        return POLICIES if self.policy == ALL_POLICIES else (self.policy,)

    def section(self, ns: str) -> dict[str, Any]:
        """Defaults for ``ns`` with this config's overrides applied."""
        return {**_SECTIONS[ns], **getattr(self, ns)}

    def lstm_config(self) -> LstmConfig:
        values = self.section("lstm")
        lookback = {m: values.pop(f"lookback.{m}") for m in METRICS}
        return LstmConfig(lookback=lookback, **values)

    def classifier(self) -> FuzzyClassifier:
        values = self.section("fuzzy")
        if all(values[k] == _FUZZY_DEFAULTS[k] for k in values):
            return FuzzyClassifier()
        clf = classifier_from_breakpoints(values["low"], values["medium"], values["high"])
        if values["grid_points"] != GRID_POINTS:
            clf = FuzzyClassifier(input_terms=clf.input_terms, grid_points=values["grid_points"])
        return clf

    def simulation_config(self) -> SimulationConfig:
        bal = self.section("balancer")
        eng = self.section("engine")
        return SimulationConfig(
            lstm=self.lstm_config(),
            cost=CostModel(**self.section("cost")),
            classifier=self.classifier(),
            controller_capacity=bal["controller_capacity"],
            min_active=bal["min_active"],
            other_domains=bal["other_domains"],
            window=eng["window"],
            warmup_extra=eng["warmup_extra"],
            use_forecast=eng["use_forecast"],
        )

    def resolved(self) -> dict[str, Any]:
        """Every key with its effective value, defaults included."""
        out = {k: getattr(self, k) for k in _TOP}
        for ns in _SECTIONS:
            for name, value in self.section(ns).items():
                out[f"{ns}.{name}"] = value
        return out

    def dumps(self) -> str:
        lines = []
        for key, value in self.resolved().items():
            if isinstance(value, tuple):
                value = ", ".join(repr(v) for v in value)
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"


def config_from_entries(entries: Mapping[str, str], origin: str = "<config>") -> RunConfig:
    top: dict[str, Any] = {}
    sections: dict[str, dict[str, Any]] = {ns: {} for ns in _SECTIONS}
    for key, text in entries.items():
        ns, _, name = key.partition(".")
        if key in _TOP:
            default = _TOP[key]
        elif ns in _SECTIONS and name in _SECTIONS[ns]:
            default = _SECTIONS[ns][name]
        else:
            raise ConfigError(f"{origin}: unknown config key {key!r}")
        try:
            value = _coerce(default, text)
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad value for {key!r}: {exc}") from None
        if key in _TOP:
            top[key] = value
        else:
            sections[ns][name] = value
    try:
        return RunConfig(**top, **sections)
    except ConfigError as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{origin}: {exc}") from None


def load_config(
    path: str | Path | None = None,
    overrides: Iterable[str] = (),
    **flags: Any,
) -> RunConfig:
    """Defaults, then the file at ``path``, then ``key=value`` overrides, then flags.

    Flags with value ``None`` are ignored so argparse namespaces pass straight in.
    """
    entries: dict[str, str] = {}
    origin = "<flags>"
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror or exc}") from None
        entries.update(parse_key_values(text, str(p)))
        origin = str(p)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects key=value, got {item!r}")
        entries[key.strip()] = value.strip()
    for key, value in flags.items():
        if value is not None:
            entries[key] = str(value)
    cfg = config_from_entries(entries, origin)
    # validate the derived objects eagerly so errors surface before a run
    try:
        cfg.simulation_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{origin}: {exc}") from None
    return cfg
