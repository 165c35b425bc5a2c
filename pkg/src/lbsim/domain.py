"""Servers, flows, utilization and the per-server history window."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Iterator, Sequence

import numpy as np

METRICS = ("cpu", "mem", "disk", "bw")
DEFAULT_WINDOW = 50

MB = 10**6
GB = 10**9


class LoadLevel(enum.IntEnum):
    UNDER = 0
    NORMAL = 1
    HIGHLY = 2
    OVER = 3

    @property
    def token(self) -> str:
        return self.name.lower()

    @classmethod
    def from_token(cls, token: str) -> "LoadLevel":
        try:
            return cls[token.upper()]
        except KeyError:
            raise ValueError(
                f"unknown load level {token!r}; expected one of "
                + ", ".join(level.token for level in cls)
            ) from None


@dataclass(frozen=True)
class ServerSpec:
    id: int
    cpu_capacity: float  # GHz
    mem_capacity: float  # bytes
    disk_capacity: float  # bytes
    bw_capacity: float  # bytes/s
    name: str = ""

    def __post_init__(self) -> None:
        for metric, cap in zip(METRICS, self.capacities):
            if not cap > 0:
                raise ValueError(f"server {self.id}: {metric} capacity must be > 0, got {cap}")

    @property
    def capacities(self) -> tuple[float, float, float, float]:
        return (self.cpu_capacity, self.mem_capacity, self.disk_capacity, self.bw_capacity)


@dataclass(frozen=True)
class FlowEvent:
    id: int
    size_bytes: float
    rate_bytes_per_s: float
    datagram_count: int

    def __post_init__(self) -> None:
        if not self.size_bytes > 0:
            raise ValueError(f"flow {self.id}: size must be > 0")
        if self.datagram_count < 1:
            raise ValueError(f"flow {self.id}: datagram_count must be >= 1")


@dataclass(frozen=True)
class ServerState:
    spec: ServerSpec
    load_cpu: float = 0.0
    load_mem: float = 0.0
    load_disk: float = 0.0
    load_bw: float = 0.0
    powered_on: bool = True
    hosted_flows: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if min(self.loads) < 0:
            raise ValueError(f"server {self.id}: negative load {self.loads}")
        if not self.powered_on and (any(self.loads) or self.hosted_flows):
            raise ValueError(f"server {self.id}: powered off but still carries load")

    @property
    def id(self) -> int:
        return self.spec.id

    @property
    def loads(self) -> tuple[float, float, float, float]:
        return (self.load_cpu, self.load_mem, self.load_disk, self.load_bw)

    def with_loads(self, loads: Sequence[float], hosted_flows: Sequence[int]) -> "ServerState":
        cpu, mem, disk, bw = loads
        return replace(
            self,
            load_cpu=cpu,
            load_mem=mem,
            load_disk=disk,
            load_bw=bw,
            hosted_flows=tuple(hosted_flows),
        )

    def powered_off(self) -> "ServerState":
        return ServerState(spec=self.spec, powered_on=False)


@dataclass(frozen=True)
class UtilizationVector:
    """Normalized (cpu, mem, disk, bw) utilization, each in [0, 1]."""

    x: float
    y: float
    z: float
    w: float
    saturated: tuple[bool, bool, bool, bool] = (False, False, False, False)

    def __post_init__(self) -> None:
        for v in (self.x, self.y, self.z, self.w):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"utilization component {v} outside [0, 1]")

    def __iter__(self) -> Iterator[float]:
        return iter((self.x, self.y, self.z, self.w))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.z, self.w)

    @property
    def mean(self) -> float:
        return (self.x + self.y + self.z + self.w) / 4.0

    @classmethod
    def zero(cls) -> "UtilizationVector":
        return cls(0.0, 0.0, 0.0, 0.0)


def normalize_utilization(state: ServerState) -> UtilizationVector:
    """Divide each load by its capacity, clamping into [0, 1].

    Components that had to be clamped are flagged in ``saturated``. A powered
    off server carries no load and yields the zero vector.
    """
    if not state.powered_on:
        return UtilizationVector.zero()
    values = []
    flags = []
    for load, cap in zip(state.loads, state.spec.capacities):
        ratio = load / cap
        flags.append(ratio > 1.0)
        values.append(min(max(ratio, 0.0), 1.0))
    return UtilizationVector(*values, saturated=tuple(flags))


def capacity_score(spec: ServerSpec, peers: Sequence[ServerSpec]) -> float:
    """Sum of each capacity relative to the largest one among ``peers``."""
    score = 0.0
    for k, cap in enumerate(spec.capacities):
        score += cap / max(p.capacities[k] for p in peers)
    return score


@dataclass(frozen=True)
class WindowMatrix:
    """Rolling 4 x W history of one server's utilization, oldest column first.

    Columns that have not been observed yet are zero. ``count`` is the number
    of real samples held (at most W).
    """

    width: int = DEFAULT_WINDOW
    values: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    count: int = 0

    def __post_init__(self) -> None:
        if self.width < 1:
            raise ValueError("window width must be >= 1")
        vals = self.values
        if vals is None:
            vals = np.zeros((len(METRICS), self.width))
        vals = np.array(vals, dtype=float)
        if vals.shape != (len(METRICS), self.width):
            raise ValueError(f"window must be 4 x {self.width}, got {vals.shape}")
        if vals.size and (vals.min() < 0 or vals.max() > 1):
            raise ValueError("window entries must lie in [0, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        if not 0 <= self.count <= self.width:
            raise ValueError("sample count out of range")

    def row(self, metric: str) -> np.ndarray:
        """Observed samples of one metric, oldest first (padding excluded)."""
        r = self.values[METRICS.index(metric)]
        return r[self.width - self.count :].copy()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WindowMatrix):
            return NotImplemented
        return (
            self.width == other.width
            and self.count == other.count
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]


def push_sample(window: WindowMatrix, u: UtilizationVector) -> WindowMatrix:
    shifted = np.empty_like(window.values)
    shifted[:, :-1] = window.values[:, 1:]
    shifted[:, -1] = u.as_tuple()
    return WindowMatrix(
        width=window.width, values=shifted, count=min(window.count + 1, window.width)
    )
