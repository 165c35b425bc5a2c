"""Evaluation scenario: flows, servers, topology and the flow-to-load cost model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .domain import GB, MB, FlowEvent, ServerSpec

DATAGRAM_BYTES = 1470
FLOW_DURATION_S = 10.0


@dataclass(frozen=True)
class CostModel:
    """Linear map from a flow's rate (in MB/s, 1 MB = 10**6 bytes) to load.

    ``bw_per_rate`` is dimensionless (bytes/s of link load per byte/s of flow
    rate); the other coefficients give GHz, bytes and bytes of load per MB/s.
    """

    bw_per_rate: float = 0.28
    cpu_per_mbps: float = 0.018
    mem_per_mbps: float = 3.0 * MB
    disk_per_mbps: float = 10.0 * MB

    def __post_init__(self) -> None:
        for name in ("bw_per_rate", "cpu_per_mbps", "mem_per_mbps", "disk_per_mbps"):
            if getattr(self, name) < 0:
                raise ValueError(f"cost coefficient {name} must be >= 0")

    def flow_load(self, flow: FlowEvent) -> tuple[float, float, float, float]:
        mbps = flow.rate_bytes_per_s / MB
        return (
            self.cpu_per_mbps * mbps,
            self.mem_per_mbps * mbps,
            self.disk_per_mbps * mbps,
            self.bw_per_rate * flow.rate_bytes_per_s,
        )


@dataclass(frozen=True)
class Topology:
    switches: int = 4
    clients: int = 1
    # server id -> switch index; one switch per server unless given
    attachment: dict[int, int] = field(default_factory=dict)

    def switch_of(self, server_id: int, server_ids: list[int]) -> int:
        if server_id in self.attachment:
            return self.attachment[server_id]
        return sorted(server_ids).index(server_id) % max(self.switches, 1)


@dataclass(frozen=True)
class Scenario:
    flows: tuple[FlowEvent, ...]
    servers: tuple[ServerSpec, ...]
    topology: Topology = Topology()
    sample_interval: float = 1.0
    name: str = "custom"

    def __post_init__(self) -> None:
        if not self.servers:
            raise ValueError("scenario needs at least one server")
        ids = [s.id for s in self.servers]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate server ids")


def datagram_count(flow_size_bytes: float) -> int:
    if not flow_size_bytes > 0:
        raise ValueError("flow size must be > 0")
    return math.ceil(flow_size_bytes / DATAGRAM_BYTES)


def make_flow(flow_id: int, size_bytes: float, duration_s: float = FLOW_DURATION_S) -> FlowEvent:
    return FlowEvent(
        id=flow_id,
        size_bytes=size_bytes,
        rate_bytes_per_s=size_bytes / duration_s,
        datagram_count=datagram_count(size_bytes),
    )


PAPER_SERVERS = (
    ServerSpec(1, 1.0, 500 * MB, 900 * MB, 20 * MB, "Server1"),
    ServerSpec(2, 2.0, 550 * MB, 2 * GB, 20 * MB, "Server2"),
    ServerSpec(3, 1.0, 420 * MB, 800 * MB, 20 * MB, "Server3"),
    ServerSpec(4, 1.0, 450 * MB, 700 * MB, 20 * MB, "Server4"),
)


def build_paper_scenario() -> Scenario:
    """26 UDP streams of 10, 20, ..., 260 MB against the four reference servers."""
    flows = tuple(make_flow(k, 10 * k * MB) for k in range(1, 27))
    return Scenario(flows=flows, servers=PAPER_SERVERS, topology=Topology(4, 1), name="paper")


PRESETS = {"paper": build_paper_scenario}


def load_scenario(source: str) -> Scenario:
    """A preset name or a key=value scenario file.

    File keys::

        name = lab
        server.<id> = cpu_ghz, mem_bytes, disk_bytes, bw_bytes_per_s
        flow.<id> = size_bytes [, duration_s]
        topology.switches = 4
        topology.clients = 1
        sample_interval = 1.0
    """
    if source in PRESETS:
        return PRESETS[source]()
    path = Path(source)
    if not path.exists():
        raise ValueError(f"unknown scenario {source!r}: not a preset ({', '.join(PRESETS)}) or file")
    from .config import parse_key_values

    entries = parse_key_values(path.read_text(), str(path))
    servers, flows = [], []
    switches, clients, interval, name = 4, 1, 1.0, path.stem
    for key, value in entries.items():
        head, _, rest = key.partition(".")
        try:
            if head == "server":
                cpu, mem, disk, bw = (float(v) for v in value.split(","))
                servers.append(ServerSpec(int(rest), cpu, mem, disk, bw, f"Server{rest}"))
            elif head == "flow":
                parts = [float(v) for v in value.split(",")]
                flows.append(make_flow(int(rest), *parts))
            elif key == "topology.switches":
                switches = int(value)
            elif key == "topology.clients":
                clients = int(value)
            elif key == "sample_interval":
                interval = float(value)
            elif key == "name":
                name = value
            else:
                raise ValueError(f"unknown scenario key {key!r}")
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{path}: bad value for {key!r}: {exc}") from None
    return Scenario(
        flows=tuple(sorted(flows, key=lambda f: f.id)),
        servers=tuple(sorted(servers, key=lambda s: s.id)),
        topology=Topology(switches, clients),
        sample_interval=interval,
        name=name,
    )
