"""Placement, migration and power management for one controller domain."""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence, Union

from .domain import (
    FlowEvent,
    LoadLevel,
    ServerSpec,
    ServerState,
    capacity_score,
    normalize_utilization,
)

CANDIDATE_LEVELS = (LoadLevel.UNDER, LoadLevel.NORMAL)


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class PlaceFlow:
    flow_id: int
    target: int
    rule: str = "placement"


@dataclass(frozen=True)
class MoveFlow:
    flow_id: int
    source: int
    target: int
    rule: str


@dataclass(frozen=True)
class PowerOn:
    server_id: int
    rule: str = "power"


@dataclass(frozen=True)
class PowerOff:
    server_id: int
    rule: str = "consolidation"


@dataclass(frozen=True)
class AddServer:
    spec: ServerSpec
    rule: str = "fallback"


@dataclass(frozen=True)
class RedirectToOtherDomain:
    flow_id: int
    source: int | None = None
    rule: str = "fallback"


@dataclass(frozen=True)
class Diagnostic:
    message: str
    flow_id: int | None = None
    rule: str = "fallback"


Action = Union[PlaceFlow, MoveFlow, PowerOn, PowerOff, AddServer, RedirectToOtherDomain, Diagnostic]


def describe(action: Action) -> str:
    """Compact token used in traces, e.g. ``move:f7:2->3:C1``."""
    if isinstance(action, PlaceFlow):
        return f"place:f{action.flow_id}:{action.target}"
    if isinstance(action, MoveFlow):
        return f"move:f{action.flow_id}:{action.source}->{action.target}:{action.rule}"
    if isinstance(action, PowerOn):
        return f"power_on:{action.server_id}"
    if isinstance(action, PowerOff):
        return f"power_off:{action.server_id}"
    if isinstance(action, AddServer):
        return f"add_server:{action.spec.id}"
    if isinstance(action, RedirectToOtherDomain):
        return f"redirect:f{action.flow_id}"
    return f"diagnostic:{action.message}"


def servers_touched(action: Action) -> tuple[int, ...]:
    if isinstance(action, PlaceFlow):
        return (action.target,)
    if isinstance(action, MoveFlow):
        return (action.source, action.target)
    if isinstance(action, (PowerOn, PowerOff)):
        return (action.server_id,)
    if isinstance(action, AddServer):
        return (action.spec.id,)
    if isinstance(action, RedirectToOtherDomain) and action.source is not None:
        return (action.source,)
    return ()


@dataclass(frozen=True)
class MigrationPlan:
    actions: tuple[Action, ...] = ()
    chosen_target: int | None = None

    def __bool__(self) -> bool:
        return bool(self.actions)

    def __add__(self, other: "MigrationPlan") -> "MigrationPlan":
        return MigrationPlan(
            self.actions + other.actions,
            other.chosen_target if other.chosen_target is not None else self.chosen_target,
        )


@dataclass(frozen=True)
class DomainState:
    servers: tuple[ServerState, ...]
    levels: Mapping[int, LoadLevel] = field(default_factory=dict)
    flows: Mapping[int, FlowEvent] = field(default_factory=dict)
    controller_capacity: int = 8

    def __post_init__(self) -> None:
        if len(self.servers) > self.controller_capacity:
            raise ValueError(
                f"{len(self.servers)} servers exceed controller capacity {self.controller_capacity}"
            )
        on = {s.id for s in self.servers if s.powered_on}
        if set(self.levels) != on:
            raise ValueError("levels must be present exactly for powered-on servers")

    def server(self, sid: int) -> ServerState:
        for s in self.servers:
            if s.id == sid:
                return s
        raise KeyError(f"unknown server {sid}")

    @property
    def ids(self) -> list[int]:
        return [s.id for s in self.servers]

    @property
    def powered_on(self) -> list[int]:
        return [s.id for s in self.servers if s.powered_on]

    @property
    def off_pool(self) -> list[int]:
        return [s.id for s in self.servers if not s.powered_on]

    def total_loads(self) -> tuple[float, float, float, float]:
        return tuple(sum(s.loads[k] for s in self.servers) for k in range(4))  # type: ignore[return-value]


def host_flows(server: ServerState, flow_ids: Sequence[int], flows: Mapping[int, FlowEvent], cost) -> ServerState:
    """Server carrying exactly ``flow_ids``, loads summed from the cost model."""
    totals = [0.0, 0.0, 0.0, 0.0]
    for fid in flow_ids:
        for k, v in enumerate(cost.flow_load(flows[fid])):
            totals[k] += v
    return server.with_loads(totals, flow_ids)


def median_spec(specs: Sequence[ServerSpec], new_id: int) -> ServerSpec:
    return ServerSpec(
        id=new_id,
        cpu_capacity=statistics.median_low(s.cpu_capacity for s in specs),
        mem_capacity=statistics.median_low(s.mem_capacity for s in specs),
        disk_capacity=statistics.median_low(s.disk_capacity for s in specs),
        bw_capacity=statistics.median_low(s.bw_capacity for s in specs),
        name=f"Server{new_id}",
    )


@dataclass
class Balancer:
    """Decision engine; planning methods never mutate the state they get."""

    classify: Callable[[Iterable[float]], LoadLevel]
    cost: object
    min_active: int = 2
    other_domains: bool = False

    # -- level helpers -------------------------------------------------
    def level_of(self, server: ServerState) -> LoadLevel:
        return self.classify(normalize_utilization(server))

    def mean_util(self, server: ServerState) -> float:
        return normalize_utilization(server).mean

    def _with(self, state: DomainState, server: ServerState, extra: Sequence[int]) -> ServerState:
        return host_flows(server, server.hosted_flows + tuple(extra), state.flows, self.cost)

    def _ranked(self, state: DomainState, ids: Iterable[int]) -> list[int]:
        return sorted(ids, key=lambda sid: (self.mean_util(state.server(sid)), sid))

    # -- placement -----------------------------------------------------
    def select_server_for_flow(self, state: DomainState, flow: FlowEvent) -> int | None:
        """Lowest class first (under, normal, highly); None when none qualifies."""
        state = self._register(state, flow)
        for level in (LoadLevel.UNDER, LoadLevel.NORMAL, LoadLevel.HIGHLY):
            members = [sid for sid in state.powered_on if state.levels[sid] == level]
            for sid in self._ranked(state, members):
                after = self._with(state, state.server(sid), [flow.id])
                if self.level_of(after) != LoadLevel.OVER:
                    return sid
        return None

    def place_flow(self, state: DomainState, flow: FlowEvent) -> MigrationPlan:
        target = self.select_server_for_flow(state, flow)
        if target is not None:
            return MigrationPlan((PlaceFlow(flow.id, target),), target)
        return self.power_on_or_expand(state, flow)

    def power_on_or_expand(self, state: DomainState, flow: FlowEvent) -> MigrationPlan:
        state = self._register(state, flow)
        for sid in state.off_pool:
            fresh = self._with(state, replace(state.server(sid), powered_on=True), [flow.id])
            if self.level_of(fresh) != LoadLevel.OVER:
                return MigrationPlan((PowerOn(sid), PlaceFlow(flow.id, sid, "power")), sid)
        if self.other_domains:
            return MigrationPlan((RedirectToOtherDomain(flow.id),))
        if len(state.servers) < state.controller_capacity:
            spec = median_spec([s.spec for s in state.servers], max(state.ids) + 1)
            return MigrationPlan((AddServer(spec), PlaceFlow(flow.id, spec.id, "fallback")), spec.id)
        return MigrationPlan((Diagnostic("placement failed: domain exhausted", flow.id),))

    @staticmethod
    def _register(state: DomainState, flow: FlowEvent) -> DomainState:
        if flow.id in state.flows:
            return state
        return replace(state, flows={**state.flows, flow.id: flow})

    # -- migration -----------------------------------------------------
    def candidate_set(self, state: DomainState, exclude: int | None = None) -> list[int]:
        return [
            sid
            for sid in state.powered_on
            if sid != exclude and state.levels[sid] in CANDIDATE_LEVELS
        ]

    def pick_target(self, state: DomainState, candidates: Sequence[int], flow_id: int) -> tuple[int | None, str | None]:
        """Best target for one flow under the three receiving conditions.

        C1: under stays under; C2: under becomes normal; C3: normal stays normal.
        """
        classes: dict[str, list[int]] = {"C1": [], "C2": [], "C3": []}
        for sid in candidates:
            before = state.levels[sid]
            after = self.level_of(self._with(state, state.server(sid), [flow_id]))
            if before == LoadLevel.UNDER and after == LoadLevel.UNDER:
                classes["C1"].append(sid)
            elif before == LoadLevel.UNDER and after == LoadLevel.NORMAL:
                classes["C2"].append(sid)
            elif before == LoadLevel.NORMAL and after == LoadLevel.NORMAL:
                classes["C3"].append(sid)
        for rule, members in classes.items():
            if members:
                return self._ranked(state, members)[0], rule
        return None, None

    def plan_overload_migration(self, state: DomainState, source: int) -> MigrationPlan:
        return self._migrate(state, source, LoadLevel.OVER, allow_expand=True)

    def plan_highlyload_migration(self, state: DomainState, source: int) -> MigrationPlan:
        return self._migrate(state, source, LoadLevel.HIGHLY, allow_expand=False)

    def _migrate(self, state: DomainState, source: int, floor: LoadLevel, allow_expand: bool) -> MigrationPlan:
        plan = MigrationPlan()
        work = state
        while work.levels.get(source, LoadLevel.UNDER) >= floor and work.server(source).hosted_flows:
            fid = work.server(source).hosted_flows[-1]
            target, rule = self.pick_target(work, self.candidate_set(work, exclude=source), fid)
            if target is not None:
                step = MigrationPlan((MoveFlow(fid, source, target, rule),), target)
            else:
                step = self._fallback(work, source, fid, allow_expand)
                if step is None:
                    break
            plan = plan + step
            work = self.apply_plan(work, step)
            if isinstance(step.actions[-1], (RedirectToOtherDomain, Diagnostic)):
                break
        return plan

    def _fallback(self, state: DomainState, source: int, fid: int, allow_expand: bool) -> MigrationPlan | None:
        for sid in state.off_pool:
            fresh = self._with(state, replace(state.server(sid), powered_on=True), [fid])
            if self.level_of(fresh) != LoadLevel.OVER:
                return MigrationPlan((PowerOn(sid), MoveFlow(fid, source, sid, "power")), sid)
        if not allow_expand:
            return None
        if self.other_domains:
            return MigrationPlan((RedirectToOtherDomain(fid, source),))
        if len(state.servers) < state.controller_capacity:
            spec = median_spec([s.spec for s in state.servers], max(state.ids) + 1)
            return MigrationPlan((AddServer(spec), MoveFlow(fid, source, spec.id, "fallback")), spec.id)
        return MigrationPlan((Diagnostic(f"no target for flow {fid} from server {source}", fid),))

    # -- consolidation ---------------------------------------------------
    def consolidate_underload(self, state: DomainState) -> MigrationPlan:
        """Merge under-loaded servers pairwise and power the emptied ones off.

        Sources are taken in ascending load (smaller servers first on ties);
        the absorbing server must still be under-loaded afterwards. At least
        ``min_active`` servers stay on.
        """
        plan = MigrationPlan()
        work = state
        specs = [s.spec for s in state.servers]
        while len(work.powered_on) > self.min_active:
            under = [sid for sid in work.powered_on if work.levels[sid] == LoadLevel.UNDER]
            if len(under) < 2:
                break
            sources = sorted(
                under,
                key=lambda sid: (
                    self.mean_util(work.server(sid)),
                    capacity_score(work.server(sid).spec, specs),
                    sid,
                ),
            )
            step = None
            for src in sources:
                moving = work.server(src).hosted_flows
                fits = [
                    t
                    for t in under
                    if t != src
                    and self.level_of(self._with(work, work.server(t), moving)) == LoadLevel.UNDER
                ]
                if fits:
                    target = min(fits, key=lambda t: (-capacity_score(work.server(t).spec, specs), t))
                    actions = [MoveFlow(fid, src, target, "consolidation") for fid in moving]
                    step = MigrationPlan((*actions, PowerOff(src)), target)
                    break
            if step is None:
                break
            plan = plan + step
            work = self.apply_plan(work, step)
        return plan

    # -- one balancing pass ----------------------------------------------
    def balance(self, state: DomainState) -> tuple[DomainState, list[MigrationPlan]]:
        plans = []
        work = state
        if sum(1 for sid in work.powered_on if work.levels[sid] == LoadLevel.UNDER) >= 2:
            plan = self.consolidate_underload(work)
            if plan:
                plans.append(plan)
                work = self.apply_plan(work, plan)
        for floor in (LoadLevel.OVER, LoadLevel.HIGHLY):
            sources = [sid for sid in work.powered_on if work.levels[sid] == floor]
            sources.sort(key=lambda sid: (-self.mean_util(work.server(sid)), sid))
            for src in sources:
                if work.server(src).powered_on and work.levels[src] == floor:
                    if floor == LoadLevel.OVER:
                        plan = self.plan_overload_migration(work, src)
                    else:
                        plan = self.plan_highlyload_migration(work, src)
                    if plan:
                        plans.append(plan)
                        work = self.apply_plan(work, plan)
        return work, plans

    # -- applying plans --------------------------------------------------
    def apply_plan(self, state: DomainState, plan: MigrationPlan, flows: Mapping[int, FlowEvent] | None = None) -> DomainState:
        """Apply actions in order; touched servers get their levels recomputed."""
        servers = {s.id: s for s in state.servers}
        order = [s.id for s in state.servers]
        levels = dict(state.levels)
        known = dict(state.flows)
        if flows:
            known.update(flows)

        def rehost(sid: int, flow_ids: Sequence[int]) -> None:
            servers[sid] = host_flows(servers[sid], flow_ids, known, self.cost)

        for idx, action in enumerate(plan.actions):
            try:
                if isinstance(action, PlaceFlow):
                    tgt = servers[action.target]
                    if not tgt.powered_on:
                        raise PlanError("target is powered off")
                    if action.flow_id not in known:
                        raise PlanError(f"unknown flow {action.flow_id}")
                    if any(action.flow_id in s.hosted_flows for s in servers.values()):
                        raise PlanError(f"flow {action.flow_id} already placed")
                    rehost(tgt.id, tgt.hosted_flows + (action.flow_id,))
                elif isinstance(action, MoveFlow):
                    src, tgt = servers[action.source], servers[action.target]
                    if action.flow_id not in src.hosted_flows:
                        raise PlanError(f"flow {action.flow_id} not on server {src.id}")
                    if not tgt.powered_on:
                        raise PlanError(f"target {tgt.id} is powered off")
                    if src.id == tgt.id:
                        raise PlanError("source and target coincide")
                    rehost(src.id, tuple(f for f in src.hosted_flows if f != action.flow_id))
                    rehost(tgt.id, tgt.hosted_flows + (action.flow_id,))
                elif isinstance(action, PowerOn):
                    if servers[action.server_id].powered_on:
                        raise PlanError("server already on")
                    servers[action.server_id] = replace(servers[action.server_id], powered_on=True)
                elif isinstance(action, PowerOff):
                    srv = servers[action.server_id]
                    if not srv.powered_on:
                        raise PlanError("server already off")
                    if srv.hosted_flows:
                        raise PlanError("server still hosts flows")
                    servers[srv.id] = srv.powered_off()
                elif isinstance(action, AddServer):
                    if action.spec.id in servers:
                        raise PlanError(f"server id {action.spec.id} already exists")
                    if len(servers) >= state.controller_capacity:
                        raise PlanError("controller capacity exhausted")
                    servers[action.spec.id] = ServerState(spec=action.spec)
                    order.append(action.spec.id)
                elif isinstance(action, RedirectToOtherDomain):
                    if action.source is not None:
                        src = servers[action.source]
                        if action.flow_id not in src.hosted_flows:
                            raise PlanError(f"flow {action.flow_id} not on server {src.id}")
                        rehost(src.id, tuple(f for f in src.hosted_flows if f != action.flow_id))
                    known.pop(action.flow_id, None)
                elif isinstance(action, Diagnostic):
                    pass
                else:
                    raise PlanError(f"unknown action {action!r}")
            except (PlanError, KeyError) as exc:
                raise PlanError(f"action {idx} ({describe(action)}) not applicable: {exc}") from None
            for sid in servers_touched(action):
                if servers[sid].powered_on:
                    levels[sid] = self.level_of(servers[sid])
                else:
                    levels.pop(sid, None)
        return DomainState(
            servers=tuple(servers[sid] for sid in order),
            levels=levels,
            flows=known,
            controller_capacity=state.controller_capacity,
        )
