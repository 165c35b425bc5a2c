"""Simulation loop: measure, forecast, classify, balance, place, record."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .balancer import Balancer, DomainState, MigrationPlan, PlaceFlow, describe
from .baselines import RoundRobinCursor, random_select, round_robin_select
from .domain import (
    DEFAULT_WINDOW,
    METRICS,
    FlowEvent,
    LoadLevel,
    ServerState,
    UtilizationVector,
    WindowMatrix,
    normalize_utilization,
    push_sample,
)
from .forecaster import ForecastVector, LstmConfig, predict_next, train_forecaster
from .fuzzy import FuzzyClassifier
from .scenario import CostModel, Scenario

log = logging.getLogger(__name__)

POLICIES = ("proposed", "random", "round-robin")
DEFAULT_SEED = 0


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimulationConfig:
    lstm: LstmConfig = field(default_factory=LstmConfig)
    cost: CostModel = field(default_factory=CostModel)
    classifier: FuzzyClassifier = field(default_factory=FuzzyClassifier)
    controller_capacity: int = 8
    min_active: int = 2
    other_domains: bool = False
    window: int = DEFAULT_WINDOW
    warmup_extra: int = 5
    use_forecast: bool = True

    @property
    def warmup(self) -> int:
        return self.lstm.max_lookback + self.warmup_extra


@dataclass(frozen=True)
class StepRecord:
    step: int
    flow_id: int | None
    policy: str
    decision: int | None
    utilization: Mapping[int, UtilizationVector]
    levels: Mapping[int, LoadLevel | None]
    powered_on: Mapping[int, bool]
    actions: tuple = ()
    forecasts: Mapping[int, ForecastVector] = field(default_factory=dict)
    decision_levels: Mapping[int, LoadLevel] = field(default_factory=dict)

    def actions_for(self, server_id: int) -> list[str]:
        from .balancer import servers_touched

        return [describe(a) for a in self.actions if server_id in servers_touched(a)]


@dataclass
class SimulationTrace:
    policy: str
    seed: int
    scenario: str
    records: list[StepRecord] = field(default_factory=list)

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    def server_ids(self) -> list[int]:
        ids: set[int] = set()
        for rec in self.records:
            ids.update(rec.powered_on)
        return sorted(ids)

    def series(self, server_id: int, metric: str) -> list[float]:
        k = METRICS.index(metric)
        return [
            rec.utilization[server_id].as_tuple()[k] if server_id in rec.utilization else 0.0
            for rec in self.records
        ]

    def off_server_steps(self) -> int:
        return sum(sum(1 for on in rec.powered_on.values() if not on) for rec in self.records)


@dataclass
class EngineState:
    domain: DomainState
    windows: dict[int, WindowMatrix]
    cursor: RoundRobinCursor
    rng: np.random.Generator
    step_index: int = 0


def guarded(forecast: ForecastVector, measured: UtilizationVector) -> tuple[float, float, float, float]:
    """Forecast floored at the current measurement, component-wise.

    A short, barely trained history tends to forecast toward its minimum; the
    floor keeps a prediction from hiding load the server already carries.
    """
    return tuple(max(f, m) for f, m in zip(forecast.as_tuple(), measured.as_tuple()))  # type: ignore[return-value]


def _seed_for(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


class Simulator:
    def __init__(self, scenario: Scenario, policy: str, config: SimulationConfig | None = None, seed: int = DEFAULT_SEED):
        if policy not in POLICIES:
            raise ValueError(f"unknown policy {policy!r}; expected one of {', '.join(POLICIES)}")
        self.scenario = scenario
        self.policy = policy
        self.config = config or SimulationConfig()
        self.seed = seed
        self.classifier = self.config.classifier
        self.balancer = Balancer(
            classify=self.classifier.classify,
            cost=self.config.cost,
            min_active=self.config.min_active,
            other_domains=self.config.other_domains,
        )

    # -- state --------------------------------------------------------------
    def initial_state(self) -> EngineState:
        servers = tuple(ServerState(spec=s) for s in self.scenario.servers)
        levels = {s.id: self.balancer.level_of(s) for s in servers}
        domain = DomainState(servers, levels, {}, self.config.controller_capacity)
        return EngineState(
            domain=domain,
            windows={},
            cursor=RoundRobinCursor(),
            rng=np.random.default_rng(self.seed),
        )

    def actual_levels(self, domain: DomainState) -> dict[int, LoadLevel]:
        return {sid: self.balancer.level_of(domain.server(sid)) for sid in domain.powered_on}

    def record(self, es: EngineState, flow_id, decision, actions, forecasts, decision_levels) -> StepRecord:
        domain = es.domain
        return StepRecord(
            step=es.step_index,
            flow_id=flow_id,
            policy=self.policy,
            decision=decision,
            utilization={s.id: normalize_utilization(s) for s in domain.servers},
            levels={
                s.id: (self.balancer.level_of(s) if s.powered_on else None) for s in domain.servers
            },
            powered_on={s.id: s.powered_on for s in domain.servers},
            actions=tuple(actions),
            forecasts=dict(forecasts),
            decision_levels=dict(decision_levels),
        )

    # -- forecasting ------------------------------------------------------
    def forecast(self, window: WindowMatrix, server_id: int, step: int) -> ForecastVector:
        values = []
        for k, metric in enumerate(METRICS):
            series = window.row(metric)
            lookback = self.config.lstm.lookback[metric]
            if np.all(series == series[0]):
                # a degenerate scaler inverts every prediction to the constant
                values.append(float(series[0]))
                continue
            cfg = replace(self.config.lstm, rng_seed=_seed_for(self.seed, step, server_id, k))
            model = train_forecaster(series, cfg, metric=metric)
            values.append(predict_next(model.params, model.scaler, series[-lookback:], lookback))
        return ForecastVector(*values)

    # -- one step -----------------------------------------------------------
    def step(self, es: EngineState, flow: FlowEvent) -> tuple[EngineState, StepRecord]:
        idx = es.step_index + 1
        try:
            return self._step(es, flow, idx)
        except SimulationError:
            raise
        except Exception as exc:
            raise SimulationError(f"step {idx} (flow {flow.id}): {exc}") from exc

    def _step(self, es: EngineState, flow: FlowEvent, idx: int) -> tuple[EngineState, StepRecord]:
        domain = es.domain
        windows = {}
        for s in domain.servers:
            if s.powered_on:
                prev = es.windows.get(s.id, WindowMatrix(self.config.window))
                windows[s.id] = push_sample(prev, normalize_utilization(s))

        forecasts: dict[int, ForecastVector] = {}
        actions: list = []
        cursor = es.cursor
        if self.policy == "proposed":
            levels = {}
            for sid in domain.powered_on:
                win = windows[sid]
                measured = normalize_utilization(domain.server(sid))
                if self.config.use_forecast and win.count >= self.config.warmup:
                    forecasts[sid] = self.forecast(win, sid, idx)
                    levels[sid] = self.classifier.classify(guarded(forecasts[sid], measured))
                else:
                    levels[sid] = self.classifier.classify(measured)
            domain = replace(domain, levels=levels)
            domain, plans = self.balancer.balance(domain)
            for plan in plans:
                actions.extend(plan.actions)
            decision_levels = dict(domain.levels)
            domain = replace(domain, flows={**domain.flows, flow.id: flow})
            placement = self.balancer.place_flow(domain, flow)
        else:
            domain = replace(domain, levels=self.actual_levels(domain), flows={**domain.flows, flow.id: flow})
            decision_levels = dict(domain.levels)
            if self.policy == "random":
                target = random_select(domain, es.rng)
            else:
                target, cursor = round_robin_select(domain, cursor)
            placement = MigrationPlan((PlaceFlow(flow.id, target, self.policy),), target)
        domain = self.balancer.apply_plan(domain, placement)
        actions.extend(placement.actions)
        decision = next((a.target for a in placement.actions if isinstance(a, PlaceFlow)), None)

        # windows follow power state: a server switched off loses its history
        windows = {sid: w for sid, w in windows.items() if domain.server(sid).powered_on}
        new_es = EngineState(domain, windows, cursor, es.rng, idx)
        rec = self.record(new_es, flow.id, decision, actions, forecasts, decision_levels)
        log.debug("step %d flow %d -> %s: %s", idx, flow.id, decision, [describe(a) for a in actions])
        return new_es, rec

    def run(self, flows: Sequence[FlowEvent] | None = None) -> SimulationTrace:
        flows = self.scenario.flows if flows is None else flows
        es = self.initial_state()
        trace = SimulationTrace(self.policy, self.seed, self.scenario.name)
        trace.records.append(self.record(es, None, None, (), {}, es.domain.levels))
        for flow in flows:
            es, rec = self.step(es, flow)
            trace.records.append(rec)
        return trace


def run(scenario: Scenario, policy: str, config: SimulationConfig | None = None, seed: int = DEFAULT_SEED) -> SimulationTrace:
    return Simulator(scenario, policy, config, seed).run()


def energy_summary(trace: SimulationTrace, scenario: Scenario) -> dict[str, int]:
    """Server-steps and switch-steps spent powered off over the run."""
    all_ids = trace.server_ids()
    switch_off = 0
    for rec in trace.records:
        by_switch: dict[int, list[bool]] = {}
        for sid, on in rec.powered_on.items():
            by_switch.setdefault(scenario.topology.switch_of(sid, all_ids), []).append(on)
        switch_off += sum(1 for states in by_switch.values() if not any(states))
    return {"server_off_steps": trace.off_server_steps(), "switch_off_steps": switch_off}
