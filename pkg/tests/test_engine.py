import pytest

from lbsim.balancer import PlaceFlow
from lbsim.domain import LoadLevel, UtilizationVector
from lbsim.engine import (
    SimulationConfig,
    SimulationError,
    Simulator,
    energy_summary,
    guarded,
    run,
)
from lbsim.forecaster import ForecastVector
from lbsim.report import format_trace_csv
from lbsim.scenario import build_paper_scenario

FAST = SimulationConfig(use_forecast=False)


def test_trace_shape(paper_runs):
    for policy, trace in paper_runs["traces"].items():
        assert trace.policy == policy
        assert len(trace.records) == 27
        assert trace.records[0].step == 0 and trace.records[0].flow_id is None
        assert [r.flow_id for r in trace.records[1:]] == list(range(1, 27))
        assert trace.server_ids() == [1, 2, 3, 4]


def test_every_flow_is_placed_once(paper_runs):
    for trace in paper_runs["traces"].values():
        for rec in trace.records[1:]:
            places = [a for a in rec.actions if isinstance(a, PlaceFlow)]
            assert len(places) == 1 and places[0].flow_id == rec.flow_id
            assert rec.decision == places[0].target


def test_baselines_only_place(paper_runs):
    for policy in ("random", "round-robin"):
        for rec in paper_runs["traces"][policy].records[1:]:
            assert all(isinstance(a, PlaceFlow) for a in rec.actions)


def test_round_robin_decisions_cycle(paper_runs):
    decisions = [r.decision for r in paper_runs["traces"]["round-robin"].records[1:]]
    assert decisions == [1, 2, 3, 4] * 6 + [1, 2]


def test_levels_are_actual_classifications(paper_runs):
    clf = SimulationConfig().classifier
    for trace in paper_runs["traces"].values():
        for rec in trace.records:
            for sid, on in rec.powered_on.items():
                if on:
                    assert rec.levels[sid] == clf.classify(rec.utilization[sid])
                else:
                    assert rec.levels[sid] is None
                    assert rec.utilization[sid] == UtilizationVector.zero()


def test_forecasts_start_after_warmup(paper_runs):
    warm = SimulationConfig().warmup
    assert warm == 10
    trace = paper_runs["traces"]["proposed"]
    for rec in trace.records[1:warm]:
        assert rec.forecasts == {}
    assert 1 in trace.records[warm].forecasts


def test_guarded_is_componentwise_max():
    f = ForecastVector(0.1, 0.9, 0.4, 0.0)
    m = UtilizationVector(0.3, 0.2, 0.4, 0.7)
    assert guarded(f, m) == (0.3, 0.9, 0.4, 0.7)


def test_windows_dropped_for_powered_off_servers():
    sim = Simulator(build_paper_scenario(), "proposed", FAST)
    es = sim.initial_state()
    flows = build_paper_scenario().flows
    es, rec = sim.step(es, flows[0])
    off = [sid for sid, on in rec.powered_on.items() if not on]
    assert off == [3, 4]
    assert set(es.windows) == {1, 2}
    es, _ = sim.step(es, flows[1])
    assert es.windows[1].count == 2


def test_runs_are_deterministic():
    sc = build_paper_scenario()
    for policy in ("proposed", "random", "round-robin"):
        a = format_trace_csv(run(sc, policy, FAST, 3))
        b = format_trace_csv(run(sc, policy, FAST, 3))
        assert a == b


def test_random_seed_changes_decisions():
    sc = build_paper_scenario()
    a = [r.decision for r in run(sc, "random", FAST, 1).records]
    b = [r.decision for r in run(sc, "random", FAST, 2).records]
    assert a != b


def test_unknown_policy():
    with pytest.raises(ValueError, match="round-robin"):
        Simulator(build_paper_scenario(), "greedy")


def test_step_failure_names_step():
    def broken(values):
        raise RuntimeError("classifier exploded")

    sim = Simulator(build_paper_scenario(), "proposed", FAST)
    es = sim.initial_state()
    sim.classifier = type("C", (), {"classify": staticmethod(broken)})()
    with pytest.raises(SimulationError, match=r"step 1 \(flow 1\).*exploded"):
        sim.step(es, build_paper_scenario().flows[0])


def test_energy_summary_counts_off_steps(paper_runs):
    trace = paper_runs["traces"]["proposed"]
    summary = energy_summary(trace, paper_runs["scenario"])
    manual = sum(1 for r in trace.records for on in r.powered_on.values() if not on)
    assert summary["server_off_steps"] == manual > 0
    # one server per switch in the reference topology
    assert summary["switch_off_steps"] == manual
    assert energy_summary(paper_runs["traces"]["round-robin"], paper_runs["scenario"])["server_off_steps"] == 0


def test_decision_levels_cover_powered_on(paper_runs):
    for rec in paper_runs["traces"]["proposed"].records[1:]:
        assert all(isinstance(v, LoadLevel) for v in rec.decision_levels.values())


def test_no_flow_placed_on_overloaded_server(paper_runs):
    for rec in paper_runs["traces"]["proposed"].records[1:]:
        assert rec.decision_levels[rec.decision] != LoadLevel.OVER


def test_baselines_never_change_power(paper_runs):
    for policy in ("random", "round-robin"):
        assert all(all(r.powered_on.values()) for r in paper_runs["traces"][policy].records)


def test_bandwidth_overshoot_bounded_by_one_flow_rate(paper_runs):
    scenario = paper_runs["scenario"]
    caps = {s.id: s.bw_capacity for s in scenario.servers}
    for policy in ("proposed", "random", "round-robin"):
        sim = Simulator(scenario, policy, FAST if policy != "proposed" else SimulationConfig(), 0)
        es = sim.initial_state()
        for flow in scenario.flows:
            es, _ = sim.step(es, flow)
            for s in es.domain.servers:
                if s.hosted_flows:
                    largest = max(es.domain.flows[f].rate_bytes_per_s for f in s.hosted_flows)
                    assert s.load_bw <= caps[s.id] + largest


def test_empty_flow_list_keeps_initial_record():
    trace = Simulator(build_paper_scenario(), "proposed", FAST).run(flows=())
    assert len(trace.records) == 1
