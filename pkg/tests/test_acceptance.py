"""Acceptance criteria A1-A7; each test prints one PASS/FAIL line."""

import itertools
import time

import numpy as np
import pytest

from _harness import priority_mismatches
from _oracles import brute_metrics, finite_difference_grads, gradient_mismatches
from lbsim.domain import LoadLevel
from lbsim.engine import DEFAULT_SEED, SimulationConfig, run
from lbsim.forecaster import LstmConfig, evaluate, init_parameters, lstm_backward, lstm_forward, train_forecaster
from lbsim.fuzzy import FuzzyClassifier, LinguisticTerm, build_rule_base
from lbsim.report import format_trace_csv
from test_fuzzy import PEAK, REFERENCE_RULES, _ante

U, N, Hi, O = LoadLevel


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{name}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, f"{name}: {detail}"

    return emit


def test_a1_gradient_correctness(verdict):
    started = time.perf_counter()
    rng = np.random.default_rng(2024)
    failures = []
    for k in range(20):
        hidden = int(rng.choice([2, 3, 5]))
        lookback = int(rng.choice([2, 5]))
        layers = int(rng.choice([1, 2]))
        params = init_parameters(hidden, layers, rng)
        for key in params:
            params[key][...] = rng.normal(0, 1, params[key].shape)
        x = rng.uniform(0, 1, lookback)
        y = float(rng.uniform(0, 1))
        _, cache = lstm_forward(params, x)
        analytic = lstm_backward(params, cache, y)
        numeric = finite_difference_grads(params, lambda p: 0.5 * (lstm_forward(p, x)[0] - y) ** 2)
        bad = gradient_mismatches(analytic, numeric, threshold=1e-6, rtol=1e-4)
        if bad:
            failures.append((k, hidden, lookback, layers, bad[:3]))
    elapsed = time.perf_counter() - started
    verdict("A1", not failures and elapsed < 30, f"20 instances, {len(failures)} with mismatches, {elapsed:.1f} s")


def test_a2_metrics_oracle(verdict):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 60))
        a = rng.normal(0, 1, n)
        p = a + rng.normal(0, 0.5, n)
        got = evaluate(a, p)
        want = brute_metrics(list(a), list(p))
        worst = max(worst, *(abs(got[k] - w) for k, w in zip(("rmse", "mae", "r2"), want)))
    r = evaluate([1, 2, 3], [1, 2, 4])
    triple_ok = (
        abs(r["rmse"] - 0.5774) <= 1e-4 and abs(r["mae"] - 0.3333) <= 1e-4 and abs(r["r2"] - 0.5) <= 1e-6
    )
    verdict(
        "A2",
        worst <= 1e-12 and triple_ok,
        f"max deviation {worst:.2e} over 100 pairs; worked triple "
        f"({r['rmse']:.4f}, {r['mae']:.4f}, {r['r2']:.6f})",
    )


def test_a3_learnability(verdict):
    cfg = LstmConfig()
    assert (cfg.hidden_units, cfg.num_layers, cfg.lookback["cpu"], cfg.epochs, cfg.batch_size, cfg.learning_rate) == (
        5, 1, 5, 15, 1, 0.001
    )
    series = np.sin(2 * np.pi * np.arange(200) / 50)
    started = time.perf_counter()
    report = train_forecaster(series, cfg, metric="cpu").report
    elapsed = time.perf_counter() - started
    verdict("A3", report.r2 >= 0.9 and elapsed < 60, f"held-out R2 {report.r2:.4f}, {elapsed:.1f} s")


def test_a4_rule_base_fidelity(verdict):
    clf = FuzzyClassifier()
    rb = build_rule_base()
    antes = list(itertools.product(LinguisticTerm, repeat=4))
    corner_bad = [a for a in antes if clf.classify([PEAK[t] for t in a]) != rb.consequent(a)]
    listed_bad = [n for n, (code, lvl) in REFERENCE_RULES.items() if rb.consequent(_ante(code)) != lvl]
    mono_bad = [
        (a, b)
        for a in antes
        for b in antes
        if all(x <= y for x, y in zip(a, b)) and rb.consequent(a) > rb.consequent(b)
    ]
    verdict(
        "A4",
        not corner_bad and not listed_bad and not mono_bad and len(REFERENCE_RULES) == 45,
        f"corners {81 - len(corner_bad)}/81, listed {45 - len(listed_bad)}/45, monotonicity violations {len(mono_bad)}",
    )


def _over_server_receives_later_flow(trace):
    for i, rec in enumerate(trace.records):
        for sid, lvl in rec.levels.items():
            if lvl == O and any(later.decision == sid for later in trace.records[i + 1 :]):
                return True
    return False


def test_a5_scenario_reproduction(verdict, paper_runs):
    traces = paper_runs["traces"]
    prop = traces["proposed"]
    never_over = all(lvl != O for rec in prop.records for lvl in rec.levels.values())
    final = prop.final
    all_highly = len(final.levels) == 4 and all(lvl == Hi for lvl in final.levels.values())
    a = never_over and all_highly
    b = _over_server_receives_later_flow(traces["random"])
    rr_over = sum(1 for lvl in traces["round-robin"].final.levels.values() if lvl == O)
    c = rr_over >= 2
    off_at_start = sum(1 for on in prop.records[1].powered_on.values() if not on)
    half = len(prop.records[1:]) // 2
    kept_off = all(any(not on for on in rec.powered_on.values()) for rec in prop.records[1 : half + 1])
    d = off_at_start == 2 and kept_off
    t = paper_runs["seconds"] < 300
    levels = lambda tr: "/".join(lvl.token if lvl else "off" for lvl in tr.final.levels.values())
    verdict(
        "A5",
        a and b and c and d and t,
        f"(a) {a} [{levels(prop)}] (b) {b} (c) {c} [{levels(traces['round-robin'])}] "
        f"(d) {d} [{off_at_start} off at step 1, >=1 off through step {half}: {kept_off}] "
        f"runtime {paper_runs['seconds']:.1f} s",
    )


def test_a6_condition_priority(verdict):
    checked, bad = priority_mismatches(O)
    verdict("A6", checked == 4**6 * 3 and not bad, f"{checked} level assignments, {len(bad)} mismatches")


def test_a7_determinism(verdict, paper_runs):
    scenario = paper_runs["scenario"]
    same = []
    for policy in ("proposed", "random", "round-robin"):
        again = format_trace_csv(run(scenario, policy, SimulationConfig(), DEFAULT_SEED))
        same.append(again == format_trace_csv(paper_runs["traces"][policy]))
    verdict("A7", all(same), f"byte-identical traces: {dict(zip(('proposed', 'random', 'round-robin'), same))}")
