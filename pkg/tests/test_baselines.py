import numpy as np
import pytest

from lbsim.balancer import DomainState
from lbsim.baselines import NoServerError, RoundRobinCursor, random_select, round_robin_select
from lbsim.domain import LoadLevel, ServerState
from lbsim.scenario import PAPER_SERVERS


def _state(on=(True, True, True, True)):
    servers = tuple(ServerState(s, powered_on=o) for s, o in zip(PAPER_SERVERS, on))
    return DomainState(servers, {s.id: LoadLevel.UNDER for s in servers if s.powered_on}, {})


def test_round_robin_cycles_in_id_order():
    cursor = RoundRobinCursor()
    picks = []
    for _ in range(5):
        sid, cursor = round_robin_select(_state(), cursor)
        picks.append(sid)
    assert picks == [1, 2, 3, 4, 1]


def test_round_robin_skips_powered_off():
    cursor = RoundRobinCursor()
    picks = []
    for _ in range(4):
        sid, cursor = round_robin_select(_state((True, False, True, False)), cursor)
        picks.append(sid)
    assert picks == [1, 3, 1, 3]


def test_random_is_uniform():
    rng = np.random.default_rng(123)
    state = _state()
    n = 100_000
    counts = np.bincount([random_select(state, rng) for _ in range(n)], minlength=5)[1:]
    assert np.all(np.abs(counts / n - 0.25) <= 0.02 * 0.25)


def test_random_is_seeded():
    a = [random_select(_state(), np.random.default_rng(5)) for _ in range(3)]
    b = [random_select(_state(), np.random.default_rng(5)) for _ in range(3)]
    assert a == b


def test_no_powered_on_server():
    with pytest.raises(NoServerError):
        random_select(_state((False,) * 4), np.random.default_rng(0))
    with pytest.raises(NoServerError):
        round_robin_select(_state((False,) * 4), RoundRobinCursor())
