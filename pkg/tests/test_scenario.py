import pytest

from lbsim.domain import GB, MB, FlowEvent
from lbsim.scenario import (
    PRESETS,
    CostModel,
    build_paper_scenario,
    datagram_count,
    load_scenario,
    make_flow,
)


@pytest.mark.parametrize("size,count", [(1470, 1), (1471, 2), (10**7, 6803), (1, 1)])
def test_datagram_count(size, count):
    assert datagram_count(size) == count


def test_datagram_count_rejects_empty():
    with pytest.raises(ValueError):
        datagram_count(0)


def test_reference_preset_contents():
    sc = build_paper_scenario()
    assert [f.size_bytes for f in sc.flows] == [10 * k * MB for k in range(1, 27)]
    assert all(f.rate_bytes_per_s == f.size_bytes / 10 for f in sc.flows)
    assert sc.flows[0].datagram_count == 6803
    caps = [(s.cpu_capacity, s.mem_capacity, s.disk_capacity, s.bw_capacity) for s in sc.servers]
    assert caps == [
        (1.0, 500 * MB, 900 * MB, 20 * MB),
        (2.0, 550 * MB, 2 * GB, 20 * MB),
        (1.0, 420 * MB, 800 * MB, 20 * MB),
        (1.0, 450 * MB, 700 * MB, 20 * MB),
    ]
    assert (sc.topology.switches, sc.topology.clients) == (4, 1)
    assert load_scenario("paper") == PRESETS["paper"]()


def test_cost_model_is_linear_in_rate():
    cost = CostModel()
    one = cost.flow_load(make_flow(1, 10 * MB))
    three = cost.flow_load(make_flow(2, 30 * MB))
    assert three == pytest.approx(tuple(3 * v for v in one))
    # a 10 MB flow over 10 s is 1 MB/s
    assert one == pytest.approx((cost.cpu_per_mbps, cost.mem_per_mbps, cost.disk_per_mbps, cost.bw_per_rate * MB))
    with pytest.raises(ValueError):
        CostModel(cpu_per_mbps=-1)


def test_flow_validation():
    with pytest.raises(ValueError):
        FlowEvent(1, 0, 0, 1)


def test_scenario_file(tmp_path):
    path = tmp_path / "lab.cfg"
    path.write_text(
        "# two servers\nname = lab\nserver.1 = 1.0, 5e8, 9e8, 2e7\nserver.2 = 2, 5e8, 9e8, 2e7\n"
        "flow.2 = 2e7\nflow.1 = 1e7, 5\ntopology.switches = 2\n"
    )
    sc = load_scenario(str(path))
    assert sc.name == "lab"
    assert [s.id for s in sc.servers] == [1, 2]
    assert [f.id for f in sc.flows] == [1, 2]
    assert sc.flows[0].rate_bytes_per_s == 2e6
    assert sc.topology.switches == 2


def test_scenario_file_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("server.1 = 1, 2\n")
    with pytest.raises(ValueError, match="server.1"):
        load_scenario(str(path))
    path.write_text("colour = red\n")
    with pytest.raises(ValueError, match="colour"):
        load_scenario(str(path))
    with pytest.raises(ValueError, match="not a preset"):
        load_scenario("nope")
