import copy
import json

import numpy as np
import pytest

from drpsps.grid_model import (DuplicateIdError, NetworkParseError, NetworkValidationError,
                               expected_demand, expected_wip, load_network, network_from_dict,
                               network_to_dict, save_network)

from conftest import DATA


@pytest.fixture
def doc():
    return json.loads((DATA / "three_bus.json").read_text())


def test_fixture_shapes(three_bus, rts24):
    assert len(three_bus.buses) == 3 and len(three_bus.lines) == 3
    assert three_bus.reference_bus.id == 1
    assert len(rts24.buses) == 24 and len(rts24.lines) == 38
    assert rts24.reference_bus.id == 13
    assert expected_demand(rts24).shape == (17, 24)


def test_expected_demand_is_probability_weighted(three_bus):
    d = expected_demand(three_bus)
    manual = 0.5 * three_bus.demands[0].profile[0] + 0.5 * three_bus.demands[0].profile[1]
    assert np.allclose(d[0], manual)


def test_wip_scale_lifts_probabilities_above_one_percent(rts24):
    wip = expected_wip(rts24)
    # the three riskiest lines land on the published probabilities once scaled by 1e4
    assert np.allclose(wip[[3, 10, 16]], [0.01383, 0.01807, 0.0222], rtol=1e-12)
    assert (wip[[3, 10, 16]] > 0.01).all()


def test_round_trip(tmp_path, rts24):
    path = tmp_path / "net.json"
    save_network(rts24, path)
    again = load_network(path)
    assert again == rts24
    assert np.allclose(expected_wip(again), expected_wip(rts24))


def test_truncated_horizon(three_bus):
    short = three_bus.truncated(3)
    assert short.horizon == 3
    assert all(d.profile.shape == (2, 3) for d in short.demands)
    assert np.allclose(short.demands[0].profile, three_bus.demands[0].profile[:, :3])


@pytest.mark.parametrize("mutate, field", [
    (lambda d: d["lines"][0].update(susceptance=-1.0), "lines[1].susceptance"),
    (lambda d: d["lines"][1].update(wip_base=1.5), "lines[2].wip_base"),
    (lambda d: d["generators"][0].update(p_min=300.0), "generators[1].p_min"),
    (lambda d: d["generators"][1].update(min_up=0), "generators[2].min_up"),
    (lambda d: d["demand_scenarios"][0].update(probability=0.7), "demand_scenarios"),
    (lambda d: d["demands"][0].update(profile=[[1.0] * 5] * 2), "demands[1].profile"),
    (lambda d: d["buses"][1].update(is_reference=True), "buses"),
    (lambda d: d["lines"][0].update(to_bus=9), "lines[1]"),
])
def test_validation_names_the_field(doc, mutate, field):
    mutate(doc)
    with pytest.raises(NetworkValidationError) as info:
        network_from_dict(doc)
    assert info.value.field == field


def test_duplicate_ids(doc):
    doc["buses"][2]["id"] = 2
    with pytest.raises(DuplicateIdError):
        network_from_dict(doc)


def test_disconnected_graph(doc):
    doc["lines"] = [doc["lines"][0]]
    with pytest.raises(NetworkValidationError, match="not connected"):
        network_from_dict(doc)


def test_parse_errors(tmp_path, doc):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(NetworkParseError):
        load_network(bad)
    broken = copy.deepcopy(doc)
    del broken["generators"]
    with pytest.raises(NetworkParseError, match="generators"):
        network_from_dict(broken)
    broken = copy.deepcopy(doc)
    broken["lines"][0]["susceptance"] = "lots"
    bad.write_text(json.dumps(broken))
    with pytest.raises(NetworkParseError):
        load_network(bad)


def test_scenario_wip_override_falls_back_to_base(doc):
    doc["demand_scenarios"][0]["wip"] = {"1": 0.15}
    net = network_from_dict(doc)
    # line 1: 0.5 * 0.15 + 0.5 * 0.05
    assert expected_wip(net)[0] == pytest.approx(0.1)
    assert expected_wip(net)[1] == pytest.approx(0.1)


def test_to_dict_writes_scaled_probabilities(rts24):
    d = network_to_dict(rts24)
    assert d["meta"]["wip_scale"] == 1.0
    assert d["lines"][3]["wip_base"] == pytest.approx(0.01383)
