"""Tests for scenario configuration and its file format."""

import math

import pytest

from swarmgames.scenarios import (
    ColonyParams,
    Event,
    MonitoringParams,
    ScenarioConfig,
    ScenarioError,
    builtin_scenario,
    colony_default,
    from_mapping,
    load_scenario,
    monitoring_default,
    save_scenario,
    to_mapping,
)


def test_colony_default_parameters():
    cfg = colony_default()
    assert cfg.kind == "colony"
    assert cfg.n_robots == 12
    assert cfg.gamma == (12.0, 7.2)
    assert cfg.v_max == 1.0
    assert cfg.r == 0.25
    assert cfg.t_final == 600.0
    assert cfg.colony.R_o == 30.0
    assert cfg.colony.R_i == 5.0
    assert cfg.colony.h == 5.0
    assert cfg.colony.E_source == 4.0
    assert cfg.colony.E_drain == 0.1
    assert cfg.colony.c_max == 10
    assert cfg.monitoring is None


def test_colony_default_event_schedule():
    events = colony_default().events
    assert [e.kind for e in events] == [
        "cargo_delivery", "cargo_delivery", "robot_removal"]
    assert events[0].time == 120.0
    assert events[0].amount == 10
    assert events[0].location == (20.0, 0.0)
    assert events[1].time == 225.0
    assert events[2].time == 172.5
    assert events[2].amount == 6


def test_monitoring_default_parameters():
    cfg = monitoring_default()
    assert cfg.kind == "monitoring"
    assert cfg.n_robots == 4
    assert cfg.gamma == (4.0,) * 5
    assert cfg.v_max == 4.0
    assert cfg.r == 0.04
    assert cfg.t_final == 1000.0
    assert cfg.alpha_c == 10.0
    mon = cfg.monitoring
    assert mon.A == 0.75
    assert mon.B == 2.0
    assert mon.R_max == 1.0
    assert mon.D == 4.0
    assert mon.idle_point == (2.0, 2.0)
    assert len(mon.nodes) == 5


def test_monitoring_nodes_form_a_pentagon():
    nodes = monitoring_default().monitoring.nodes
    center = (2.0, 2.0)
    for x, y in nodes:
        assert math.hypot(x - center[0], y - center[1]) == pytest.approx(2.0, abs=1e-12)
        assert 0.0 <= x <= 4.0 and 0.0 <= y <= 4.0
    assert nodes[0] == pytest.approx((2.0, 4.0), abs=1e-12)
    # adjacent nodes are evenly spaced
    side = 2.0 * 2.0 * math.sin(math.pi / 5)
    for a, b in zip(nodes, nodes[1:] + nodes[:1]):
        assert math.hypot(a[0] - b[0], a[1] - b[1]) == pytest.approx(side, abs=1e-12)


def test_builtin_lookup():
    assert builtin_scenario("colony").kind == "colony"
    assert builtin_scenario("monitoring").kind == "monitoring"
    with pytest.raises(ScenarioError):
        builtin_scenario("warehouse")


def test_round_trip_is_lossless(tmp_path):
    for cfg in (colony_default(), monitoring_default()):
        path = tmp_path / f"{cfg.kind}.yaml"
        save_scenario(cfg, path)
        assert load_scenario(path) == cfg


def test_round_trip_preserves_overrides(tmp_path):
    mapping = to_mapping(colony_default())
    mapping["seed"] = 17
    mapping["t_final"] = 42.5
    mapping["colony"]["depot_wait"] = 3.5
    cfg = from_mapping(mapping)
    path = tmp_path / "tweaked.yaml"
    save_scenario(cfg, path)
    again = load_scenario(path)
    assert again == cfg
    assert again.seed == 17
    assert again.colony.depot_wait == 3.5


def test_unknown_keys_rejected():
    mapping = to_mapping(colony_default())
    mapping["robot_count"] = 9
    with pytest.raises(ScenarioError, match="robot_count"):
        from_mapping(mapping)
    mapping = to_mapping(colony_default())
    mapping["colony"]["depo_wait"] = 1.0
    with pytest.raises(ScenarioError, match="colony.depo_wait"):
        from_mapping(mapping)
    mapping = to_mapping(monitoring_default())
    mapping["monitoring"]["nodes"] = [[0, 0]] * 5
    mapping["monitoring"]["idle_pt"] = [1, 1]
    with pytest.raises(ScenarioError, match="idle_pt"):
        from_mapping(mapping)


def test_malformed_yaml_reports_location(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("kind: colony\n  bad_indent: [\n")
    with pytest.raises(ScenarioError, match=r"broken\.yaml:\d+:"):
        load_scenario(path)


def test_validation_catches_inconsistencies():
    with pytest.raises(ScenarioError):
        ScenarioConfig(kind="colony", n_robots=12, gamma=(12.0, 7.2), v_max=1.0,
                       r=0.25, t_final=600.0)  # missing colony section
    with pytest.raises(ScenarioError):
        ScenarioConfig(kind="colony", n_robots=12, gamma=(12.0,), v_max=1.0,
                       r=0.25, t_final=600.0, colony=ColonyParams())
    with pytest.raises(ScenarioError):
        ScenarioConfig(kind="monitoring", n_robots=4, gamma=(4.0,) * 4, v_max=4.0,
                       r=0.04, t_final=1000.0, monitoring=MonitoringParams())
    with pytest.raises(ScenarioError):
        ScenarioConfig(kind="colony", n_robots=0, gamma=(12.0, 7.2), v_max=1.0,
                       r=0.25, t_final=600.0, colony=ColonyParams())
    with pytest.raises(ScenarioError):
        Event(time=120.0, kind="cargo_delivery", amount=10)  # no location
    with pytest.raises(ScenarioError):
        Event(time=-2.0, kind="robot_removal", amount=6)
    with pytest.raises(ScenarioError):
        Event(time=1.0, kind="meteor_strike", amount=1)
    with pytest.raises(ScenarioError):
        ColonyParams(R_i=40.0)
    with pytest.raises(ScenarioError):
        MonitoringParams(B=0.0)


def test_defaults_make_valid_problem_instances():
    import numpy as np

    from swarmgames.allocation import ProblemInstance

    colony = colony_default()
    inst = ProblemInstance(
        gamma=list(colony.gamma),
        signals=[0.5, 1.0],
        costs=[[0.0, 0.0]],
        counts=[[colony.n_robots, 0, 0]],
    )
    assert inst.n_tasks == 2

    mon = monitoring_default()
    positions = [mon.monitoring.idle_point] * mon.n_robots
    costs = [[math.hypot(px - nx, py - ny) / mon.monitoring.D
              for nx, ny in mon.monitoring.nodes]
             for px, py in positions]
    counts = [[1] + [0] * 5 for _ in range(mon.n_robots)]
    inst = ProblemInstance(
        gamma=list(mon.gamma), signals=[1.0] * 5, costs=costs, counts=counts)
    assert np.all(inst.costs <= 1.0)
