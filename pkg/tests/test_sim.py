import math

import numpy as np
import pytest

from smores_assembly.geometry import MODULE_WIDTH as W, Pose2
from smores_assembly.layout import RELATIVE_POSES
from smores_assembly.motion.control import MotionConfig
from smores_assembly.scenario import bundled, load_scenario, scenario_from_dict
from smores_assembly.sim.executor import SimConfig, run_scenario
from smores_assembly.topology import ConfigGraph, Connection, Face

T, B = Face.TOP, Face.BOTTOM
TASKS = ("task1", "task2", "task3")


@pytest.fixture(scope="module")
def runs():
    return {name: run_scenario(load_scenario(bundled(name))) for name in TASKS}


def events(result, kind):
    return [e for e in result.events if e["event"] == kind]


@pytest.mark.parametrize("name", TASKS)
def test_success_and_goal_isomorphism(runs, name):
    r = runs[name]
    assert r.success, r.error
    assert r.collisions == []
    f = r.plan.mapping.target_to_module
    sc = load_scenario(bundled(name))
    assert r.world.attachment_graph(sorted(sc.modules)).edge_set() == sc.target.relabel(f).edge_set()
    for h in sc.helpers:
        assert r.world.is_free(h)


@pytest.mark.parametrize("name", TASKS)
def test_final_relative_poses_are_snap_poses(runs, name):
    r = runs[name]
    for a, fa, b, fb in r.world.attachments:
        rel = r.world.poses[a].relative_to(r.world.poses[b])
        want = RELATIVE_POSES[fb, fa]
        assert abs(rel.x - want.x) < 1e-12 and abs(rel.y - want.y) < 1e-12
        assert abs(math.remainder(rel.theta - want.theta, 2 * math.pi)) < 1e-12


def test_task1_waves(runs):
    r = runs["task1"]
    assert len(events(r, "wave_start")) == 4
    assert len(events(r, "dock")) == 6
    assert r.metrics["dock_count"] == 6


def test_task3_helper_sequences(runs):
    r = runs["task3"]
    helper_kinds = ("helper_dock", "lift", "deliver", "place", "push", "dock", "undock", "retreat")
    for mover in (3, 1):
        seq = [
            e["event"]
            for e in r.events
            if e["event"] in helper_kinds and e["detail"].get("module", e["detail"].get("mover")) == mover
        ]
        assert seq[:7] == list(helper_kinds[:7])
    docks = [e["detail"]["action"] for e in events(r, "dock")]
    assert docks[:2] == ["(3, L, 2, R) via 8", "(1, R, 2, L) via 8"]
    assert len(events(r, "retreat")) == 2


def attached_after(result):
    """For each sample, the modules that are docked or holding/held once its events ran."""
    changes = []
    current: set[int] = set()
    for e in result.events:
        d = e["detail"]
        if e["event"] == "dock":
            current |= {d["mover"], d["target"]}
        elif e["event"] == "helper_dock":
            current |= {d["helper"], d["module"]}
        elif e["event"] == "undock":
            current.discard(d["helper"])
        else:
            continue
        changes.append((e["t"], set(current)))
    out, i, now = [], 0, set()
    for t in result.times.tolist():
        while i < len(changes) and changes[i][0] <= t + 1e-9:
            now = changes[i][1]
            i += 1
        out.append(now)
    return out


@pytest.mark.parametrize("name", TASKS)
def test_no_teleporting(runs, name):
    r = runs[name]
    cfg = MotionConfig()
    bound = cfg.v_max * cfg.dt + W * cfg.omega_max * cfg.dt
    tr = r.trajectory
    step = np.hypot(np.diff(tr[..., 0], axis=0), np.diff(tr[..., 1], axis=0))
    attached = attached_after(r)
    free_steps = [
        step[k, j] for k in range(len(step)) for j, m in enumerate(r.ids) if m not in attached[k + 1]
    ]
    assert max(free_steps) <= bound + 1e-12
    # a docking snap may add at most the acceptance area on top of one step
    assert step.max() <= bound + math.hypot(0.004, 0.007)


@pytest.mark.parametrize("name", TASKS)
def test_docked_pairs_stay_rigid(runs, name):
    r = runs[name]
    col = {m: j for j, m in enumerate(r.ids)}
    times = r.times
    for e in events(r, "dock"):
        a, b = e["detail"]["mover"], e["detail"]["target"]
        # samples are taken after every event stamped with the same time
        k0 = int(np.searchsorted(times, e["t"] - 1e-9))
        poses_a = [Pose2(*p) for p in r.trajectory[k0:, col[a]].tolist()]
        poses_b = [Pose2(*p) for p in r.trajectory[k0:, col[b]].tolist()]
        ref = poses_a[0].relative_to(poses_b[0])
        for pa, pb in zip(poses_a[::25], poses_b[::25]):
            rel = pa.relative_to(pb)
            assert abs(rel.x - ref.x) < 1e-12 and abs(rel.y - ref.y) < 1e-12


@pytest.mark.parametrize("name", TASKS)
def test_metrics(runs, name):
    r = runs[name]
    m = r.metrics
    assert m["makespan_s"] == r.events[-1]["t"]
    assert m["collision_count"] == 0
    assert m["total_distance_m"] == pytest.approx(sum(m["distance_m"].values()))
    assert len(m["waves"]) == len(r.schedule)
    assert r.trajectory.shape == (len(r.times), len(r.ids), 3)
    assert np.allclose(np.diff(r.times), 1 / 40)


def test_world_frame_trajectory(runs):
    r = runs["task1"]
    sc = load_scenario(bundled("task1"))
    first = r.world_trajectory()[0]
    for j, m in enumerate(r.ids):
        assert np.allclose(first[j], sc.all_poses[m], atol=1e-12)


def test_single_module():
    sc = scenario_from_dict(
        {"modules": {"4": {"x": 0.3, "y": 0.1, "theta": 0.2}}, "target": {"modules": [0], "connections": []}}
    )
    r = run_scenario(sc)
    assert r.success and len(r.schedule) == 0
    assert r.metrics["makespan_s"] == 0.0


def test_two_modules():
    sc = scenario_from_dict(
        {
            "modules": {"0": {"x": 0, "y": 0, "theta": 0}, "1": {"x": 0.5, "y": 0.3, "theta": 2.0}},
            "target": ConfigGraph([0, 1], [(0, 1, Connection(T, B))]).to_dict(),
        }
    )
    r = run_scenario(sc)
    assert r.success, r.error
    assert len(r.world.attachments) == 1


def test_wave_timeout_fails_cleanly():
    r = run_scenario(load_scenario(bundled("task1")), {"sim": {"wave_timeout": 2.0}})
    assert not r.success
    assert "timed out" in r.error
    assert r.events[-2]["event"] == "failed"


def test_missing_helper_is_reported():
    doc = load_scenario(bundled("task3")).to_dict()
    doc["helpers"] = {}
    with pytest.raises(ValueError):
        run_scenario(scenario_from_dict(doc))


def test_sim_config_checks():
    assert SimConfig.from_dict({"retries": 2}).retries == 2
    with pytest.raises(ValueError):
        SimConfig.from_dict({"separation": "loose"})
    with pytest.raises(KeyError):
        SimConfig.from_dict({"speed": 1})
