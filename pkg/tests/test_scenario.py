import json

import pytest
from hypothesis import given, strategies as st

from smores_assembly.assignment import select_root_module
from smores_assembly.scenario import DATA_DIR, Scenario, ScenarioError, bundled, load_scenario, scenario_from_dict
from smores_assembly.geometry import Pose2
from smores_assembly.topology import ConfigGraph, Connection, Face


def chain_doc(poses):
    n = len(poses)
    g = ConfigGraph(range(n), [(i, i + 1, Connection(Face.TOP, Face.BOTTOM)) for i in range(n - 1)])
    return {
        "modules": {str(i): {"x": x, "y": y, "theta": 0.0} for i, (x, y) in enumerate(poses)},
        "target": g.to_dict(),
    }


def test_bundled_task1():
    sc = load_scenario(bundled("task1"))
    assert len(sc.modules) == 7
    assert select_root_module(sc.modules) == 1
    assert sc.helpers == {}


@pytest.mark.parametrize("name", ["task1", "task2", "task3"])
def test_bundled_round_trip(name, tmp_path):
    sc = load_scenario(bundled(name))
    path = tmp_path / "copy.json"
    sc.save(path)
    again = load_scenario(path)
    assert again == sc
    assert again.to_dict() == sc.to_dict()


def test_task3_has_one_helper():
    sc = load_scenario(bundled("task3"))
    assert list(sc.helpers) == [8]


poses = st.lists(
    st.tuples(st.floats(-5, 5, allow_nan=False), st.floats(-5, 5, allow_nan=False), st.floats(-3.14, 3.14)),
    min_size=1,
    max_size=6,
)


@given(poses)
def test_round_trip_property(ps):
    # spread modules on a coarse lattice so spacing always holds
    doc = chain_doc([(x + 0.5 * i, y) for i, (x, y, _) in enumerate(ps)])
    for i, (_, _, th) in enumerate(ps):
        doc["modules"][str(i)]["theta"] = th
    try:
        sc = scenario_from_dict(doc)
    except ScenarioError as exc:
        assert all("apart" in p for p in exc.problems)
        return
    assert scenario_from_dict(json.loads(sc.to_json())) == sc


def test_count_mismatch():
    doc = chain_doc([(0, 0), (0.5, 0)])
    doc["modules"]["2"] = {"x": 1.0, "y": 0.0, "theta": 0.0}
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert any(p.startswith("modules:") and "3 modules for a 2-module" in p for p in err.value.problems)


def test_spacing_violation():
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(chain_doc([(0, 0), (0.05, 0)]))
    assert any(p.startswith("modules.0/1") for p in err.value.problems)


def test_spacing_exactly_w_rejected():
    with pytest.raises(ScenarioError):
        scenario_from_dict(chain_doc([(0, 0), (0.08, 0)]))
    assert scenario_from_dict(chain_doc([(0, 0), (0.0801, 0)]))


def test_helper_spacing_and_overlap():
    doc = chain_doc([(0, 0), (0.5, 0)])
    doc["helpers"] = {"1": {"x": 2.0, "y": 0.0}, "9": {"x": 0.03, "y": 0.0}}
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    text = " | ".join(err.value.problems)
    assert "helpers: id(s) [1]" in text
    assert "helpers." in text and "apart" in text


def test_field_paths_collected():
    doc = chain_doc([(0, 0), (0.5, 0)])
    doc["modules"]["0"]["x"] = "zero"
    doc["modules"]["abc"] = {"x": 0, "y": 1}
    doc["config"] = {"motion": {}, "graphics": {}}
    doc["seed"] = 1.5
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    joined = "\n".join(err.value.problems)
    for path in ("modules.0.x", "modules.abc", "config.graphics", "seed"):
        assert path in joined


def test_missing_sections():
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict({})
    assert err.value.problems[:2] == ["modules: missing", "target: missing"]
    with pytest.raises(ScenarioError):
        scenario_from_dict([1, 2])


def test_invalid_target_reported():
    doc = chain_doc([(0, 0), (0.5, 0)])
    doc["target"]["connections"].append(doc["target"]["connections"][0])
    with pytest.raises(ScenarioError) as err:
        scenario_from_dict(doc)
    assert all(p.startswith(("target", "modules")) for p in err.value.problems)


def test_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioError) as err:
        load_scenario(path)
    assert "not valid JSON" in err.value.problems[0]


def test_bundled_lookup():
    assert bundled("task2") == DATA_DIR / "task2.json"
    with pytest.raises(FileNotFoundError):
        bundled("task9")


def test_all_poses_merges_helpers():
    sc = Scenario({0: Pose2(0, 0, 0)}, ConfigGraph([0], []), helpers={5: Pose2(1, 0, 0)})
    assert sc.all_poses == {0: Pose2(0, 0, 0), 5: Pose2(1, 0, 0)}
