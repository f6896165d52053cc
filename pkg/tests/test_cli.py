import json
import subprocess
import sys

import pytest

from smores_assembly.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from smores_assembly.outputs import OUTPUT_FILES
from smores_assembly.scenario import DATA_DIR, bundled, load_scenario

RECONFIG = [str(DATA_DIR / f"reconfig_{k}.json") for k in ("init", "goal", "actions")]


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def test_validate_ok(capsys):
    assert main(["validate", str(bundled("task1"))]) == EXIT_OK
    assert "7 modules" in capsys.readouterr().out


def test_validate_bundled_name(capsys):
    assert main(["validate", "task3"]) == EXIT_OK
    assert "1 helper" in capsys.readouterr().out


def test_validate_reports_field_paths(tmp_path, capsys):
    doc = load_scenario(bundled("task1")).to_dict()
    doc["modules"]["3"]["x"] = doc["modules"]["2"]["x"] + 0.01
    doc["modules"]["3"]["y"] = doc["modules"]["2"]["y"]
    assert main(["validate", write(tmp_path / "s.json", doc)]) == EXIT_INVALID
    assert "modules.2/3" in capsys.readouterr().out


def test_validate_bad_config(tmp_path, capsys):
    doc = load_scenario(bundled("task1")).to_dict()
    doc["config"] = {"motion": {"v_max": "fast"}}
    assert main(["validate", write(tmp_path / "s.json", doc)]) == EXIT_INVALID


def test_missing_file():
    assert main(["validate", "/nonexistent/scenario.json"]) == EXIT_INVALID


def test_stages_compose_via_files(tmp_path, capsys):
    layout = tmp_path / "layout.json"
    assignment = tmp_path / "assignment.json"
    plan = tmp_path / "plan.json"
    svg = tmp_path / "layout.svg"
    assert main(["unfold", "task1", "-o", str(layout), "--svg", str(svg)]) == EXIT_OK
    assert svg.read_text().startswith("<svg")
    assert main(["assign", "task1", "--layout", str(layout), "-o", str(assignment)]) == EXIT_OK
    doc = json.loads(assignment.read_text())
    assert doc["root_module"] == 1 and len(doc["mapping"]["target_to_module"]) == 7
    assert main(["plan", "task1", "--assignment", str(assignment), "-o", str(plan)]) == EXIT_OK
    waves = json.loads(plan.read_text())["schedule"]["waves"]
    assert [len(w) for w in waves] == [2, 2, 1, 1]
    out = tmp_path / "run"
    assert main(["run", "task1", "--plan", str(plan), "-o", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == sorted(OUTPUT_FILES)
    assert "success" in capsys.readouterr().out
    assert json.loads((out / "schedule.json").read_text())["waves"] == waves


def test_plan_from_layout_matches_default(tmp_path, capsys):
    layout = tmp_path / "layout.json"
    main(["unfold", "task2", "-o", str(layout)])
    capsys.readouterr()
    assert main(["plan", "task2", "--layout", str(layout)]) == EXIT_OK
    from_layout = json.loads(capsys.readouterr().out)
    assert main(["plan", "task2"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out) == from_layout


def test_stdout_by_default(capsys):
    assert main(["unfold", "task1"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert set(doc) == {"target_root", "layout"}


def test_bad_layout_document(tmp_path):
    assert main(["assign", "task1", "--layout", write(tmp_path / "l.json", {"x": 1})]) == EXIT_INVALID


def test_reconfig(tmp_path, capsys):
    assert main(["reconfig", *RECONFIG, "-o", str(tmp_path)]) == EXIT_OK
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == 4
    doc = json.loads((tmp_path / "schedule.json").read_text())
    assert all(a["kind"] == "undock" for a in doc["waves"][0])
    assert [len(w) for w in doc["waves"][1:]] == [2, 1, 1]


def test_reconfig_stray_dock(tmp_path):
    actions = json.loads(open(RECONFIG[2]).read())
    actions["actions"].append({"kind": "dock", "mover": 1, "mover_face": "BOTTOM", "target": 3, "target_face": "LEFT"})
    path = write(tmp_path / "a.json", actions)
    assert main(["reconfig", RECONFIG[0], RECONFIG[1], path, "-o", str(tmp_path / "o")]) == EXIT_INVALID


@pytest.mark.parametrize("where", ["before", "after"])
def test_config_position(tmp_path, where):
    cfg = write(tmp_path / "cfg.json", {"sim": {"wave_timeout": 1.0}})
    out = str(tmp_path / "o")
    argv = ["--config", cfg, "run", "task1", "-o", out] if where == "before" else ["run", "task1", "--config", cfg, "-o", out]
    # the tiny timeout makes the first wave fail: a runtime error, outputs still written
    assert main(argv) == EXIT_RUNTIME
    assert (tmp_path / "o" / "events.jsonl").exists()


def test_bad_config_is_invalid_input(tmp_path):
    cfg = write(tmp_path / "cfg.json", {"motion": {"warp": 9}})
    assert main(["run", "task1", "--config", cfg, "-o", str(tmp_path / "o")]) == EXIT_INVALID
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert main(["--config", str(broken), "validate", "task1"]) == EXIT_INVALID


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["run", "task1", "-o", str(blocker / "out")]) == EXIT_RUNTIME


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "smores_assembly.cli", "validate", "task2"], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "smores_assembly.cli"], capture_output=True, text=True)
    assert proc.returncode == EXIT_INVALID  # usage error
