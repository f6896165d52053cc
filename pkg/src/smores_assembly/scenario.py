"""Scenario files: initial module poses, target topology, helpers, settings.

Layout of a scenario document (SI units, angles in radians)::

    {
      "name": "task1",
      "modules": {"0": {"x": 0.017, "y": 0.357, "theta": 1.142}, ...},
      "target": {"modules": [...], "connections": [...]},
      "helpers": {"8": {"x": 0.0, "y": -0.55, "theta": 1.57}},
      "config": {"motion": {...}, "sim": {...}},
      "seed": 0
    }
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .assignment import spacing_violations
from .geometry import MODULE_WIDTH, Pose2
from .topology import ConfigGraph

DATA_DIR = Path(__file__).resolve().parent / "data"


class ScenarioError(ValueError):
    """All problems found in a scenario, each prefixed with its field path."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass
class Scenario:
    modules: dict[int, Pose2]
    target: ConfigGraph
    helpers: dict[int, Pose2] = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    seed: int = 0
    name: str = "scenario"
    description: str = ""
    reference: dict = field(default_factory=dict)  # reference mapping and timing, informational

    @property
    def all_poses(self) -> dict[int, Pose2]:
        out = dict(self.modules)
        out.update(self.helpers)
        return out

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "modules": {str(k): self.modules[k].to_dict() for k in sorted(self.modules)},
            "target": self.target.to_dict(),
            "helpers": {str(k): self.helpers[k].to_dict() for k in sorted(self.helpers)},
            "config": copy.deepcopy(self.config),
            "seed": self.seed,
        }
        if self.description:
            out["description"] = self.description
        if self.reference:
            out["reference"] = copy.deepcopy(self.reference)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(indent=2) + "\n")


def _pose(value, where: str, problems: list[str]) -> Pose2 | None:
    if not isinstance(value, dict):
        problems.append(f"{where}: expected an object with x, y, theta")
        return None
    vals = []
    for key in ("x", "y", "theta"):
        v = value.get(key, 0.0 if key == "theta" else None)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            problems.append(f"{where}.{key}: expected a finite number, got {v!r}")
            return None
        vals.append(float(v))
    return Pose2(*vals)


def _poses(section, where: str, problems: list[str]) -> dict[int, Pose2]:
    out = {}
    if not isinstance(section, dict):
        problems.append(f"{where}: expected an object keyed by module id")
        return out
    for key, value in section.items():
        try:
            mid = int(key)
        except (TypeError, ValueError):
            problems.append(f"{where}.{key}: module id must be an integer")
            continue
        p = _pose(value, f"{where}.{key}", problems)
        if p is not None:
            out[mid] = p
    return out


def scenario_from_dict(data) -> Scenario:
    """Parse and validate; raises :class:`ScenarioError` listing every problem."""
    problems: list[str] = []
    if not isinstance(data, dict):
        raise ScenarioError(["<root>: expected a JSON object"])
    for key in ("modules", "target"):
        if key not in data:
            problems.append(f"{key}: missing")
    modules = _poses(data.get("modules", {}), "modules", problems)
    helpers = _poses(data.get("helpers", {}) or {}, "helpers", problems)

    target = None
    if "target" in data:
        try:
            target = ConfigGraph.from_dict(data["target"])
        except (KeyError, TypeError, ValueError) as exc:
            problems.append(f"target: {exc}")
    if target is not None:
        report = target.report
        for v in report.violations:
            problems.append(f"target: {v}")
        if len(target.vertices) != len(modules):
            problems.append(
                f"modules: {len(modules)} modules for a {len(target.vertices)}-module target"
            )
    both = set(modules) & set(helpers)
    if both:
        problems.append(f"helpers: id(s) {sorted(both)} also listed under modules")
    everyone = dict(modules)
    everyone.update(helpers)
    for a, b, d in spacing_violations(everyone):
        where = "helpers" if a in helpers or b in helpers else "modules"
        problems.append(
            f"{where}.{a}/{b}: centres {d:.3f} m apart, must be more than {MODULE_WIDTH} m"
        )
    config = data.get("config", {}) or {}
    if not isinstance(config, dict):
        problems.append("config: expected an object")
        config = {}
    for key in config:
        if key not in ("motion", "sim"):
            problems.append(f"config.{key}: unknown section (expected motion or sim)")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        problems.append(f"seed: expected an integer, got {seed!r}")
        seed = 0
    if problems:
        raise ScenarioError(problems)
    return Scenario(
        modules=modules,
        target=target,
        helpers=helpers,
        config=copy.deepcopy(config),
        seed=seed,
        name=str(data.get("name", "scenario")),
        description=str(data.get("description", "")),
        reference=copy.deepcopy(data.get("reference", {}) or {}),
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError([f"<file>: not valid JSON ({exc})"]) from exc
    return scenario_from_dict(data)


def bundled(name: str) -> Path:
    """Path of a scenario shipped with the package (``task1`` ... ``task3``)."""
    path = DATA_DIR / (name if name.endswith(".json") else name + ".json")
    if not path.exists():
        raise FileNotFoundError(path)
    return path
