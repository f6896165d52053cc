"""Planning front half of a run: root, frame change, layout, mapping, schedule."""

from __future__ import annotations

from dataclasses import dataclass

from .assignment import Mapping, assign, select_root_module, to_root_frame
from .geometry import Pose2
from .layout import UnfoldedLayout, unfold
from .scenario import Scenario
from .scheduler import Schedule, insert_helper_actions, plan_assembly


@dataclass
class AssemblyPlan:
    root_module: int
    frame: Pose2  # root frame in world coordinates
    local: dict[int, Pose2]  # every module (helpers included) in the root frame
    layout: UnfoldedLayout
    mapping: Mapping
    schedule: Schedule

    def goal_pose(self, module: int) -> Pose2:
        """Final pose of a physical module in the root frame."""
        return self.layout.pose[self.mapping.inverse()[module]]

    def to_dict(self) -> dict:
        return {
            "root_module": self.root_module,
            "target_root": self.layout.root,
            "mapping": self.mapping.to_dict(),
            "layout": self.layout.to_dict(),
            "schedule": self.schedule.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict, scenario: Scenario) -> "AssemblyPlan":
        """Rebuild a plan written by :meth:`to_dict` for the same scenario."""
        layout = UnfoldedLayout.from_dict(data["layout"], root=int(data["target_root"]))
        mapping = Mapping.from_dict(data["mapping"])
        schedule = Schedule.from_dict(data["schedule"]) if "schedule" in data else None
        return prepare_plan(scenario, layout, mapping, schedule)


def prepare_plan(
    scenario: Scenario,
    layout: UnfoldedLayout | None = None,
    mapping: Mapping | None = None,
    schedule: Schedule | None = None,
) -> AssemblyPlan:
    """Fill in whatever stage outputs were not supplied, in pipeline order."""
    root = select_root_module(scenario.modules)
    frame = scenario.modules[root]
    local = to_root_frame(scenario.all_poses, root)
    if layout is None:
        layout = unfold(scenario.target)
    if mapping is None:
        mapping = assign(layout, {m: local[m] for m in scenario.modules}, (layout.root, root))
    elif mapping[layout.root] != root:
        raise ValueError(
            f"mapping sends the target root {layout.root} to module {mapping[layout.root]}, "
            f"but the physical root is module {root}"
        )
    if schedule is None:
        schedule = plan_assembly(scenario.target, mapping, layout.root)
        if any(a.helper_required for a in schedule.actions()):
            schedule = insert_helper_actions(schedule, sorted(scenario.helpers), positions=local)
    return AssemblyPlan(root, frame, local, layout, mapping, schedule)
