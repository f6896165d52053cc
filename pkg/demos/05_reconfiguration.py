#!/usr/bin/env python3
"""Parallelize a walker-to-arm reconfiguration.

The action list pairs undocks with docks.  Undocks all go first; docks are
grouped by depth in the goal tree, where only connections created by the
listed docks count towards depth.
"""

import json

from smores_assembly.scenario import DATA_DIR
from smores_assembly.scheduler import ReconfigAction, parallelize_reconfiguration
from smores_assembly.topology import ConfigGraph


def main():
    g_init = ConfigGraph.from_dict(json.loads((DATA_DIR / "reconfig_init.json").read_text()))
    g_goal = ConfigGraph.from_dict(json.loads((DATA_DIR / "reconfig_goal.json").read_text()))
    doc = json.loads((DATA_DIR / "reconfig_actions.json").read_text())
    f_inv = {g: int(i) for i, g in doc["mapping_init_to_goal"].items()}
    actions = [ReconfigAction.from_dict(a) for a in doc["actions"]]

    print("listed actions:")
    for a in actions:
        print(f"  {a.kind:6s} ({a.a}, {a.face_a.short}, {a.b}, {a.face_b.short})")
    schedule = parallelize_reconfiguration(g_init, g_goal, f_inv, actions)
    print("\nparallel waves:")
    for i, wave in enumerate(schedule.waves):
        print(f"  wave {i}: " + ", ".join(str(a) for a in wave))


if __name__ == "__main__":
    main()
