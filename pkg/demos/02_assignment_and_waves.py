#!/usr/bin/env python3
"""From scattered modules to a wave schedule.

For each bundled task: pick the physical root, match modules to layout
positions by total travel distance, and list the docking waves.  Task 1 is
also planned with its reference mapping for comparison.
"""

from smores_assembly.assignment import mapping_cost_of
from smores_assembly.pipeline import prepare_plan
from smores_assembly.scenario import bundled, load_scenario
from smores_assembly.scheduler import plan_assembly


def show(schedule):
    for i, wave in enumerate(schedule.waves):
        print(f"  wave {i}: " + ", ".join(str(a) for a in wave))


def main():
    for name in ("task1", "task2", "task3"):
        sc = load_scenario(bundled(name))
        plan = prepare_plan(sc)
        f = plan.mapping.target_to_module
        print(f"{name}: physical root {plan.root_module}, mapping cost {plan.mapping.cost:.3f} m")
        print("  target -> module: " + ", ".join(f"{t}->{m}" for t, m in sorted(f.items())))
        show(plan.schedule)
        if name == "task1":
            ref = {int(k): v for k, v in sc.reference["mapping"].items()}
            cost = mapping_cost_of(plan.layout, plan.local, (plan.layout.root, plan.root_module), ref)
            print(f"  reference mapping costs {cost:.3f} m and gives:")
            show(plan_assembly(sc.target, ref))
        print()


if __name__ == "__main__":
    main()
