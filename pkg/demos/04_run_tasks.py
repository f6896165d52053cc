#!/usr/bin/env python3
"""Simulate the three bundled assembly tasks end to end.

Each run writes schedule.json, trajectory.csv, events.jsonl, metrics.json
and paths.svg into demos/out/<task>/, then a short summary is printed.
"""

from pathlib import Path

from smores_assembly.outputs import emit_outputs
from smores_assembly.scenario import bundled, load_scenario
from smores_assembly.sim.executor import run_scenario

OUT = Path(__file__).resolve().parent / "out"


def main():
    for name in ("task1", "task2", "task3"):
        sc = load_scenario(bundled(name))
        result = run_scenario(sc)
        emit_outputs(result, OUT / name)
        m = result.metrics
        print(f"{name}: {'success' if result.success else 'FAILED: ' + str(result.error)}")
        print(f"  makespan {m['makespan_s']:.1f} s over {len(m['waves'])} waves, {m['dock_count']} docks, "
              f"{m['collision_count']} collisions, {m['total_distance_m']:.2f} m driven")
        for w in m["waves"]:
            print(f"  wave {w['wave']}: {w['start_s']:6.1f} -> {w['end_s']:6.1f} s")
        helpers = [e for e in result.events if e["event"] in ("helper_dock", "lift", "place", "retreat")]
        if helpers:
            print("  helper steps: " + ", ".join(f"{e['event']}@{e['t']:.0f}s" for e in helpers))
        print(f"  files in {OUT / name}\n")


if __name__ == "__main__":
    main()
