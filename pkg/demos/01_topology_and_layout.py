#!/usr/bin/env python3
"""Root search and planar unfolding of the Task 1 target.

Prints the root, each module's depth and connector subtree counts, then
writes the flat layout as an SVG next to this script.
"""

from pathlib import Path

from smores_assembly.layout import unfold
from smores_assembly.scenario import bundled, load_scenario
from smores_assembly.topology import FACES, find_root, rooted_info

OUT = Path(__file__).resolve().parent / "out"


def main():
    target = load_scenario(bundled("task1")).target
    root = find_root(target)
    info = rooted_info(target, root)
    print(f"target has {len(target.vertices)} modules, root {root}, depth {info.graph_depth}")
    print("module  depth  " + "  ".join(f"{f.short:>2}" for f in FACES))
    for v in sorted(target.vertices):
        counts = "  ".join(f"{info.cn[v, f]:>2}" for f in FACES)
        print(f"{v:>6}  {info.depth[v]:>5}  {counts}")

    layout = unfold(target)
    print("\nunfolded centres (m, root frame):")
    for v in sorted(layout.pose):
        p = layout.pose[v]
        print(f"  {v}: ({p.x:+.2f}, {p.y:+.2f})  heading {p.theta:+.2f} rad")
    OUT.mkdir(exist_ok=True)
    (OUT / "task1_layout.svg").write_text(layout.to_svg())
    print(f"\nlayout drawn to {OUT / 'task1_layout.svg'}")


if __name__ == "__main__":
    main()
