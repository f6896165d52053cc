"""Files written after a run: schedule, trajectory, events, metrics and a plot.

All coordinates written here are in the world frame of the scenario.
"""

from __future__ import annotations

import json
from pathlib import Path

from .geometry import Pose2
from .sim.executor import RunResult
from .svg import PALETTE, SvgCanvas

OUTPUT_FILES = ("schedule.json", "trajectory.csv", "events.jsonl", "metrics.json", "paths.svg")


class OutputError(OSError):
    pass


def trajectory_csv(result: RunResult) -> str:
    """One row per tick and module; floats use ``repr`` so reruns compare byte for byte."""
    traj = result.world_trajectory()
    lines = ["time_s,module_id,x_m,y_m,theta_rad"]
    for k, t in enumerate(result.times.tolist()):
        row = traj[k].tolist()
        for j, m in enumerate(result.ids):
            x, y, th = row[j]
            lines.append(f"{t!r},{m},{x!r},{y!r},{th!r}")
    return "\n".join(lines) + "\n"


def events_jsonl(result: RunResult) -> str:
    return "".join(json.dumps(e, sort_keys=True) + "\n" for e in result.events)


def paths_svg(result: RunResult, stride: int = 4) -> str:
    """Start squares (outlined), path traces, and the final footprint (filled)."""
    traj = result.world_trajectory()
    canvas = SvgCanvas()
    if len(traj) == 0:
        return canvas.render()
    if len(result.schedule) == 0:
        # nothing moved: only the starting footprint is drawn
        for j, m in enumerate(result.ids):
            canvas.square(
                Pose2(*traj[0, j].tolist()), label=str(m), stroke=PALETTE[m % len(PALETTE)], **{"class": "start"}
            )
        return canvas.render()
    for j, m in enumerate(result.ids):
        color = PALETTE[m % len(PALETTE)]
        pts = traj[::stride, j, :2].tolist() + [traj[-1, j, :2].tolist()]
        canvas.polyline([tuple(p) for p in pts], stroke=color, stroke_width=1.5, **{"class": "trace"})
        canvas.square(Pose2(*traj[0, j].tolist()), stroke=color, stroke_dasharray="3,2", **{"class": "start"})
    for j, m in enumerate(result.ids):
        canvas.square(
            Pose2(*traj[-1, j].tolist()),
            label=str(m),
            fill=PALETTE[m % len(PALETTE)],
            fill_opacity=0.45,
            stroke="black",
            **{"class": "final"},
        )
    return canvas.render()


def emit_outputs(result: RunResult, outdir) -> dict[str, Path]:
    """Write every output file into ``outdir`` (created if needed)."""
    out = Path(outdir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc}") from exc
    texts = {
        "schedule.json": result.schedule.to_json(indent=2) + "\n",
        "trajectory.csv": trajectory_csv(result),
        "events.jsonl": events_jsonl(result),
        "metrics.json": json.dumps(result.metrics, indent=2, sort_keys=True) + "\n",
        "paths.svg": paths_svg(result),
    }
    written = {}
    for name, text in texts.items():
        path = out / name
        path.write_text(text)
        written[name] = path
    return written
