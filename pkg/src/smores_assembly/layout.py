"""Planar unfolding of a target topology around its root module.

Face directions in a module's body frame: TOP along +x, BOTTOM along -x,
LEFT along +y, RIGHT along -y.  A child sits one module width out along
the parent's face and is turned so that its mating face points straight
back at the parent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist

from .geometry import MODULE_WIDTH, Pose2, wrap_angle
from .svg import footprint_svg
from .topology import (
    FACES,
    ConfigGraph,
    Connection,
    Face,
    InvalidTopology,
    find_root,
    validate_topology,
)

#: Heading of each face's outward normal in the body frame.
FACE_ANGLE = {
    Face.TOP: 0.0,
    Face.LEFT: math.pi / 2.0,
    Face.BOTTOM: math.pi,
    Face.RIGHT: -math.pi / 2.0,
}

#: Centres closer than this are considered the same lattice site.
OVERLAP_TOL = 1e-6


class OverlapError(ValueError):
    """Two modules of an unfolded layout land on the same spot."""

    def __init__(self, pairs: list[tuple[int, int]]):
        self.pairs = pairs
        super().__init__("unfolded modules overlap: " + ", ".join(f"{a}&{b}" for a, b in pairs))


def face_direction(face: Face) -> tuple[float, float]:
    a = FACE_ANGLE[face]
    return (round(math.cos(a)), round(math.sin(a)))


def relative_pose(conn: Connection, width: float = MODULE_WIDTH) -> Pose2:
    """Pose of the partner (``face2con`` side) in the frame of the ``face`` side."""
    if conn.orientation == 1:
        raise InvalidTopology("BOTTOM-BOTTOM orientation 1 cannot be unfolded")
    dx, dy = face_direction(conn.face)
    heading = wrap_angle(FACE_ANGLE[conn.face] + math.pi - FACE_ANGLE[conn.face2con])
    # snap to the exact quarter turn so table entries compare cleanly
    quarter = round(heading / (math.pi / 2.0))
    heading = wrap_angle(quarter * math.pi / 2.0)
    return Pose2(width * dx, width * dy, heading)


#: Every ordered (parent face, child face) pair.
RELATIVE_POSES = {(a, b): relative_pose(Connection(a, b)) for a in FACES for b in FACES}


@dataclass
class UnfoldedLayout:
    root: int
    pose: dict[int, Pose2]
    side: float = MODULE_WIDTH

    def centers(self, ids=None) -> np.ndarray:
        ids = sorted(self.pose) if ids is None else ids
        return np.array([[self.pose[i].x, self.pose[i].y] for i in ids], dtype=float).reshape(-1, 2)

    def to_dict(self) -> dict:
        return {str(k): self.pose[k].to_dict() for k in sorted(self.pose)}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, root: int | None = None) -> "UnfoldedLayout":
        pose = {int(k): Pose2.from_dict(v) for k, v in data.items()}
        if root is None:
            root = next(k for k, p in pose.items() if p.x == 0.0 and p.y == 0.0)
        return cls(root=root, pose=pose)

    def to_svg(self) -> str:
        return footprint_svg(self.pose)


def unfold(graph: ConfigGraph, root: int | None = None, width: float = MODULE_WIDTH) -> UnfoldedLayout:
    """Lay the tree flat: BFS from the root, composing one edge at a time."""
    report = validate_topology(graph)
    if not report.ok:
        raise InvalidTopology("; ".join(report.violations))
    if root is None:
        root = find_root(graph)
    adj = graph.adjacency
    pose = {root: Pose2(0.0, 0.0, 0.0)}
    queue = [root]
    for v in queue:
        pv = pose[v]
        for face in FACES:
            if face not in adj[v]:
                continue
            u, uface = adj[v][face]
            if u in pose:
                continue
            rel = RELATIVE_POSES[face, uface]
            if width != MODULE_WIDTH:
                rel = Pose2(rel.x * width / MODULE_WIDTH, rel.y * width / MODULE_WIDTH, rel.theta)
            pose[u] = pv.compose(rel)
            queue.append(u)
    layout = UnfoldedLayout(root=root, pose=pose, side=width)
    pairs = overlapping_pairs(layout)
    if pairs:
        raise OverlapError(pairs)
    return layout


def overlapping_pairs(layout: UnfoldedLayout) -> list[tuple[int, int]]:
    ids = sorted(layout.pose)
    if len(ids) < 2:
        return []
    d = pdist(layout.centers(ids))
    i, j = np.triu_indices(len(ids), k=1)
    hit = d < layout.side - OVERLAP_TOL
    return [(ids[a], ids[b]) for a, b in zip(i[hit], j[hit])]


@dataclass
class UnfoldReport:
    ok: bool
    violations: list[str] = field(default_factory=list)
    overlaps: list[tuple[int, int]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def check_unfoldable(graph: ConfigGraph) -> UnfoldReport:
    """Valid tree whose flat layout puts every module on its own site."""
    report = validate_topology(graph)
    if not report.ok:
        return UnfoldReport(False, list(report.violations))
    try:
        unfold(graph)
    except OverlapError as exc:
        return UnfoldReport(False, [str(exc)], exc.pairs)
    return UnfoldReport(True)
