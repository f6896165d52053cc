"""Kinematic world: module poses, docked connections and carried modules.

Poses are kept in one fixed planar frame (the executor uses the physical
root's frame).  Modules joined through a docked connection form a rigid
group; a group only moves when its driving module (a helper holding another
module) is commanded, and every held module is recomputed from its anchor
and a fixed relative pose so no error accumulates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..geometry import MODULE_WIDTH, Pose2, square_penetration, wrap_angle
from ..layout import FACE_ANGLE, RELATIVE_POSES
from ..motion.control import diff_drive_step
from ..scheduler import AssemblyAction
from ..topology import ConfigGraph, Connection, Face

#: Area of acceptance of a connector pair.
DOCK_GAP = 0.004
DOCK_LATERAL = 0.007
DOCK_ANGLE = 0.1
DOCK_SLACK = 1e-9

#: Overlap below this depth counts as touching, not colliding.
CONTACT_TOL = 0.001


class DockError(RuntimeError):
    pass


@dataclass
class DockOutcome:
    docked: bool
    gap: float
    lateral: float
    angle: float

    def __bool__(self) -> bool:
        return self.docked


@dataclass
class WorldState:
    poses: dict[int, Pose2]
    attachments: list[tuple[int, Face, int, Face]] = field(default_factory=list)
    carried_by: dict[int, int] = field(default_factory=dict)  # lifted module -> helper
    held: dict[int, tuple[int, Pose2]] = field(default_factory=dict)  # module -> (anchor, pose in anchor frame)
    exempt: set[frozenset] = field(default_factory=set)  # current docking partners
    clock: float = 0.0
    frame: Pose2 = Pose2(0.0, 0.0, 0.0)  # this frame expressed in the world frame

    def copy(self) -> "WorldState":
        return WorldState(
            dict(self.poses),
            list(self.attachments),
            dict(self.carried_by),
            dict(self.held),
            set(self.exempt),
            self.clock,
            self.frame,
        )

    # -- attachment bookkeeping ----------------------------------------------

    def face_in_use(self, m: int, face: Face) -> bool:
        return any((a == m and fa == face) or (b == m and fb == face) for a, fa, b, fb in self.attachments)

    def neighbours(self, m: int) -> list[int]:
        out = []
        for a, _, b, _ in self.attachments:
            if a == m:
                out.append(b)
            elif b == m:
                out.append(a)
        return out

    def group(self, m: int) -> set[int]:
        seen = {m}
        stack = [m]
        while stack:
            v = stack.pop()
            for u in self.neighbours(v):
                if u not in seen:
                    seen.add(u)
                    stack.append(u)
        return seen

    def is_free(self, m: int) -> bool:
        return not self.neighbours(m)

    def attachment_graph(self, modules=None) -> ConfigGraph:
        verts = sorted(self.poses) if modules is None else modules
        keep = set(verts)
        edges = [
            (a, b, Connection(fa, fb)) for a, fa, b, fb in self.attachments if a in keep and b in keep
        ]
        return ConfigGraph(verts, edges)

    def world_pose(self, m: int) -> Pose2:
        return self.frame.compose(self.poses[m])


def face_frame(pose: Pose2, face: Face, width: float = MODULE_WIDTH):
    """Centre and outward normal angle of a connector."""
    a = pose.theta + FACE_ANGLE[face]
    h = width / 2.0
    return (pose.x + h * math.cos(a), pose.y + h * math.sin(a)), a


def mating_pose(target_pose: Pose2, target_face: Face, mover_face: Face) -> Pose2:
    """Exact pose of a module whose ``mover_face`` is docked onto ``target_face``."""
    return target_pose.compose(RELATIVE_POSES[target_face, mover_face])


def dock_error(world: WorldState, action: AssemblyAction) -> DockOutcome:
    """Normal gap, lateral offset and angular misalignment of the two faces."""
    (cm, nm) = face_frame(world.poses[action.mover], action.mover_face)
    (ct, nt) = face_frame(world.poses[action.target], action.target_face)
    dx, dy = cm[0] - ct[0], cm[1] - ct[1]
    gap = dx * math.cos(nt) + dy * math.sin(nt)
    lateral = -dx * math.sin(nt) + dy * math.cos(nt)
    angle = abs(wrap_angle(nm - nt - math.pi))
    return DockOutcome(False, gap, lateral, angle)


def try_dock(world: WorldState, action: AssemblyAction) -> DockOutcome:
    """Dock when the faces are inside the area of acceptance; snaps on success.

    The mover (with anything it holds) jumps to the exact mating pose and the
    connection is recorded.
    """
    for m, f in ((action.mover, action.mover_face), (action.target, action.target_face)):
        if world.face_in_use(m, f):
            raise DockError(f"connector {f.value} of module {m} is already in use")
    out = dock_error(world, action)
    ok = (
        abs(out.gap) <= DOCK_GAP + DOCK_SLACK
        and abs(out.lateral) <= DOCK_LATERAL + DOCK_SLACK
        and out.angle <= DOCK_ANGLE + DOCK_SLACK
    )
    if not ok:
        return out
    snap = mating_pose(world.poses[action.target], action.target_face, action.mover_face)
    if action.mover in world.held:
        # a held module is moved through its anchor
        anchor, rel = world.held[action.mover]
        world.poses[anchor] = snap.compose(rel.inverse())
    world.poses[action.mover] = snap
    _refresh_held(world)
    world.attachments.append((action.mover, action.mover_face, action.target, action.target_face))
    out.docked = True
    return out


def undock(world: WorldState, a: int, b: int) -> None:
    before = len(world.attachments)
    world.attachments = [e for e in world.attachments if {e[0], e[2]} != {a, b}]
    if len(world.attachments) == before:
        raise DockError(f"modules {a} and {b} are not docked")
    for m in (a, b):
        if m in world.held and world.held[m][0] in (a, b):
            del world.held[m]
    world.carried_by = {m: h for m, h in world.carried_by.items() if {m, h} != {a, b}}


def hold(world: WorldState, anchor: int, module: int) -> None:
    """Slave ``module`` to ``anchor`` with their current relative pose."""
    world.held[module] = (anchor, world.poses[module].relative_to(world.poses[anchor]))


def _refresh_held(world: WorldState) -> None:
    # anchors are never themselves held, so one pass suffices
    for m, (anchor, rel) in world.held.items():
        world.poses[m] = world.poses[anchor].compose(rel)


def step_world(world: WorldState, commands: dict, dt: float) -> WorldState:
    """Advance all commanded modules one Euler step; held modules follow rigidly."""
    anchors = {a for a, _ in world.held.values()}
    for m in sorted(commands):
        if m not in world.poses:
            raise KeyError(f"command for unknown module {m}")
        if m in world.held:
            raise DockError(f"module {m} is held by {world.held[m][0]} and cannot drive")
        if not world.is_free(m) and m not in anchors:
            raise DockError(f"module {m} is docked and cannot drive")
    for m in sorted(commands):
        cmd = commands[m]
        if cmd[0] == 0.0 and cmd[1] == 0.0:
            continue
        world.poses[m] = diff_drive_step(world.poses[m], cmd, dt)
    _refresh_held(world)
    world.clock += dt
    return world


def detect_collisions(world: WorldState, tol: float = CONTACT_TOL) -> list[tuple[int, int, float]]:
    """Overlapping pairs that are neither in one rigid group nor docking partners."""
    ids = sorted(world.poses)
    group_of: dict[int, int] = {}
    for m in ids:
        if m not in group_of:
            for u in world.group(m):
                group_of[u] = m
    for m, (anchor, _) in world.held.items():
        group_of[m] = group_of[anchor]
    out = []
    reach = MODULE_WIDTH * math.sqrt(2.0)
    for i, a in enumerate(ids):
        pa = world.poses[a]
        for b in ids[i + 1:]:
            pb = world.poses[b]
            if abs(pa.x - pb.x) >= reach or abs(pa.y - pb.y) >= reach:
                continue
            if group_of[a] == group_of[b] or frozenset((a, b)) in world.exempt:
                continue
            depth = square_penetration(pa, pb)
            if depth > tol:
                out.append((a, b, depth))
    return out
