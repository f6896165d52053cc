"""Velocity command generators for navigation, pose adjustment and approach.

All functions are pure: they map the current state (and a config) to a
:class:`VelocityCommand`.  Poses handed to the docking laws are expressed
in the mover's goal frame, i.e. the pose the mover has once docked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import NamedTuple, Sequence

import numpy as np

from ..geometry import Pose2, wrap_angle

LATERAL = "lateral"  # TOP/BOTTOM docking: drive (y', theta') to zero
LONGITUDINAL = "longitudinal"  # LEFT/RIGHT docking: drive (x', theta') to zero


def _number(where: str, value, kind):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ValueError(f"{where}: expected a finite number, got {value!r}")
    if kind is int and value != int(value):
        raise ValueError(f"{where}: expected an integer, got {value!r}")
    return kind(value)


def typed_settings(cls, data: dict, section: str) -> dict:
    """Check a settings dict against a dataclass's fields, coercing numbers."""
    if not isinstance(data, dict):
        raise ValueError(f"{section}: expected an object")
    defaults = {f.name: f.default for f in fields(cls)}
    extra = set(data) - set(defaults)
    if extra:
        raise KeyError(f"unknown {section} setting(s): {sorted(extra)}")
    out = {}
    for key, value in data.items():
        default = defaults[key]
        where = f"{section}.{key}"
        if isinstance(default, bool):
            if not isinstance(value, bool):
                raise ValueError(f"{where}: expected true or false, got {value!r}")
            out[key] = value
        elif isinstance(default, (int, float)):
            out[key] = _number(where, value, type(default))
        elif isinstance(default, str):
            if not isinstance(value, str):
                raise ValueError(f"{where}: expected a string, got {value!r}")
            out[key] = value
        else:
            out[key] = value
    return out


@dataclass
class MotionConfig:
    v_max: float = 0.1
    omega_max: float = 1.0
    v_dock: float = 0.03
    gain: tuple[float, float] = (2.0, 1.0)  # K = diag(k1, k2)
    eps_sing: float = 0.02
    nudge: float = 0.2
    align_offset: float = 1e-3
    align_angle: float = 0.01
    capture: float = 0.02
    lateral_band: float = 0.007
    heading_gain: float = 1.0
    lookahead: float = 0.05
    turn_gain: float = 3.0
    turn_in_place: float = 0.35  # heading error above which the path follower stops to turn
    dt: float = 1.0 / 40.0

    @classmethod
    def from_dict(cls, data: dict) -> "MotionConfig":
        kw = typed_settings(cls, data, "motion")
        if "gain" in kw:
            gain = kw["gain"]
            if not isinstance(gain, (list, tuple)) or len(gain) != 2:
                raise ValueError("motion.gain: expected two numbers")
            kw["gain"] = tuple(_number("motion.gain", g, float) for g in gain)
        return cls(**kw)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self)}
        out["gain"] = list(self.gain)
        return out

    @property
    def K(self) -> np.ndarray:
        return np.diag(self.gain)


class VelocityCommand(NamedTuple):
    v: float
    omega: float
    flag: str | None = None  # "singular", "abort" or "complete"


STOP = VelocityCommand(0.0, 0.0)


class GoalFramePose(NamedTuple):
    """Mover pose in its goal frame: (x', y', theta')."""

    x: float
    y: float
    theta: float

    @classmethod
    def of(cls, pose: Pose2, goal: Pose2) -> "GoalFramePose":
        rel = pose.relative_to(goal)
        return cls(rel.x, rel.y, wrap_angle(rel.theta))


def saturate(v: float, omega: float, cfg: MotionConfig, flag=None) -> VelocityCommand:
    """Scale (v, omega) down together until both limits hold; keeps the path shape."""
    s = 1.0
    if abs(v) > cfg.v_max:
        s = cfg.v_max / abs(v)
    if abs(omega) * s > cfg.omega_max:
        s = cfg.omega_max / abs(omega)
    return VelocityCommand(v * s, omega * s, flag)


def diff_drive_step(pose: Pose2, cmd, dt: float) -> Pose2:
    """One explicit Euler step of the unicycle model."""
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    v, omega = cmd[0], cmd[1]
    return Pose2(
        pose.x + v * math.cos(pose.theta) * dt,
        pose.y + v * math.sin(pose.theta) * dt,
        wrap_angle(pose.theta + omega * dt),
    )


def pose_adjust_command(
    gp: GoalFramePose,
    face_class: str = LATERAL,
    K=None,
    cfg: MotionConfig | None = None,
) -> VelocityCommand:
    """Alignment law: v from the offset over sin/cos(theta'), omega = -k2 theta'.

    Lateral case: [v, w] = diag(sin th, 1)^-1 K [-y, -th].  Longitudinal
    case mirrors it with x and cos th.  Close to the singular heading the
    linear speed is clipped and a fixed turn rate is added so the heading
    leaves the singular band.
    """
    cfg = cfg or MotionConfig()
    K = np.asarray(cfg.K if K is None else K, dtype=float).tolist()
    if face_class == LATERAL:
        offset, gain_dir = gp.y, math.sin(gp.theta)
        th_err = gp.theta
    elif face_class == LONGITUDINAL:
        offset, gain_dir = gp.x, math.cos(gp.theta)
        th_err = gp.theta
    else:
        raise ValueError(f"unknown face class {face_class!r}")
    u0 = -(K[0][0] * offset + K[0][1] * th_err)
    u1 = -(K[1][0] * offset + K[1][1] * th_err)

    if face_class == LATERAL:
        near_singular = abs(gp.theta) < cfg.eps_sing or abs(abs(gp.theta) - math.pi) < cfg.eps_sing
    else:
        near_singular = abs(abs(gp.theta) - math.pi / 2.0) < cfg.eps_sing
    if near_singular and abs(offset) > cfg.align_offset:
        # no useful authority over the offset: clip v and turn out of the band
        v = 0.0 if gain_dir == 0.0 else u0 / gain_dir
        v = max(-cfg.v_max, min(cfg.v_max, v))
        omega = -cfg.nudge if offset > 0.0 else cfg.nudge
        return VelocityCommand(v, omega, "singular")
    v = 0.0 if gain_dir == 0.0 else u0 / gain_dir
    return saturate(v, u1, cfg)


def is_aligned(gp: GoalFramePose, face_class: str, cfg: MotionConfig) -> bool:
    off = gp.y if face_class == LATERAL else gp.x
    return abs(off) < cfg.align_offset and abs(gp.theta) < cfg.align_angle


def approach_command(
    gp: GoalFramePose,
    heading_gain: float | None = None,
    cfg: MotionConfig | None = None,
    direction: int = 1,
    face_class: str = LATERAL,
) -> VelocityCommand:
    """Drive straight at v_dock (``direction`` -1 backs up) holding theta' at zero."""
    cfg = cfg or MotionConfig()
    k = cfg.heading_gain if heading_gain is None else heading_gain
    off = gp.y if face_class == LATERAL else gp.x
    if abs(off) > cfg.lateral_band:
        return VelocityCommand(0.0, 0.0, "abort")
    omega = -k * gp.theta
    return VelocityCommand(direction * cfg.v_dock, max(-cfg.omega_max, min(cfg.omega_max, omega)))


def follow_path_command(
    pose: Pose2,
    path: Sequence[tuple[float, float]],
    lookahead: float | None = None,
    cfg: MotionConfig | None = None,
    capture: float | None = None,
) -> VelocityCommand:
    """Waypoint pursuit: steer at the first waypoint beyond the lookahead circle.

    Turns on the spot while the heading error is large, otherwise drives
    forward with a proportional turn rate.  Reports ``"complete"`` inside
    the capture radius of the last waypoint.
    """
    cfg = cfg or MotionConfig()
    look = cfg.lookahead if lookahead is None else lookahead
    cap = cfg.capture if capture is None else capture
    if not path:
        raise ValueError("empty path")
    gx, gy = path[-1]
    dist_goal = math.hypot(gx - pose.x, gy - pose.y)
    if dist_goal <= cap:
        return VelocityCommand(0.0, 0.0, "complete")

    # closest segment, then the first point at least `look` away along the path
    pts = [(pose.x, pose.y)] if len(path) == 1 else list(path)
    best, best_d = 0, math.inf
    for i in range(len(pts) - 1):
        d = _point_segment_distance(pose.x, pose.y, pts[i], pts[i + 1])
        if d < best_d - 1e-12:
            best, best_d = i, d
    target = path[-1]
    for p in path[best + 1:]:
        if math.hypot(p[0] - pose.x, p[1] - pose.y) >= look:
            target = p
            break

    heading = math.atan2(target[1] - pose.y, target[0] - pose.x)
    err = wrap_angle(heading - pose.theta)
    if abs(err) > cfg.turn_in_place:
        return saturate(0.0, cfg.turn_gain * err, cfg)
    v = min(cfg.v_max, 2.0 * dist_goal) * math.cos(err)
    return saturate(v, cfg.turn_gain * err, cfg)


def _point_segment_distance(px, py, a, b) -> float:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0.0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))
