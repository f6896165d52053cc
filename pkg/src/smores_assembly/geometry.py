"""Planar poses and the handful of rigid-body helpers everything else uses."""

from __future__ import annotations

import math
from typing import NamedTuple

#: Module side length (m).
MODULE_WIDTH = 0.08


def wrap_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


class Pose2(NamedTuple):
    x: float
    y: float
    theta: float

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    def compose(self, other: "Pose2") -> "Pose2":
        """Return ``self * other``: ``other`` is expressed in the frame of ``self``."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(
            c * other.x - s * other.y + self.x,
            s * other.x + c * other.y + self.y,
            wrap_angle(self.theta + other.theta),
        )

    def inverse(self) -> "Pose2":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Pose2(-c * self.x - s * self.y, s * self.x - c * self.y, wrap_angle(-self.theta))

    def relative_to(self, frame: "Pose2") -> "Pose2":
        """Express this pose in the body frame of ``frame``."""
        return frame.inverse().compose(self)

    def transform_point(self, px: float, py: float) -> tuple[float, float]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * px - s * py + self.x, s * px + c * py + self.y)

    def distance_to(self, other: "Pose2") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "theta": self.theta}

    @classmethod
    def from_dict(cls, d) -> "Pose2":
        return cls(float(d["x"]), float(d["y"]), float(d.get("theta", 0.0)))


IDENTITY = Pose2(0.0, 0.0, 0.0)


def square_corners(pose: Pose2, width: float = MODULE_WIDTH) -> list[tuple[float, float]]:
    h = width / 2.0
    return [pose.transform_point(px, py) for px, py in ((h, h), (-h, h), (-h, -h), (h, -h))]


def square_penetration(a: Pose2, b: Pose2, width: float = MODULE_WIDTH) -> float:
    """Penetration depth of two oriented squares (separating axis test).

    Returns 0.0 when they are separated or just touching.
    """
    # Quick reject: circumscribed circles.
    if math.hypot(a.x - b.x, a.y - b.y) >= width * math.sqrt(2.0):
        return 0.0
    ca, cb = square_corners(a, width), square_corners(b, width)
    depth = math.inf
    for theta in (a.theta, b.theta):
        for ax, ay in ((math.cos(theta), math.sin(theta)), (-math.sin(theta), math.cos(theta))):
            pa = [x * ax + y * ay for x, y in ca]
            pb = [x * ax + y * ay for x, y in cb]
            overlap = min(max(pa), max(pb)) - max(min(pa), min(pb))
            if overlap <= 0.0:
                return 0.0
            depth = min(depth, overlap)
    return depth
