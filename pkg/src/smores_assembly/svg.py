"""Minimal SVG writer for module footprints and path traces."""

from __future__ import annotations

from typing import Iterable, Sequence

from .geometry import MODULE_WIDTH, Pose2, square_corners

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


class SvgCanvas:
    """Collects shapes in world metres and maps them onto a y-up drawing."""

    def __init__(self, scale: float = 600.0, margin: float = 0.1):
        self.scale = scale
        self.margin = margin
        self._items: list[tuple[str, list[tuple[float, float]], dict]] = []

    def polygon(self, pts: Sequence[tuple[float, float]], **style) -> None:
        self._items.append(("polygon", list(pts), style))

    def polyline(self, pts: Sequence[tuple[float, float]], **style) -> None:
        if len(pts) >= 2:
            self._items.append(("polyline", list(pts), style))

    def text(self, x: float, y: float, label: str, **style) -> None:
        self._items.append(("text", [(x, y)], dict(style, label=label)))

    def square(self, pose: Pose2, width: float = MODULE_WIDTH, label: str | None = None, **style):
        self.polygon(square_corners(pose, width), **style)
        # short tick on the TOP face shows the heading
        tip = pose.transform_point(width / 2.0, 0.0)
        self.polyline([(pose.x, pose.y), tip], stroke=style.get("stroke", "black"), stroke_width=1)
        if label is not None:
            self.text(pose.x, pose.y, label, font_size=10)

    def render(self) -> str:
        pts = [p for _, ps, _ in self._items for p in ps]
        if not pts:
            pts = [(0.0, 0.0)]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        x0, x1 = min(xs) - self.margin, max(xs) + self.margin
        y0, y1 = min(ys) - self.margin, max(ys) + self.margin
        s = self.scale
        width, height = (x1 - x0) * s, (y1 - y0) * s

        def tx(p):
            return f"{(p[0] - x0) * s:.2f},{(y1 - p[1]) * s:.2f}"

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" height="{height:.0f}" '
            f'viewBox="0 0 {width:.2f} {height:.2f}">',
            f'<rect x="0" y="0" width="{width:.2f}" height="{height:.2f}" fill="white"/>',
        ]
        for kind, ps, style in self._items:
            if kind == "text":
                st = dict(style)
                label = st.pop("label")
                (x, y), = ps
                attrs = _attrs(st, {"text_anchor": "middle", "dominant_baseline": "middle"})
                out.append(
                    f'<text x="{(x - x0) * s:.2f}" y="{(y1 - y) * s:.2f}" {attrs}>{_escape(label)}</text>'
                )
                continue
            default = {"fill": "none", "stroke": "black", "stroke_width": 1}
            out.append(f'<{kind} points="{" ".join(tx(p) for p in ps)}" {_attrs(style, default)}/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _attrs(style: dict, default: dict) -> str:
    merged = dict(default)
    merged.update(style)
    return " ".join(f'{k.replace("_", "-")}="{v}"' for k, v in merged.items())


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def footprint_svg(poses: dict[int, Pose2], labels: bool = True, traces: Iterable = ()) -> str:
    """Squares for ``poses`` (id -> pose), optionally over ``(id, [(x, y), ...])`` traces."""
    canvas = SvgCanvas()
    for mid, pts in traces:
        canvas.polyline(pts, stroke=PALETTE[mid % len(PALETTE)], stroke_width=1.5)
    for mid in sorted(poses):
        canvas.square(
            poses[mid],
            label=str(mid) if labels else None,
            fill=PALETTE[mid % len(PALETTE)],
            fill_opacity=0.35,
            stroke="black",
        )
    return canvas.render()
