"""Wave-parallel assembly schedules.

Movers are grouped by their depth in the rooted target tree; each group is a
wave that runs in parallel once the previous wave has fully docked.  The
wave that docks onto the root is split so the root's LEFT/RIGHT faces are
served before its TOP/BOTTOM faces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping as TMapping, Sequence

import numpy as np

from .assignment import Mapping
from .geometry import Pose2
from .topology import ConfigGraph, Face, find_root, rooted_info

SIDE_FACES = (Face.LEFT, Face.RIGHT)


@dataclass(frozen=True)
class AssemblyAction:
    """Connect ``mover``'s ``mover_face`` to ``target``'s ``target_face``.

    ``kind`` is ``"dock"`` for assembly and ``"undock"`` for the release
    steps of a reconfiguration.  ``helper`` is filled in once a helping
    module has been assigned to a side-face docking.
    """

    mover: int
    mover_face: Face
    target: int
    target_face: Face
    helper: int | None = None
    kind: str = "dock"

    def __post_init__(self):
        object.__setattr__(self, "mover_face", Face.parse(self.mover_face))
        object.__setattr__(self, "target_face", Face.parse(self.target_face))
        if self.mover == self.target:
            raise ValueError(f"module {self.mover} cannot dock to itself")
        if self.kind not in ("dock", "undock"):
            raise ValueError(f"unknown action kind {self.kind!r}")

    @property
    def helper_required(self) -> bool:
        return self.kind == "dock" and self.mover_face in SIDE_FACES

    @property
    def key(self) -> tuple[int, str, int, str]:
        return (self.mover, self.mover_face.short, self.target, self.target_face.short)

    def __str__(self) -> str:
        head = "" if self.kind == "dock" else "undock "
        tail = "" if self.helper is None else f" via {self.helper}"
        return f"{head}({self.mover}, {self.mover_face.short}, {self.target}, {self.target_face.short}){tail}"

    def to_dict(self) -> dict:
        return {
            "mover": self.mover,
            "mover_face": self.mover_face.value,
            "target": self.target,
            "target_face": self.target_face.value,
            "helper": self.helper,
            "kind": self.kind,
        }

    @classmethod
    def from_dict(cls, d) -> "AssemblyAction":
        return cls(
            int(d["mover"]),
            Face.parse(d["mover_face"]),
            int(d["target"]),
            Face.parse(d["target_face"]),
            None if d.get("helper") is None else int(d["helper"]),
            d.get("kind", "dock"),
        )


@dataclass(frozen=True)
class Schedule:
    waves: tuple[tuple[AssemblyAction, ...], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "waves", tuple(tuple(w) for w in self.waves))

    def __len__(self) -> int:
        return len(self.waves)

    def __iter__(self):
        return iter(self.waves)

    def actions(self) -> list[AssemblyAction]:
        return [a for w in self.waves for a in w]

    def keys(self) -> list[list[tuple]]:
        return [[a.key for a in w] for w in self.waves]

    def to_dict(self) -> dict:
        return {"waves": [[a.to_dict() for a in w] for w in self.waves]}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data) -> "Schedule":
        return cls(tuple(tuple(AssemblyAction.from_dict(a) for a in w) for w in data["waves"]))


# ---------------------------------------------------------------------------
# Grid


@dataclass
class GridMap:
    """Square routing grid in the root frame; cell (0, 0) is centred on the root.

    ``occupied[i - imin, j - jmin]`` marks cell (i, j), whose centre is at
    ``(i * cell, j * cell)``.
    """

    cell: float
    imin: int
    jmin: int
    occupied: np.ndarray

    @classmethod
    def covering(cls, points: Iterable[tuple[float, float]], cell: float = 0.1, pad: int = 2) -> "GridMap":
        pts = np.array(list(points), dtype=float).reshape(-1, 2)
        pts = np.vstack([pts, [[0.0, 0.0]]])
        idx = np.rint(pts / cell).astype(int)
        lo = idx.min(axis=0) - pad
        hi = idx.max(axis=0) + pad
        shape = tuple(int(v) for v in hi - lo + 1)
        return cls(cell, int(lo[0]), int(lo[1]), np.zeros(shape, dtype=bool))

    @property
    def shape(self) -> tuple[int, int]:
        return self.occupied.shape

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(round(x / self.cell)), int(round(y / self.cell)))

    def center(self, c: tuple[int, int]) -> tuple[float, float]:
        return (c[0] * self.cell, c[1] * self.cell)

    def in_bounds(self, c) -> bool:
        i, j = c[0] - self.imin, c[1] - self.jmin
        return 0 <= i < self.occupied.shape[0] and 0 <= j < self.occupied.shape[1]

    def is_free(self, c) -> bool:
        return self.in_bounds(c) and not self.occupied[c[0] - self.imin, c[1] - self.jmin]

    def cells(self):
        for i in range(self.shape[0]):
            for j in range(self.shape[1]):
                yield (i + self.imin, j + self.jmin)

    def with_blocked_discs(self, centers: Iterable[tuple[float, float]], radius: float) -> "GridMap":
        """Copy with every cell whose centre lies within ``radius`` of a point blocked."""
        occ = self.occupied.copy()
        ii, jj = np.meshgrid(
            (np.arange(self.shape[0]) + self.imin) * self.cell,
            (np.arange(self.shape[1]) + self.jmin) * self.cell,
            indexing="ij",
        )
        for x, y in centers:
            occ |= np.hypot(ii - x, jj - y) < radius
        return GridMap(self.cell, self.imin, self.jmin, occ)

    def with_cells(self, cells: Iterable[tuple[int, int]], value: bool) -> "GridMap":
        occ = self.occupied.copy()
        for c in cells:
            if self.in_bounds(c):
                occ[c[0] - self.imin, c[1] - self.jmin] = value
        return GridMap(self.cell, self.imin, self.jmin, occ)


# ---------------------------------------------------------------------------
# Parallel assembly


def _tree_actions(graph: ConfigGraph, root: int, f: TMapping[int, int]):
    """(depth, action) for every non-root vertex: child docks to its parent."""
    info = rooted_info(graph, root)
    out = []
    for v, link in info.parent.items():
        if link is None:
            continue
        parent, child_face, parent_face = link
        out.append((info.depth[v], AssemblyAction(f[v], child_face, f[parent], parent_face)))
    return info, out


def _check_mapping(graph: ConfigGraph, f: TMapping[int, int]) -> None:
    if set(f) != set(graph.vertices):
        raise ValueError("mapping does not cover exactly the target modules")
    if len(set(f.values())) != len(f):
        raise ValueError("mapping is not one-to-one")


def plan_assembly(graph: ConfigGraph, f: Mapping | TMapping[int, int], root: int | None = None) -> Schedule:
    """One wave per depth level, movers in id order; the root wave is split."""
    f = f.target_to_module if isinstance(f, Mapping) else dict(f)
    _check_mapping(graph, f)
    if root is None:
        root = find_root(graph)
    info, tagged = _tree_actions(graph, root, f)
    waves: list[tuple[AssemblyAction, ...]] = []
    for d in range(1, info.graph_depth + 1):
        wave = sorted((a for depth, a in tagged if depth == d), key=lambda a: a.mover)
        if d == 1:
            lr, tb = split_root_wave(wave, f[root])
            waves.extend(w for w in (lr, tb) if w)
        else:
            waves.append(tuple(wave))
    return Schedule(tuple(waves))


def split_root_wave(wave: Sequence[AssemblyAction], root: int):
    """(actions onto the root's LEFT/RIGHT, everything else)."""
    lr = tuple(a for a in wave if a.target == root and a.target_face in SIDE_FACES)
    rest = tuple(a for a in wave if a not in lr)
    return lr, rest


# ---------------------------------------------------------------------------
# Helper modules

HELPER_STEPS = ("dock", "lift", "deliver", "place", "push", "undock", "retreat")


@dataclass(frozen=True)
class HelperStep:
    step: str
    helper: int
    module: int
    face: Face  # the mover face the helper's TOP holds


def helper_steps(action: AssemblyAction) -> list[HelperStep]:
    """Expanded sequence for a helper-mediated docking.

    The helper docks its TOP to the mover's side face opposite the one being
    mated, lifts and carries the mover, places it, pushes it home and leaves.
    """
    if action.helper is None:
        raise ValueError(f"no helper assigned to {action}")
    held = action.mover_face.opposite()
    return [HelperStep(s, action.helper, action.mover, held) for s in HELPER_STEPS]


def helper_dock_action(action: AssemblyAction) -> AssemblyAction:
    """The extra (helper, TOP, mover, opposite side) docking."""
    return AssemblyAction(action.helper, Face.TOP, action.mover, action.mover_face.opposite())


def insert_helper_actions(
    schedule: Schedule,
    helpers: Sequence[int],
    positions: TMapping[int, Pose2] | None = None,
) -> Schedule:
    """Give every side-face docking a helper; at most ``len(helpers)`` run at once.

    Helper-mediated actions of a wave are served in queue order, or
    nearest-first from the helpers' starting poses when ``positions`` is
    given.  Extra helper-mediated actions spill into follow-up sub-waves.
    """
    helpers = list(helpers)
    needs = [a for a in schedule.actions() if a.helper_required]
    if not needs:
        return schedule
    if not helpers:
        raise ValueError("side-face docking needs a helper but none is declared")
    busy = {a.mover for a in schedule.actions()} | {a.target for a in schedule.actions()}
    clash = busy.intersection(helpers)
    if clash:
        raise ValueError(f"helper module(s) {sorted(clash)} also take part in the assembly")

    k = len(helpers)
    waves: list[tuple[AssemblyAction, ...]] = []
    for wave in schedule.waves:
        plain = [a for a in wave if not a.helper_required]
        queue = [a for a in wave if a.helper_required]
        if positions is not None and queue:
            queue = _nearest_first(queue, helpers, positions)
        batches = [queue[i:i + k] for i in range(0, len(queue), k)] or [[]]
        for n, batch in enumerate(batches):
            tagged = [replace(a, helper=h) for a, h in zip(batch, _pair_helpers(batch, helpers, positions))]
            merged = (plain if n == 0 else []) + tagged
            if merged:
                waves.append(tuple(sorted(merged, key=lambda a: a.mover)))
    return Schedule(tuple(waves))


def _nearest_first(queue, helpers, positions):
    # serve the mover closest to the (first) helper first, then the next closest
    # to where that mover was picked up
    todo = list(queue)
    here = positions[helpers[0]]
    order = []
    while todo:
        nxt = min(todo, key=lambda a: (here.distance_to(positions[a.mover]), a.mover))
        order.append(nxt)
        todo.remove(nxt)
        here = positions[nxt.mover]
    return order


def _pair_helpers(batch, helpers, positions):
    if positions is None or len(batch) <= 1:
        return helpers[: len(batch)]
    free = list(helpers)
    out = []
    for a in batch:
        h = min(free, key=lambda h: (positions[h].distance_to(positions[a.mover]), h))
        free.remove(h)
        out.append(h)
    return out


# ---------------------------------------------------------------------------
# Reconfiguration


@dataclass(frozen=True)
class ReconfigAction:
    kind: str  # "dock" or "undock"
    a: int
    face_a: Face
    b: int
    face_b: Face

    def __post_init__(self):
        object.__setattr__(self, "face_a", Face.parse(self.face_a))
        object.__setattr__(self, "face_b", Face.parse(self.face_b))
        if self.kind not in ("dock", "undock"):
            raise ValueError(f"unknown action kind {self.kind!r}")

    def as_assembly(self) -> AssemblyAction:
        return AssemblyAction(self.a, self.face_a, self.b, self.face_b, kind=self.kind)

    def pair(self) -> frozenset:
        return frozenset(((self.a, self.face_a), (self.b, self.face_b)))

    @classmethod
    def from_dict(cls, d) -> "ReconfigAction":
        return cls(d["action"].lower(), int(d["a"]), d["fa"], int(d["b"]), d["fb"])

    def to_dict(self) -> dict:
        return {"action": self.kind, "a": self.a, "fa": self.face_a.value, "b": self.b, "fb": self.face_b.value}


def _face_pairs(graph: ConfigGraph) -> set[frozenset]:
    return {frozenset(((a, fa), (b, fb))) for a, fa, b, fb in graph.edge_set()}


def parallelize_reconfiguration(
    g_init: ConfigGraph,
    g_goal: ConfigGraph,
    f_inv: TMapping[int, int],
    actions: Sequence[ReconfigAction],
) -> Schedule:
    """Undock everything listed first, then dock in goal-tree depth order.

    Depths come from the goal tree rooted at its centre.  Goal connections
    that already exist (and are not released) are left alone: they never
    appear as actions and an empty depth level produces no wave.
    """
    actions = list(actions)
    if not actions:
        return Schedule(())
    f_inv = dict(f_inv)
    if set(f_inv) != set(g_goal.vertices) or set(f_inv.values()) != set(g_init.vertices):
        raise ValueError("goal-to-initial mapping does not match the two configurations")
    for act in actions:
        for m in (act.a, act.b):
            if m not in g_init.vertices:
                raise ValueError(f"action {act.to_dict()} names unknown module {m}")

    undocks = [a for a in actions if a.kind == "undock"]
    docks = {a.pair(): a for a in actions if a.kind == "dock"}
    init_pairs = _face_pairs(g_init)
    for u in undocks:
        if u.pair() not in init_pairs:
            raise ValueError(f"undock {u.to_dict()} releases a connection that does not exist")
    kept = init_pairs - {u.pair() for u in undocks}

    root = find_root(g_goal)
    info = rooted_info(g_goal, root)
    by_depth: dict[int, list[AssemblyAction]] = {}
    used = set()
    for v, link in info.parent.items():
        if link is None:
            continue
        parent, child_face, parent_face = link
        m, pm = f_inv[v], f_inv[parent]
        pair = frozenset(((m, child_face), (pm, parent_face)))
        if pair in docks:
            by_depth.setdefault(info.depth[v], []).append(docks[pair].as_assembly())
            used.add(pair)
        elif pair not in kept:
            raise ValueError(
                f"goal connection {m}.{child_face.value}-{pm}.{parent_face.value} "
                "is neither kept nor created by a dock action"
            )
    stray = [d.to_dict() for p, d in docks.items() if p not in used]
    if stray:
        raise ValueError(f"dock action(s) {stray} never attach a goal connection")

    waves: list[tuple[AssemblyAction, ...]] = []
    if undocks:
        waves.append(tuple(sorted((u.as_assembly() for u in undocks), key=lambda a: a.mover)))
    root_module = f_inv[root]
    for d in sorted(by_depth):
        wave = sorted(by_depth[d], key=lambda a: a.mover)
        if d == 1:
            lr, tb = split_root_wave(wave, root_module)
            waves.extend(w for w in (lr, tb) if w)
        else:
            waves.append(tuple(wave))
    return Schedule(tuple(waves))
