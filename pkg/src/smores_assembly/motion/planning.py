"""Prioritized space-time A* on the routing grid.

Agents plan one after another in priority order; each treats the cells
already claimed by higher-priority agents as moving obstacles and may wait
in place.  If an agent cannot find a route it is promoted to the front and
the round is replanned (a simple form of rescheduling).

Two separation rules are available:

``"strict"`` (default)
    no two agents are ever in the same cell at times less than two steps
    apart.  This rules out vertex conflicts, swaps and one agent stepping
    into a cell another has just left, which leaves room for real modules
    that are larger than a point.
``"standard"``
    the usual vertex-plus-swap rule.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..scheduler import GridMap

Cell = tuple[int, int]
MOVES = ((1, 0), (-1, 0), (0, 1), (0, -1), (0, 0))


class PlanningError(RuntimeError):
    def __init__(self, agent, reason: str):
        self.agent = agent
        super().__init__(f"no path for module {agent}: {reason}")


@dataclass(frozen=True)
class GridPath:
    """Cell occupied at every step; the agent stays on the last cell afterwards."""

    agent: int
    cells: tuple[Cell, ...]

    def at(self, t: int) -> Cell:
        return self.cells[min(t, len(self.cells) - 1)]

    @property
    def arrival(self) -> int:
        # first step from which the agent never leaves the goal again
        last = self.cells[-1]
        t = len(self.cells) - 1
        while t > 0 and self.cells[t - 1] == last:
            t -= 1
        return t

    def waypoints(self, grid: GridMap) -> list[tuple[float, float]]:
        return [grid.center(c) for c in self.cells]

    def waits(self) -> int:
        return sum(1 for a, b in zip(self.cells, self.cells[1:]) if a == b)


class _Reservations:
    def __init__(self, margin: int):
        self.margin = margin  # 1 for strict separation, 0 for vertex-only
        self.cells: dict[Cell, list[tuple[int, int]]] = {}  # cell -> [(t, agent)]
        self.moves: set[tuple[Cell, Cell, int]] = set()  # (from, to, t) for swap checks
        self.parked: dict[Cell, tuple[int, int]] = {}  # cell -> (from time, agent)

    def add_path(self, path: GridPath) -> None:
        for t, c in enumerate(path.cells):
            self.cells.setdefault(c, []).append((t, path.agent))
            if t:
                self.moves.add((path.cells[t - 1], c, t))
        self.parked[path.cells[-1]] = (len(path.cells) - 1, path.agent)

    def add_hold(self, cell: Cell, until: int, agent) -> None:
        for t in range(until + 1):
            self.cells.setdefault(cell, []).append((t, agent))

    def blocked(self, cell: Cell, t: int) -> bool:
        m = self.margin
        for tt, _ in self.cells.get(cell, ()):
            if abs(tt - t) <= m:
                return True
        park = self.parked.get(cell)
        return park is not None and t >= park[0] - m

    def swap(self, a: Cell, b: Cell, t: int) -> bool:
        # someone moves b -> a over the same step
        return (b, a, t) in self.moves

    def last_use(self, cell: Cell) -> int:
        times = [tt for tt, _ in self.cells.get(cell, ())]
        return max(times) if times else -1


def _distances(grid: GridMap, goal: Cell) -> dict[Cell, int]:
    dist = {goal: 0}
    q = deque([goal])
    while q:
        c = q.popleft()
        for dx, dy in MOVES[:4]:
            n = (c[0] + dx, c[1] + dy)
            if n not in dist and grid.is_free(n):
                dist[n] = dist[c] + 1
                q.append(n)
    return dist


def _space_time_astar(grid, start, goal, res: _Reservations, horizon: int, agent, margin: int):
    h = _distances(grid, goal)
    if start not in h:
        raise PlanningError(agent, "goal unreachable on the static grid")
    if res.blocked(start, 0) and margin == 0:
        raise PlanningError(agent, "start cell taken at t=0")
    settle = res.last_use(goal) + margin + 1  # earliest time the goal can be kept for good
    open_ = [(h[start], 0, start, 0)]
    parent = {(start, 0): None}
    tie = 0
    while open_:
        f, _, cell, t = heapq.heappop(open_)
        if cell == goal and t >= settle:
            out = []
            node = (cell, t)
            while node is not None:
                out.append(node[0])
                node = parent[node]
            return tuple(reversed(out))
        if t >= horizon:
            continue
        for dx, dy in MOVES:
            n = (cell[0] + dx, cell[1] + dy)
            if n not in h or (n, t + 1) in parent:
                continue
            if res.blocked(n, t + 1) or (n != cell and res.swap(cell, n, t + 1)):
                continue
            parent[(n, t + 1)] = (cell, t)
            tie += 1
            heapq.heappush(open_, (t + 1 + h[n], tie, n, t + 1))
    raise PlanningError(agent, f"no conflict-free route within {horizon} steps")


def plan_paths(
    grid: GridMap,
    starts: dict,
    goals: dict,
    priorities: Sequence | None = None,
    mode: str = "strict",
    horizon: int | None = None,
    retries: int | None = None,
    restarts: int = 64,
) -> list[GridPath]:
    """Conflict-free timed paths for every agent (keys of ``starts``).

    ``priorities`` lists agents from most to least important (default:
    ascending id).  Returned paths follow the priority order actually used.
    When an agent cannot be routed it is promoted to the front and the round
    is replanned; if that keeps failing, up to ``restarts`` shuffled orders
    drawn from a fixed seed are tried, so results stay reproducible.
    """
    if set(starts) != set(goals):
        raise ValueError("starts and goals name different agents")
    if mode not in ("strict", "standard"):
        raise ValueError(f"unknown separation mode {mode!r}")
    margin = 1 if mode == "strict" else 0
    order = list(priorities) if priorities is not None else sorted(starts)
    for a in order:
        for what, c in (("start", starts[a]), ("goal", goals[a])):
            if not grid.is_free(c):
                raise PlanningError(a, f"{what} cell {c} is not free")
    if len(set(goals.values())) != len(goals):
        raise ValueError("two agents share a goal cell")
    if horizon is None:
        horizon = (grid.shape[0] + grid.shape[1]) * (2 + len(order))
    retries = len(order) if retries is None else retries

    last_error = None
    for _ in range(retries + 1):
        try:
            return _plan_round(grid, starts, goals, order, margin, horizon)
        except PlanningError as exc:
            last_error = exc
            order = [exc.agent] + [a for a in order if a != exc.agent]
    rng = np.random.default_rng(len(order))
    base = sorted(order)
    for _ in range(restarts):
        shuffled = [base[k] for k in rng.permutation(len(base))]
        try:
            return _plan_round(grid, starts, goals, shuffled, margin, horizon)
        except PlanningError:
            continue
    raise last_error


def _plan_round(grid, starts, goals, order, margin, horizon):
    res = _Reservations(margin)
    out = []
    for i, a in enumerate(order):
        # agents that have not planned yet still sit on their start cells
        pending = _Reservations(margin)
        pending.cells = {c: list(v) for c, v in res.cells.items()}
        pending.moves = res.moves
        pending.parked = dict(res.parked)
        for b in order[i + 1:]:
            pending.add_hold(starts[b], 0, b)
        cells = _space_time_astar(grid, starts[a], goals[a], pending, horizon, a, margin)
        path = GridPath(a, cells)
        res.add_path(path)
        out.append(path)
    # lower-priority agents must also leave their starts before anyone passes;
    # the hold above only covers t=0, so re-check the full set
    bad = find_conflicts(out, "strict" if margin else "standard")
    if bad:
        raise PlanningError(bad[0][1], f"conflict at step {bad[0][3]}")
    return out


def find_conflicts(paths: Sequence[GridPath], mode: str = "standard") -> list[tuple]:
    """Exhaustive pairwise check; returns (kind, agent_a, agent_b, t) tuples.

    Paths are extended by waiting on their last cell.  ``"standard"``
    checks vertex and swap conflicts, ``"strict"`` additionally flags one
    agent entering a cell the other occupied one step earlier or later.
    """
    horizon = max((len(p.cells) for p in paths), default=0) + 1
    out = []
    for i in range(len(paths)):
        for j in range(i + 1, len(paths)):
            p, q = paths[i], paths[j]
            for t in range(horizon):
                if p.at(t) == q.at(t):
                    out.append(("vertex", p.agent, q.agent, t))
                if t and p.at(t) == q.at(t - 1) and q.at(t) == p.at(t - 1) and p.at(t) != p.at(t - 1):
                    out.append(("swap", p.agent, q.agent, t))
                if mode == "strict" and t:
                    if p.at(t) == q.at(t - 1) and p.at(t) != q.at(t) or q.at(t) == p.at(t - 1) and q.at(t) != p.at(t):
                        out.append(("follow", p.agent, q.agent, t))
    return out
