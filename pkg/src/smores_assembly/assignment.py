"""Root selection and distance-optimal role assignment.

The physical root is the module nearest the cluster centroid; it is pinned
to the layout root and the remaining roles go to the remaining modules by
minimum total centre distance (Hungarian method via scipy).  Among equally
cheap assignments the lexicographically smallest one wins, where the key is
the module list read in increasing target-id order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Mapping as TMapping

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import MODULE_WIDTH, Pose2
from .layout import UnfoldedLayout

#: Two assignment costs closer than this are treated as a tie.
TIE_TOL = 1e-9

#: Largest problem the brute-force oracle will take.
BRUTE_FORCE_LIMIT = 9

ModuleSet = dict  # module id -> Pose2 (world or root frame)


@dataclass(frozen=True)
class Mapping:
    target_to_module: dict[int, int]
    cost: float

    def __getitem__(self, target: int) -> int:
        return self.target_to_module[target]

    def inverse(self) -> dict[int, int]:
        return {m: t for t, m in self.target_to_module.items()}

    def key(self) -> tuple[int, ...]:
        return tuple(self.target_to_module[t] for t in sorted(self.target_to_module))

    def to_dict(self) -> dict:
        return {
            "target_to_module": {str(t): m for t, m in sorted(self.target_to_module.items())},
            "cost_m": self.cost,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data) -> "Mapping":
        f = {int(t): int(m) for t, m in data["target_to_module"].items()}
        return cls(f, float(data.get("cost_m", math.nan)))


def spacing_violations(modules: TMapping[int, Pose2], width: float = MODULE_WIDTH) -> list[tuple[int, int, float]]:
    """Pairs of modules whose centres are not farther apart than one module width."""
    ids = sorted(modules)
    out = []
    for i, a in enumerate(ids):
        for b in ids[i + 1:]:
            d = modules[a].distance_to(modules[b])
            if d <= width:
                out.append((a, b, d))
    return out


def select_root_module(modules: TMapping[int, Pose2]) -> int:
    """Module closest to the centroid of all centres (smaller id on a tie)."""
    if not modules:
        raise ValueError("cannot pick a root from an empty module set")
    ids = sorted(modules)
    xy = np.array([[modules[i].x, modules[i].y] for i in ids])
    centroid = xy.mean(axis=0)
    dist = np.hypot(xy[:, 0] - centroid[0], xy[:, 1] - centroid[1])
    return ids[int(np.argmin(dist))]  # argmin returns the first minimum


def to_root_frame(modules: TMapping[int, Pose2], root: int) -> dict[int, Pose2]:
    """Express every module pose in the body frame of ``root``."""
    if root not in modules:
        raise KeyError(f"unknown module {root}")
    inv = modules[root].inverse()
    out = {i: inv.compose(p) for i, p in modules.items()}
    out[root] = Pose2(0.0, 0.0, 0.0)
    return out


def _prepare(layout: UnfoldedLayout, modules, root_pair):
    target_root, module_root = root_pair
    if len(layout.pose) != len(modules):
        raise ValueError(f"size mismatch: {len(layout.pose)} roles for {len(modules)} modules")
    if target_root not in layout.pose:
        raise KeyError(f"unknown target root {target_root}")
    local = to_root_frame(modules, module_root)
    targets = sorted(t for t in layout.pose if t != target_root)
    mods = sorted(m for m in local if m != module_root)
    tgt_xy = layout.centers(targets)
    mod_xy = np.array([[local[m].x, local[m].y] for m in mods]).reshape(-1, 2)
    cost = np.hypot(
        tgt_xy[:, None, 0] - mod_xy[None, :, 0], tgt_xy[:, None, 1] - mod_xy[None, :, 1]
    )
    return targets, mods, cost


def mapping_cost(cost: np.ndarray, cols) -> float:
    """Sum row by row in target-id order so equal assignments give equal floats."""
    total = 0.0
    for r, c in enumerate(cols):
        total += float(cost[r, c])
    return total


def _finish(targets, mods, cols, root_pair) -> dict[int, int]:
    f = {root_pair[0]: root_pair[1]}
    for t, c in zip(targets, cols):
        f[t] = mods[c]
    return f


def _solve(cost: np.ndarray) -> np.ndarray:
    rows, cols = linear_sum_assignment(cost)
    out = np.empty(cost.shape[0], dtype=int)
    out[rows] = cols
    return out


def _lexicographic_optimum(cost: np.ndarray) -> list[int]:
    """Hungarian optimum, then walk rows fixing the smallest column that keeps it optimal."""
    n = cost.shape[0]
    best = _solve(cost)
    opt = mapping_cost(cost, best)
    for r in range(n):
        cur = best[r]
        for c in range(cur):
            if c in best[:r]:
                continue
            # force row r -> c; earlier rows keep their already-fixed columns
            sub = cost.copy()
            big = cost.sum() + 1.0
            sub[r, :] = big
            sub[r, c] = cost[r, c]
            for rr in range(r):
                sub[rr, :] = big
                sub[rr, best[rr]] = cost[rr, best[rr]]
            trial = _solve(sub)
            if mapping_cost(cost, trial) <= opt + TIE_TOL:
                best = trial
                break
    return [int(c) for c in best]


def assign(layout: UnfoldedLayout, modules: TMapping[int, Pose2], root_pair: tuple[int, int]) -> Mapping:
    """Optimal role assignment with the root pair pinned."""
    targets, mods, cost = _prepare(layout, modules, root_pair)
    if not targets:
        return Mapping({root_pair[0]: root_pair[1]}, 0.0)
    cols = _lexicographic_optimum(cost)
    return Mapping(_finish(targets, mods, cols, root_pair), mapping_cost(cost, cols))


def brute_force_assign(layout: UnfoldedLayout, modules: TMapping[int, Pose2], root_pair: tuple[int, int]) -> Mapping:
    """Try every bijection that keeps the root pair; reference for :func:`assign`."""
    if len(modules) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_LIMIT} modules, got {len(modules)}")
    targets, mods, cost = _prepare(layout, modules, root_pair)
    k = len(targets)
    if k == 0:
        return Mapping({root_pair[0]: root_pair[1]}, 0.0)
    perms = np.array(list(itertools.permutations(range(k))), dtype=int)  # lexicographic order
    totals = cost[np.arange(k)[None, :], perms].sum(axis=1)
    opt = totals.min()
    # candidates are within the tie band; exact comparison happens on canonical sums
    near = np.flatnonzero(totals <= opt + 4 * TIE_TOL)
    exact = [mapping_cost(cost, perms[i]) for i in near]
    best_total = min(exact)
    for i, total in zip(near, exact):
        if total <= best_total + TIE_TOL:
            cols = perms[i]
            break
    return Mapping(_finish(targets, mods, cols, root_pair), mapping_cost(cost, cols))


def mapping_cost_of(layout: UnfoldedLayout, modules, root_pair, f: TMapping[int, int]) -> float:
    """Total centre distance of a given mapping (same summation order as :func:`assign`)."""
    targets, mods, cost = _prepare(layout, modules, root_pair)
    if f[root_pair[0]] != root_pair[1]:
        raise ValueError("mapping does not pin the root pair")
    index = {m: i for i, m in enumerate(mods)}
    return mapping_cost(cost, [index[f[t]] for t in targets])
