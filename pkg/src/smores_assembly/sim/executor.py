"""Run a schedule in the kinematic world.

Every wave runs to completion before the next one starts.  Inside a wave:

1. all movers plan jointly on the grid and drive their plans in lockstep,
   then leave the grid for their exact standoff poses;
2. each mover turns to a small bias heading, aligns its connector with the
   goal-frame law and drives straight in until the faces dock;
3. side-face dockings instead park the mover next to its goal, and a helper
   comes in, docks onto the mover's far side, carries it to the goal, pushes
   it home, releases it and backs off.

Everything runs in the physical root's frame; the world frame is only used
for exported trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np

from ..geometry import Pose2, wrap_angle
from ..motion.control import (
    LATERAL,
    LONGITUDINAL,
    GoalFramePose,
    MotionConfig,
    VelocityCommand,
    approach_command,
    typed_settings,
    follow_path_command,
    pose_adjust_command,
)
from ..motion.planning import PlanningError, plan_paths
from ..pipeline import AssemblyPlan, prepare_plan
from ..scenario import Scenario
from ..scheduler import AssemblyAction, GridMap, Schedule
from ..layout import FACE_ANGLE, RELATIVE_POSES
from ..topology import Face
from .world import (
    WorldState,
    detect_collisions,
    dock_error,
    hold,
    mating_pose,
    step_world,
    try_dock,
    undock,
)


class ExecutionError(RuntimeError):
    def __init__(self, message: str, result: "RunResult | None" = None):
        super().__init__(message)
        self.result = result


@dataclass
class SimConfig:
    grid_cell: float = 0.1
    grid_pad: int = 2
    standoff: float = 0.1
    block_radius: float = 0.125
    retries: int = 3
    wave_timeout: float = 300.0
    adjust_offset: float = 5e-4  # tighter than the motion tolerances: leaves room for sliding contact
    adjust_angle: float = 0.005
    adjust_timeout: float = 30.0
    cell_capture: float = 0.005
    leg_capture: float = 0.002
    orient_tol: float = 0.01
    bias_heading: float = 0.5
    rotation_clearance: float = 0.13
    dwell: float = 0.5
    retreat: float = 0.1
    separation: str = "strict"

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        cfg = cls(**typed_settings(cls, data, "sim"))
        if cfg.separation not in ("strict", "standard"):
            raise ValueError(f"sim.separation: expected 'strict' or 'standard', got {cfg.separation!r}")
        return cfg

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class RunResult:
    success: bool
    world: WorldState
    plan: AssemblyPlan | None
    times: np.ndarray  # (T,)
    ids: list[int]
    trajectory: np.ndarray  # (T, N, 3) root frame
    events: list[dict]
    metrics: dict
    collisions: list[tuple]
    error: str | None = None

    @property
    def schedule(self) -> Schedule:
        return self.plan.schedule if self.plan is not None else Schedule(())

    def world_trajectory(self) -> np.ndarray:
        """Trajectory re-expressed in the world frame."""
        f = self.world.frame
        c, s = math.cos(f.theta), math.sin(f.theta)
        x, y, th = self.trajectory[..., 0], self.trajectory[..., 1], self.trajectory[..., 2]
        out = np.empty_like(self.trajectory)
        out[..., 0] = c * x - s * y + f.x
        out[..., 1] = s * x + c * y + f.y
        out[..., 2] = np.vectorize(wrap_angle, otypes=[float])(th + f.theta) if out.size else th
        return out


def _parallel(procs):
    """Merge several per-tick command generators until all are exhausted."""
    procs = list(procs)
    while procs:
        cmds = {}
        alive = []
        for p in procs:
            try:
                cmds.update(next(p))
                alive.append(p)
            except StopIteration:
                pass
        procs = alive
        if not procs:
            return
        yield cmds


class Executor:
    def __init__(
        self,
        scenario: Scenario,
        motion: MotionConfig | None = None,
        sim: SimConfig | None = None,
        plan: AssemblyPlan | None = None,
    ):
        self.scenario = scenario
        self.motion = motion or MotionConfig()
        self.cfg = sim or SimConfig()
        # path following between cell centres turns on the spot for anything but small errors
        self.nav_motion = replace(self.motion, turn_in_place=min(self.motion.turn_in_place, 0.1))
        self.plan = plan if plan is not None else prepare_plan(scenario)
        self.world = WorldState(dict(self.plan.local), frame=self.plan.frame)
        self.helpers = set(scenario.helpers)
        pts = [(p.x, p.y) for p in self.plan.local.values()]
        pts += [(p.x, p.y) for p in self.plan.layout.pose.values()]
        self.grid = GridMap.covering(pts, self.cfg.grid_cell, self.cfg.grid_pad)
        self.events: list[dict] = []
        self.ids = sorted(self.world.poses)
        self._times: list[float] = []
        self._traj: list[list[tuple[float, float, float]]] = []
        self.collisions: list[tuple] = []
        self._moving: dict[int, str] = {}  # module -> "turn" / "drive" on the previous tick

    # -- bookkeeping ---------------------------------------------------------

    def log(self, event: str, **detail) -> None:
        self.events.append({"t": round(self.world.clock, 6), "event": event, "detail": detail})

    def _record(self) -> None:
        # a sample is taken just before the next step, so it includes any
        # docking or undocking that happened at the same clock value
        self._times.append(self.world.clock)
        self._traj.append([tuple(self.world.poses[m]) for m in self.ids])

    def _tick(self, cmds: dict) -> None:
        dt = self.motion.dt
        moving = {}
        for m, c in cmds.items():
            if c[0] != 0.0:
                moving[m] = "drive"
            elif c[1] != 0.0:
                moving[m] = "turn"
        self._moving = moving
        self._record()
        step_world(self.world, cmds, dt)
        for a, b, depth in detect_collisions(self.world):
            self.collisions.append((round(self.world.clock, 6), a, b, depth))

    def _run(self, gen, timeout: float, what: str) -> None:
        t_end = self.world.clock + timeout
        for cmds in gen:
            self._tick(cmds)
            if self.world.clock > t_end:
                raise ExecutionError(f"{what} timed out after {timeout:.0f} s")

    # -- geometry helpers ----------------------------------------------------

    def _approach_dir(self, face: Face) -> int:
        # TOP leads when driving forward, BOTTOM when reversing
        return 1 if face is Face.TOP else -1

    def _standoff(self, goal: Pose2, face: Face) -> Pose2:
        """Goal pose backed off along the mover's connector normal."""
        a = FACE_ANGLE[face]
        d = self.cfg.standoff
        return goal.compose(Pose2(-d * math.cos(a), -d * math.sin(a), 0.0))

    # -- primitive behaviours --------------------------------------------------

    def _drive_to(self, m: int, point, capture: float):
        while True:
            cmd = follow_path_command(self.world.poses[m], [point], cfg=self.nav_motion, capture=capture)
            if cmd.flag == "complete":
                return
            yield {m: cmd}

    def _turn_to(self, m: int, frame: Pose2, heading: float):
        """Rotate in place until the heading in ``frame`` equals ``heading``."""
        while True:
            err = wrap_angle(heading - wrap_angle(self.world.poses[m].theta - frame.theta))
            if abs(err) < self.cfg.orient_tol:
                return
            w = max(-self.motion.omega_max, min(self.motion.omega_max, self.motion.turn_gain * err))
            yield {m: VelocityCommand(0.0, w)}

    def _align(self, m: int, goal: Pose2, face_class: str, approach_dir: int, away: int = 1, driver: int | None = None):
        """Bias-turn then run the alignment law until the connector lines up.

        ``driver`` is the module that is commanded (a helper carrying ``m``);
        ``goal`` is always the driver's goal pose.
        """
        drv = m if driver is None else driver
        gp = GoalFramePose.of(self.world.poses[drv], goal)
        off = gp.y if face_class == LATERAL else gp.x
        if abs(off) > self.cfg.adjust_offset:
            # pick the heading sign that makes the uncontrolled coordinate drift away from the target
            if face_class == LATERAL:
                bias = approach_dir * math.copysign(self.cfg.bias_heading, off)
            else:
                bias = -away * math.copysign(self.cfg.bias_heading, off)
        else:
            bias = 0.0
        yield from self._turn_to(drv, goal, bias)
        t_end = self.world.clock + self.cfg.adjust_timeout
        while True:
            gp = GoalFramePose.of(self.world.poses[drv], goal)
            off = gp.y if face_class == LATERAL else gp.x
            if abs(off) < self.cfg.adjust_offset and abs(gp.theta) < self.cfg.adjust_angle:
                return True
            if self.world.clock > t_end:
                return False
            yield {drv: pose_adjust_command(gp, face_class, cfg=self.motion)}

    def _approach(self, driver: int, goal: Pose2, action: AssemblyAction, direction: int):
        """Straight run at docking speed; returns True once ``action`` docks."""
        self.world.exempt.add(frozenset((action.mover, action.target)))
        try:
            while True:
                if try_dock(self.world, action):
                    return True
                gp = GoalFramePose.of(self.world.poses[driver], goal)
                overshoot = direction * gp.x > 0.005
                cmd = approach_command(gp, cfg=self.motion, direction=direction, face_class=LATERAL)
                if cmd.flag == "abort" or overshoot:
                    err = dock_error(self.world, action)
                    self.log("abort", action=str(action), lateral=err.lateral, gap=err.gap)
                    return False
                yield {driver: cmd}
        finally:
            self.world.exempt.discard(frozenset((action.mover, action.target)))

    def _dock_sequence(self, driver: int, goal: Pose2, action: AssemblyAction, direction: int, label: str):
        """Align + approach with retries; the driver's TOP/BOTTOM leads."""
        for attempt in range(self.cfg.retries + 1):
            if attempt:
                # back off to the standoff line before trying again
                yield from self._backoff(driver, goal, direction)
            ok = yield from self._align(driver, goal, LATERAL, direction)
            if not ok:
                self.log("abort", action=str(action), reason="alignment timeout")
                continue
            self.log("aligned", module=driver, action=str(action), phase=label)
            docked = yield from self._approach(driver, goal, action, direction)
            if docked:
                return
        raise ExecutionError(f"{label} {action} failed after {self.cfg.retries} retries")

    def _backoff(self, m: int, goal: Pose2, direction: int):
        target_x = -direction * self.cfg.standoff
        while True:
            gp = GoalFramePose.of(self.world.poses[m], goal)
            if direction * (gp.x - target_x) <= 0.0:
                return
            yield {m: VelocityCommand(-direction * self.motion.v_dock, 0.0)}

    # -- navigation ------------------------------------------------------------

    def _pick_cell(self, grid: GridMap, x: float, y: float, taken: set):
        best = None
        for c in grid.cells():
            if not grid.is_free(c) or c in taken:
                continue
            cx, cy = grid.center(c)
            key = (math.hypot(cx - x, cy - y), c)
            if best is None or key < best:
                best = key
        if best is None:
            raise PlanningError(None, "no free grid cell")
        return best[1]

    def _navigate(self, targets: dict[int, Pose2]):
        """Joint grid plan for all ``targets`` (module -> standoff pose) and lockstep execution."""
        movers = sorted(targets)
        obstacles = [(p.x, p.y) for m, p in self.world.poses.items() if m not in targets]
        grid = self.grid.with_blocked_discs(obstacles, self.cfg.block_radius)
        starts, goals = {}, {}
        taken_s, taken_g = set(), set()
        for m in movers:
            p = self.world.poses[m]
            starts[m] = self._pick_cell(grid, p.x, p.y, taken_s)
            taken_s.add(starts[m])
        for m in movers:
            g = targets[m]
            goals[m] = self._pick_cell(grid, g.x, g.y, taken_g)
            taken_g.add(goals[m])
        paths = plan_paths(grid, starts, goals, priorities=movers, mode=self.cfg.separation)
        by_mod = {p.agent: p for p in paths}
        for m in movers:
            self.log("navigate", module=m, cells=len(by_mod[m].cells), waits=by_mod[m].waits())

        # onto the grid
        yield from self._lockstep({m: grid.center(starts[m]) for m in movers}, self.cfg.cell_capture)
        horizon = max(len(p.cells) for p in paths)
        for k in range(1, horizon):
            yield from self._lockstep({m: grid.center(by_mod[m].at(k)) for m in movers}, self.cfg.cell_capture)
        # off the grid to the exact standoff points
        yield from self._lockstep({m: (targets[m].x, targets[m].y) for m in movers}, self.cfg.leg_capture)

    def _lockstep(self, points: dict, capture: float):
        """Everyone drives to its point; turning on the spot is rationed near others."""
        done = set()
        while True:
            cmds = {}
            turning: list[int] = []
            for m in sorted(points):
                if m in done:
                    continue
                cmd = follow_path_command(self.world.poses[m], [points[m]], cfg=self.nav_motion, capture=capture)
                if cmd.flag == "complete":
                    done.add(m)
                    continue
                if cmd.v == 0.0 and cmd.omega != 0.0 and self._turn_blocked(m, turning, cmds):
                    cmd = VelocityCommand(0.0, 0.0)
                if cmd.v == 0.0 and cmd.omega != 0.0:
                    turning.append(m)
                cmds[m] = cmd
            if len(done) == len(points):
                return
            yield cmds

    def _turn_blocked(self, m: int, turning: list[int], cmds: dict) -> bool:
        p = self.world.poses[m]
        for o, state in self._moving.items():
            if o == m:
                continue
            q = self.world.poses[o]
            near = math.hypot(p.x - q.x, p.y - q.y) < self.cfg.rotation_clearance
            if near and (state == "drive" or (state == "turn" and o < m)):
                return True
        for o in turning:
            q = self.world.poses[o]
            if math.hypot(p.x - q.x, p.y - q.y) < self.cfg.rotation_clearance:
                return True
        return False

    # -- actions ---------------------------------------------------------------

    def _plain_local(self, a: AssemblyAction, goal: Pose2):
        yield from self._dock_sequence(a.mover, goal, a, self._approach_dir(a.mover_face), "dock")
        self.log("dock", action=str(a), mover=a.mover, target=a.target)

    def _side_local(self, a: AssemblyAction, goal: Pose2):
        """Park a side-face mover next to its goal with x' and theta' zeroed."""
        # the mover's connector points at the target; staging sits back along it
        away = -1 if a.mover_face is Face.LEFT else 1
        for attempt in range(self.cfg.retries + 1):
            ok = yield from self._align(a.mover, goal, LONGITUDINAL, 0, away=away)
            if ok:
                self.log("aligned", module=a.mover, action=str(a), phase="staging")
                return
            self.log("abort", action=str(a), reason="staging alignment timeout")
        raise ExecutionError(f"staging of {a} failed")

    def _helper_local(self, a: AssemblyAction, goal: Pose2):
        h = a.helper
        held_face = a.mover_face.opposite()
        grab = AssemblyAction(h, Face.TOP, a.mover, held_face)
        grab_pose = mating_pose(self.world.poses[a.mover], held_face, Face.TOP)
        yield from self._dock_sequence(h, grab_pose, grab, 1, "helper dock")
        hold(self.world, h, a.mover)
        self.log("helper_dock", helper=h, module=a.mover, face=held_face.value)

        self.world.carried_by[a.mover] = h
        self.log("lift", helper=h, module=a.mover)
        yield from self._dwell()
        final = goal.compose(RELATIVE_POSES[held_face, Face.TOP])
        ok = yield from self._align(a.mover, final, LATERAL, 1, driver=h)
        if not ok:
            raise ExecutionError(f"delivery of {a.mover} by helper {h} did not converge")
        self.log("deliver", helper=h, module=a.mover)
        del self.world.carried_by[a.mover]
        self.log("place", helper=h, module=a.mover)
        yield from self._dwell()

        self.log("push", helper=h, module=a.mover)
        for attempt in range(self.cfg.retries + 1):
            docked = yield from self._approach(h, final, a, 1)
            if docked:
                break
            yield from self._backoff(h, final, 1)
            ok = yield from self._align(a.mover, final, LATERAL, 1, driver=h)
        else:
            raise ExecutionError(f"push of {a} failed after {self.cfg.retries} retries")
        self.log("dock", action=str(a), mover=a.mover, target=a.target, helper=h)
        undock(self.world, h, a.mover)
        self.log("undock", helper=h, module=a.mover)
        start = self.world.poses[h]
        while math.hypot(self.world.poses[h].x - start.x, self.world.poses[h].y - start.y) < self.cfg.retreat:
            yield {h: VelocityCommand(-self.motion.v_max / 2.0, 0.0)}
        self.log("retreat", helper=h)

    def _dwell(self):
        for _ in range(int(round(self.cfg.dwell / self.motion.dt))):
            yield {}

    def _wave(self, index: int, wave):
        plain = [a for a in wave if not a.helper_required]
        side = [a for a in wave if a.helper_required]
        goals = {a.mover: self.plan.goal_pose(a.mover) for a in wave}
        targets = {}
        for a in plain:
            targets[a.mover] = self._standoff(goals[a.mover], a.mover_face)
        for a in side:
            targets[a.mover] = self._standoff(goals[a.mover], a.mover_face)
        if targets:
            yield from self._navigate(targets)
        procs = [self._plain_local(a, goals[a.mover]) for a in plain]
        procs += [self._side_local(a, goals[a.mover]) for a in side]
        yield from _parallel(procs)
        if side:
            helper_targets = {}
            for a in side:
                held_face = a.mover_face.opposite()
                grab_pose = mating_pose(self.world.poses[a.mover], held_face, Face.TOP)
                helper_targets[a.helper] = self._standoff(grab_pose, Face.TOP)
            yield from self._navigate(helper_targets)
            yield from _parallel([self._helper_local(a, goals[a.mover]) for a in side])

    # -- driver ----------------------------------------------------------------

    def run(self) -> RunResult:
        error = None
        try:
            self.log("start", root=self.plan.root_module, waves=len(self.plan.schedule))
            for i, wave in enumerate(self.plan.schedule.waves):
                self.log("wave_start", wave=i, actions=[str(a) for a in wave])
                self._run(self._wave(i, wave), self.cfg.wave_timeout, f"wave {i}")
                self.log("wave_done", wave=i)
        except (ExecutionError, PlanningError) as exc:
            error = str(exc)
            self.log("failed", reason=error)
        success = error is None and not self.collisions and self._final_ok()
        if error is None and not success:
            error = "collisions or final configuration mismatch"
        self.log("done", success=success)
        return self._result(success, error)

    def _final_ok(self) -> bool:
        f = self.plan.mapping.target_to_module
        want = self.scenario.target.relabel(f).edge_set()
        got = self.world.attachment_graph(sorted(self.scenario.modules)).edge_set()
        return want == got and not any(self.world.neighbours(h) for h in self.helpers)

    def _result(self, success: bool, error) -> RunResult:
        self._record()
        times = np.array(self._times)
        traj = np.array(self._traj, dtype=float).reshape(len(self._times), len(self.ids), 3)
        step = np.hypot(np.diff(traj[..., 0], axis=0), np.diff(traj[..., 1], axis=0))
        dist = step.sum(axis=0) if len(times) > 1 else np.zeros(len(self.ids))
        wave_times = []
        starts = {}
        for e in self.events:
            if e["event"] == "wave_start":
                starts[e["detail"]["wave"]] = e["t"]
            elif e["event"] == "wave_done":
                w = e["detail"]["wave"]
                wave_times.append({"wave": w, "start_s": starts[w], "end_s": e["t"]})
        metrics = {
            "success": success,
            "makespan_s": self.events[-1]["t"],
            "distance_m": {str(m): float(d) for m, d in zip(self.ids, dist)},
            "total_distance_m": float(dist.sum()),
            "collision_count": len(self.collisions),
            "dock_count": sum(1 for e in self.events if e["event"] == "dock"),
            "waves": wave_times,
            "ticks": len(times) - 1,
        }
        return RunResult(
            success=success,
            world=self.world,
            plan=self.plan,
            times=times,
            ids=list(self.ids),
            trajectory=traj,
            events=self.events,
            metrics=metrics,
            collisions=list(self.collisions),
            error=error,
        )


def configs_from(scenario: Scenario, overrides: dict | None = None) -> tuple[MotionConfig, SimConfig]:
    merged = {"motion": dict(scenario.config.get("motion", {})), "sim": dict(scenario.config.get("sim", {}))}
    for key, section in (overrides or {}).items():
        if key not in merged:
            raise KeyError(f"unknown configuration section {key!r}")
        merged[key].update(section)
    return MotionConfig.from_dict(merged["motion"]), SimConfig.from_dict(merged["sim"])


def run_scenario(scenario: Scenario, overrides: dict | None = None, plan: AssemblyPlan | None = None) -> RunResult:
    """Plan (unless ``plan`` is given) and execute; failures come back as ``success=False``."""
    motion, sim = configs_from(scenario, overrides)
    return Executor(scenario, motion, sim, plan).run()
