"""Command-line entry point.

Every stage reads a scenario and, optionally, the JSON written by the stage
before it, so stages can be run one at a time::

    smores-assembly unfold  task1.json -o layout.json
    smores-assembly assign  task1.json --layout layout.json -o mapping.json
    smores-assembly plan    task1.json --assignment mapping.json -o plan.json
    smores-assembly run     task1.json --plan plan.json -o out/

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .assignment import Mapping, assign, select_root_module, to_root_frame
from .layout import OverlapError, UnfoldedLayout, check_unfoldable, unfold
from .motion.planning import PlanningError
from .outputs import OutputError, emit_outputs
from .pipeline import AssemblyPlan, prepare_plan
from .scenario import Scenario, ScenarioError, bundled, load_scenario
from .scheduler import ReconfigAction, parallelize_reconfiguration
from .sim.executor import ExecutionError, configs_from, run_scenario
from .topology import ConfigGraph, InvalidTopology

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class InputError(ValueError):
    """Bad user input; maps to exit code 1."""


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputError(f"{path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc


def _scenario(arg: str) -> Scenario:
    path = Path(arg)
    if not path.exists():
        try:
            path = bundled(arg)  # allow "task1" as shorthand for the shipped files
        except FileNotFoundError:
            raise InputError(f"{arg}: no such file") from None
    return load_scenario(path)


def _emit(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise OutputError(f"cannot write {out}: {exc}") from exc


def _layout_doc(layout: UnfoldedLayout) -> dict:
    return {"target_root": layout.root, "layout": layout.to_dict()}


def _load_layout(path) -> UnfoldedLayout:
    doc = _read_json(path)
    try:
        return UnfoldedLayout.from_dict(doc["layout"], root=int(doc["target_root"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: not a layout document ({exc})") from exc


def _plan_from(args, scenario: Scenario) -> AssemblyPlan:
    if getattr(args, "plan", None):
        doc = _read_json(args.plan)
        try:
            return AssemblyPlan.from_dict(doc, scenario)
        except (KeyError, TypeError) as exc:
            raise InputError(f"{args.plan}: not a plan document ({exc})") from exc
    layout = mapping = None
    if getattr(args, "assignment", None):
        doc = _read_json(args.assignment)
        try:
            layout = UnfoldedLayout.from_dict(doc["layout"], root=int(doc["target_root"]))
            mapping = Mapping.from_dict(doc["mapping"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"{args.assignment}: not an assignment document ({exc})") from exc
    elif getattr(args, "layout", None):
        layout = _load_layout(args.layout)
    return prepare_plan(scenario, layout, mapping)


# -- subcommands --------------------------------------------------------------


def cmd_validate(args) -> int:
    try:
        scenario = _scenario(args.scenario)
    except ScenarioError as exc:
        for problem in exc.problems:
            print(problem)
        return EXIT_INVALID
    try:
        configs_from(scenario)
    except (KeyError, ValueError) as exc:
        print(f"config: {exc}")
        return EXIT_INVALID
    report = check_unfoldable(scenario.target)
    if not report:
        for v in report.violations:
            print(f"target: {v}")
        return EXIT_INVALID
    root = select_root_module(scenario.modules)
    print(
        f"ok: {len(scenario.modules)} modules, {len(scenario.helpers)} helper(s), "
        f"physical root {root}"
    )
    return EXIT_OK


def cmd_unfold(args) -> int:
    scenario = _scenario(args.scenario)
    layout = unfold(scenario.target)
    _emit(_layout_doc(layout), args.output)
    if args.svg:
        Path(args.svg).write_text(layout.to_svg())
    return EXIT_OK


def cmd_assign(args) -> int:
    scenario = _scenario(args.scenario)
    layout = _load_layout(args.layout) if args.layout else unfold(scenario.target)
    root = select_root_module(scenario.modules)
    local = to_root_frame(scenario.modules, root)
    mapping = assign(layout, local, (layout.root, root))
    doc = _layout_doc(layout)
    doc.update(root_module=root, mapping=mapping.to_dict())
    _emit(doc, args.output)
    return EXIT_OK


def cmd_plan(args) -> int:
    scenario = _scenario(args.scenario)
    plan = _plan_from(args, scenario)
    _emit(plan.to_dict(), args.output)
    return EXIT_OK


def cmd_run(args) -> int:
    scenario = _scenario(args.scenario)
    overrides = _read_json(args.config) if args.config else None
    try:
        configs_from(scenario, overrides)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"--config: {exc}") from exc
    plan = _plan_from(args, scenario)
    result = run_scenario(scenario, overrides, plan=plan)
    emit_outputs(result, args.output)
    m = result.metrics
    print(
        f"{scenario.name}: {'success' if result.success else 'FAILED'}  "
        f"makespan {m['makespan_s']:.2f} s  docks {m['dock_count']}  "
        f"collisions {m['collision_count']}  -> {args.output}"
    )
    if not result.success:
        print(f"error: {result.error}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_reconfig(args) -> int:
    try:
        g_init = ConfigGraph.from_dict(_read_json(args.init))
        g_goal = ConfigGraph.from_dict(_read_json(args.goal))
        doc = _read_json(args.actions)
        f_inv = {int(g): int(i) for i, g in doc["mapping_init_to_goal"].items()}
        actions = [ReconfigAction.from_dict(a) for a in doc["actions"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"reconfiguration input: {exc}") from exc
    for name, g in (("init", g_init), ("goal", g_goal)):
        if not g.report:
            raise InputError(f"{name}: " + "; ".join(g.report.violations))
    try:
        schedule = parallelize_reconfiguration(g_init, g_goal, f_inv, actions)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = Path(args.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "schedule.json").write_text(schedule.to_json(indent=2) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write to {out}: {exc}") from exc
    for i, wave in enumerate(schedule.waves):
        print(f"wave {i}: " + ", ".join(str(a) for a in wave))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # a malformed command line is invalid input, not a runtime failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="smores-assembly",
        description="Plan and simulate self-assembly of modular robots.",
    )
    p.add_argument("--config", help="JSON file with 'motion' and/or 'sim' parameter overrides")
    # also accepted after the subcommand name
    common = _Parser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", parents=[common], help="check a scenario and its target topology")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("unfold", parents=[common], help="lay the target topology flat")
    s.add_argument("scenario")
    s.add_argument("-o", "--output", help="layout JSON (default: stdout)")
    s.add_argument("--svg", help="also draw the layout")
    s.set_defaults(func=cmd_unfold)

    s = sub.add_parser("assign", parents=[common], help="match physical modules to target positions")
    s.add_argument("scenario")
    s.add_argument("--layout", help="layout JSON from 'unfold'")
    s.add_argument("-o", "--output", help="assignment JSON (default: stdout)")
    s.set_defaults(func=cmd_assign)

    s = sub.add_parser("plan", parents=[common], help="build the wave schedule")
    s.add_argument("scenario")
    s.add_argument("--layout", help="layout JSON from 'unfold'")
    s.add_argument("--assignment", help="assignment JSON from 'assign'")
    s.add_argument("-o", "--output", help="plan JSON (default: stdout)")
    s.set_defaults(func=cmd_plan)

    s = sub.add_parser("run", parents=[common], help="simulate the whole assembly and write outputs")
    s.add_argument("scenario")
    s.add_argument("--plan", help="plan JSON from 'plan'")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("reconfig", parents=[common], help="parallelize a reconfiguration action list")
    s.add_argument("init", help="initial configuration graph JSON")
    s.add_argument("goal", help="goal configuration graph JSON")
    s.add_argument("actions", help="actions JSON with mapping_init_to_goal")
    s.add_argument("-o", "--output", required=True, help="output directory")
    s.set_defaults(func=cmd_reconfig)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config and args.command not in ("run",):
            _read_json(args.config)  # still reject a broken file early
        return args.func(args)
    except (InputError, ScenarioError, InvalidTopology, OverlapError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ExecutionError, PlanningError, OutputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
