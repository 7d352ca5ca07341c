"""
btrv command line

    btrv run [scenario.json]      run the scenario with monitors attached
    btrv check TRACE PROPERTIES   judge a recorded trace offline
    btrv synth PROPERTIES         write the synthesized monitors
    btrv tree [name|file.bt]      print a behavior tree

Exit codes: 0 no violation, 1 violation (or non-monitorable property for
synth), 2 usage or parse error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from btrv.behavior_tree import record_unmapped
from btrv.bt_text import format_tree
from btrv.diagnostics import DiagnosticLog, EnumEncoder, setup_logging
from btrv.errors import BtrvError, NotMonitorableError, ScenarioBuildError
from btrv.model_text import format_graph, graph_to_dot
from btrv.monitors import compile_from_scope, record_run_issues, synthesize, verdicts
from btrv.program_graph import ChannelId
from btrv.scenario import Scenario, build_scenario, resolve_tree, robot_state
from btrv.scope_eval import Verdict, earliest_violation, evaluate
from btrv.scope_parser import load_properties
from btrv.trace_io import read_trace, violation_record, write_trace
from models.scenario_models import RunReport, ScenarioConfig, VerdictReport

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2

DEFAULT_TICK_CHANNEL = "TickGenerator->BT.Root"


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise BtrvError(f"cannot read {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise BtrvError(f"{path} is not UTF-8 text: {e.reason} at byte {e.start}") from None


def _bindings(args) -> dict:
    return {"theta": args.theta} if getattr(args, "theta", None) is not None else {}


# run

def load_config(args) -> ScenarioConfig:
    config = ScenarioConfig.load(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.theta is not None:
        overrides["theta"] = args.theta
    if args.stop_on_violation:
        overrides["stop_on_violation"] = True
    if args.properties:
        overrides["properties"] = args.properties
    if not overrides:
        return config
    try:
        return ScenarioConfig.model_validate({**config.model_dump(), **overrides})
    except ValidationError as e:
        raise ScenarioBuildError(f"invalid command-line override: {e}") from e


def build_report(scenario: Scenario, trace, trace_path: Optional[str]) -> RunReport:
    diagnostics = DiagnosticLog()
    unmapped = record_unmapped(scenario.compiled, trace.final, diagnostics)
    record_run_issues(trace, diagnostics)
    state = robot_state(scenario, trace.final)
    return RunReport(
        scenario=scenario.config.name,
        seed=trace.seed if trace.seed is not None else scenario.config.seed,
        horizon=scenario.config.horizon,
        status=trace.status.value,
        verdicts=[VerdictReport(name=v.name, status=v.status.value, location=v.location, tick=v.tick,
                                position=v.position, step=v.step, channel=v.channel, message=v.message)
                  for v in verdicts(trace)],
        trace_path=trace_path,
        ticks=trace.ticks,
        steps=trace.steps,
        messages=trace.message_counts,
        unmapped_replies=unmapped,
        issues=diagnostics.counts(),
        blocked=trace.blocked,
        robot_cell=state["robot_cell"],
        battery_level=state["battery_level"],
    )


def format_report(report: RunReport) -> str:
    lines = [f"Scenario {report.scenario} (seed {report.seed}, horizon {report.horizon}): "
             f"{report.status} after {report.steps} steps, {report.ticks} ticks"]
    for v in report.verdicts:
        if v.status == "violated":
            where = f" on {v.channel} carrying {v.message}" if v.channel else ""
            lines.append(f"  {v.name}: VIOLATED at tick {v.tick} (position {v.position}, step {v.step}){where}")
        else:
            lines.append(f"  {v.name}: no violation (monitor at {v.location})")
    if report.robot_cell is not None:
        lines.append(f"Robot at {tuple(report.robot_cell)}, battery {report.battery_level}%")
    for leaf, count in report.unmapped_replies.items():
        lines.append(f"Leaf {leaf} mapped {count} unexpected replies to failure")
    if report.issues:
        lines.append("Issues: " + ", ".join(f"{kind} x{count}" for kind, count in report.issues.items()))
    if report.blocked:
        lines.append("Blocked at: " + ", ".join(f"{p}@{loc}" for p, loc in report.blocked.items()))
    if report.trace_path:
        lines.append(f"Trace: {report.trace_path}")
    return "\n".join(lines)


def record_history(report: RunReport, url: Optional[str]):
    from database import RunHistory

    history = RunHistory(url or None)
    history.start_run(report.scenario, report.seed, report.horizon, report.trace_path)
    history.store_verdicts([v.model_dump() for v in report.verdicts])
    history.complete_run(report.status, report.ticks, report.steps, report.messages)


def cmd_run(args) -> int:
    config = load_config(args)
    scenario = build_scenario(config)
    if scenario.rejected:
        for prop, error in scenario.rejected:
            print(f"{prop.name}: {error}", file=sys.stderr)
        return EXIT_USAGE
    trace = scenario.run()
    if args.trace_out:
        write_trace(trace.tss, args.trace_out, trace.violations)
    report = build_report(scenario, trace, args.trace_out)
    for event in trace.violations:
        print(json.dumps({"violation": violation_record(event)}, sort_keys=True), file=sys.stderr)
    if args.history_db is not None:
        record_history(report, args.history_db)
    print(report.to_json() if args.report == "machine" else format_report(report))
    return EXIT_VIOLATION if report.violated else EXIT_OK


# check

def cmd_check(args) -> int:
    tss, _ = read_trace(args.trace)
    if args.closed:
        tss = tss.closed()
    properties = load_properties(_read(args.properties), _bindings(args))
    results = []
    for prop in properties:
        verdict = evaluate(prop.formula, tss)
        position = earliest_violation(prop.formula, tss) if verdict is Verdict.FALSE else None
        results.append({"property": prop.name, "verdict": verdict, "earliest_violation": position})
    if args.report == "machine":
        print(json.dumps(results, cls=EnumEncoder, indent=2))
    else:
        for r in results:
            where = f" (earliest violation at position {r['earliest_violation']})" \
                if r["earliest_violation"] is not None else ""
            print(f"{r['property']}: {r['verdict'].value}{where}")
    return EXIT_VIOLATION if any(r["verdict"] is Verdict.FALSE for r in results) else EXIT_OK


# synth

def cmd_synth(args) -> int:
    properties = load_properties(_read(args.properties), _bindings(args))
    tick_channel = ChannelId.parse(args.tick_channel)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    status = EXIT_OK
    for prop in properties:
        try:
            monitor = synthesize(compile_from_scope(prop.name, prop.formula, tick_channel))
        except NotMonitorableError as e:
            print(f"{prop.name}: {e}", file=sys.stderr)
            status = EXIT_VIOLATION
            continue
        text = format_graph(monitor.graph)
        if out_dir:
            (out_dir / f"{prop.name}.pg").write_text(text, encoding="utf-8")
            if args.dot:
                (out_dir / f"{prop.name}.dot").write_text(graph_to_dot(monitor.graph), encoding="utf-8")
            logger.info(f"Wrote monitor {monitor.process_name} to {out_dir}")
        else:
            print(text)
            if args.dot:
                print(graph_to_dot(monitor.graph))
    return status


# tree

def cmd_tree(args) -> int:
    print(format_tree(resolve_tree(args.tree)), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="btrv", description="Runtime verification for behavior trees")
    parser.add_argument("--log-file", help="Also write log messages to this file")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a scenario with monitors attached")
    run.add_argument("config", nargs="?", help="Scenario JSON (default configuration when omitted)")
    run.add_argument("--properties", help="Property file (default: the built-in battery properties)")
    run.add_argument("--seed", type=int)
    run.add_argument("--horizon", type=int)
    run.add_argument("--theta", type=int, help="Binds the theta parameter of the properties")
    run.add_argument("--stop-on-violation", action="store_true")
    run.add_argument("--trace-out", help="Write the recorded trace here")
    run.add_argument("--report", choices=["text", "machine"], default="text")
    run.add_argument("--history-db", nargs="?", const="", default=None,
                     help="Record the run; optional SQLAlchemy URL (default $BTRV_HISTORY_DB or SQLite)")
    run.set_defaults(handler=cmd_run)

    check = sub.add_parser("check", help="Evaluate properties over a recorded trace")
    check.add_argument("trace")
    check.add_argument("properties")
    check.add_argument("--theta", type=int)
    check.add_argument("--closed", action="store_true", help="Treat the trace as complete")
    check.add_argument("--report", choices=["text", "machine"], default="text")
    check.set_defaults(handler=cmd_check)

    synth = sub.add_parser("synth", help="Synthesize monitors from properties")
    synth.add_argument("properties")
    synth.add_argument("--theta", type=int)
    synth.add_argument("--tick-channel", default=DEFAULT_TICK_CHANNEL)
    synth.add_argument("--out-dir")
    synth.add_argument("--dot", action="store_true", help="Also write Graphviz renderings")
    synth.set_defaults(handler=cmd_synth)

    tree = sub.add_parser("tree", help="Print a behavior tree in the text format")
    tree.add_argument("tree", nargs="?", default="mission")
    tree.set_defaults(handler=cmd_tree)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    setup_logging(args.log_file)
    try:
        return args.handler(args)
    except BtrvError as e:
        logger.error(f"{args.command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
