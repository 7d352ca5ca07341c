"""
Runtime monitor synthesis and instrumentation

Two property shapes are turned into monitor program graphs:

  safety    always not E, or always (E1 implies E2) on one channel
  response  always ((E1 and ... and En) implies time_until (R) < θ)

A safety monitor sniffs the watched channel and moves to Err on a bad
message. A response monitor latches, per tick, whether each trigger channel
and the response channel currently show a matching message; once every
trigger is latched without a response it arms a timer of θ ticks and waits
in C2 for the response. The tick that runs the timer out enters Err.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import networkx as nx

from btrv.diagnostics import DiagnosticLog, IssueSeverity, IssueType
from btrv.engine import ExecutionTrace, TerminalStatus
from btrv.errors import AttachError, ModelError, NotMonitorableError
from btrv.expressions import TRUE as TRUE_EXPR, BinOp, Const, Expr, Not as NotExpr, Var, conjunction
from btrv.model_text import parse_graphs
from btrv.program_graph import (Assignments, ChannelId, ChannelSystem, ProgramGraph, Sniff, Transition, VarDecl,
                                is_internal)
from btrv.scope_ast import (And, CondAnd, CondNot, Condition, Event, Formula, Not, Or, TimeUntil, as_always,
                            condition_expr, format_formula)
from btrv.values import BOOL, MSG, IntDomain, format_value

logger = logging.getLogger(__name__)

ERROR_LOCATION = "Err"
MONITOR_PREFIX = "Monitor."

SUPPORTED_SHAPES = [
    "always not (p, q, c)",
    "always ((p, q, c1) implies (p, q, c2))",
    "always (((p1, q1, c1) and ... and (pn, qn, cn)) implies time_until (p, q, c) < θ)",
    "always (((p1, q1, c1) and ... and (pn, qn, cn)) implies time_until (p, q, c) <= θ)",
]


class PatternKind(str, Enum):
    SAFETY = "safety"
    RESPONSE = "response"


class MonitorStatus(str, Enum):
    RUNNING = "running"
    VIOLATED = "violated"


@dataclass(frozen=True)
class SafetyPattern:
    channel: ChannelId
    bad: Condition


@dataclass(frozen=True)
class ResponsePattern:
    triggers: Tuple[Tuple[ChannelId, Condition], ...]
    response: Tuple[ChannelId, Condition]
    theta: int
    tick_channel: ChannelId

    def __post_init__(self):
        if self.theta < 1:
            raise NotMonitorableError(f"{self.theta}", "the response deadline must be at least one tick")
        if not self.triggers:
            raise NotMonitorableError("", "a response pattern needs at least one trigger event")
        channels = [c for c, _ in self.triggers] + [self.response[0], self.tick_channel]
        if len(set(channels)) != len(channels):
            raise NotMonitorableError(", ".join(str(c) for c in channels),
                                      "trigger, response and tick channels must be pairwise distinct")


@dataclass(frozen=True)
class MonitorSpec:
    name: str
    pattern: Union[SafetyPattern, ResponsePattern]
    formula: Optional[str] = None

    @property
    def kind(self) -> PatternKind:
        return PatternKind.SAFETY if isinstance(self.pattern, SafetyPattern) else PatternKind.RESPONSE

    @property
    def channels(self) -> List[ChannelId]:
        if isinstance(self.pattern, SafetyPattern):
            return [self.pattern.channel]
        return [c for c, _ in self.pattern.triggers] + [self.pattern.response[0], self.pattern.tick_channel]


@dataclass(frozen=True)
class MonitorGraph:
    name: str
    graph: ProgramGraph
    spec: Optional[MonitorSpec] = None

    @property
    def process_name(self) -> str:
        return self.graph.name


@dataclass(frozen=True)
class MonitorVerdict:
    name: str
    status: MonitorStatus
    location: str
    tick: Optional[int] = None
    position: Optional[int] = None
    step: Optional[int] = None
    channel: Optional[str] = None
    message: Optional[str] = None


def _tr(source, action, target, guard: Expr = TRUE_EXPR) -> Transition:
    return Transition(source, guard, action, target)


def _safety_graph(name: str, pattern: SafetyPattern) -> ProgramGraph:
    bad = condition_expr(pattern.bad)
    transitions = [
        _tr("I", Sniff(pattern.channel, "y"), "Check"),
        _tr("Check", Assignments(), "I", NotExpr(bad)),
        _tr("Check", Assignments(), ERROR_LOCATION, bad),
    ]
    return ProgramGraph(name, ["I", "Check", ERROR_LOCATION], transitions, ["I"],
                        [VarDecl("y", MSG)], monitor=True, error_locations=[ERROR_LOCATION])


def _response_graph(name: str, pattern: ResponsePattern) -> ProgramGraph:
    seen = [f"seen_{k + 1}" for k in range(len(pattern.triggers))]
    response_channel, response_cond = pattern.response
    responds = condition_expr(response_cond)
    all_seen = conjunction(*[Var(s) for s in seen])
    reset = tuple((s, Const(False)) for s in seen) + (("responded", Const(False)),)
    tick = pattern.tick_channel
    started = Var("started")

    transitions: List[Transition] = []
    for flag, (channel, cond) in zip(seen, pattern.triggers):
        transitions.append(_tr("I", Sniff(channel, "y", updates=((flag, condition_expr(cond)),)), "I1"))
    transitions += [
        _tr("I", Sniff(response_channel, "y", updates=(("responded", responds),)), "I1"),
        _tr("I", Sniff(tick, "y", updates=(("started", Const(True)),) + reset), "I"),
        _tr("I1", Assignments(), "C1", all_seen),
        _tr("I1", Assignments(), "I", NotExpr(all_seen)),
        _tr("C1", Assignments(), "I", Var("responded")),
        _tr("C1", Assignments(), "S", NotExpr(Var("responded"))),
        _tr("S", Assignments((("timer", Const(pattern.theta)),)), "C2"),
        _tr("C2", Sniff(response_channel, "y", updates=(("responded", Const(True)),)), "I", responds),
        _tr("C2", Sniff(response_channel, "y", updates=(("responded", Const(False)),)), "C2", NotExpr(responds)),
    ]
    for flag, (channel, cond) in zip(seen, pattern.triggers):
        transitions.append(_tr("C2", Sniff(channel, "y", updates=((flag, condition_expr(cond)),)), "C2"))
    countdown = (("timer", BinOp("-", Var("timer"), Const(1))),)
    transitions += [
        _tr("C2", Sniff(tick, "y", updates=(("started", Const(True)),) + reset), "C2", NotExpr(started)),
        _tr("C2", Sniff(tick, "y", updates=countdown + reset), "C2",
            BinOp("and", started, BinOp(">", Var("timer"), Const(1)))),
        _tr("C2", Sniff(tick, "y", updates=countdown), ERROR_LOCATION,
            BinOp("and", started, BinOp("<=", Var("timer"), Const(1)))),
    ]
    variables = [VarDecl("y", MSG), VarDecl("timer", IntDomain(0, pattern.theta), 0)]
    variables += [VarDecl(s, BOOL, False) for s in seen]
    variables += [VarDecl("responded", BOOL, False), VarDecl("started", BOOL, False)]
    return ProgramGraph(name, ["I", "I1", "C1", "S", "C2", ERROR_LOCATION], transitions, ["I"], variables,
                        monitor=True, error_locations=[ERROR_LOCATION])


def check_monitor_graph(graph: ProgramGraph):
    """Err is absorbing and internal transitions never loop"""
    for loc in graph.error_locations:
        if graph.outgoing(loc):
            raise ModelError(f"error location {loc} of '{graph.name}' is not absorbing")
    internal = nx.DiGraph()
    internal.add_nodes_from(graph.locations)
    internal.add_edges_from((t.source, t.target) for t in graph.transitions if is_internal(t.action))
    if not nx.is_directed_acyclic_graph(internal):
        cycle = nx.find_cycle(internal)
        raise ModelError(f"monitor '{graph.name}' has a cycle of internal transitions: {cycle}")


def synthesize(spec: MonitorSpec) -> MonitorGraph:
    name = MONITOR_PREFIX + spec.name
    if isinstance(spec.pattern, SafetyPattern):
        graph = _safety_graph(name, spec.pattern)
    else:
        graph = _response_graph(name, spec.pattern)
    check_monitor_graph(graph)
    logger.debug(f"Synthesized {spec.kind.value} monitor {name} with {len(graph.transitions)} transitions")
    return MonitorGraph(spec.name, graph, spec)


def _not_monitorable(phi: Formula, reason: str) -> NotMonitorableError:
    return NotMonitorableError(format_formula(phi), reason, SUPPORTED_SHAPES)


def _split_implication(body: Formula) -> Optional[Tuple[Formula, Formula]]:
    """(premise, conclusion) of `not a or b`, `b or not a` and `not (a and not b)`"""
    if isinstance(body, Or):
        if isinstance(body.left, Not):
            return body.left.operand, body.right
        if isinstance(body.right, Not):
            return body.right.operand, body.left
    if isinstance(body, Not) and isinstance(body.operand, And):
        inner = body.operand
        if isinstance(inner.right, Not):
            return inner.left, inner.right.operand
        if isinstance(inner.left, Not):
            return inner.right, inner.left.operand
    return None


def _trigger_events(phi: Formula) -> List[Event]:
    if isinstance(phi, Event):
        return [phi]
    if isinstance(phi, And):
        return _trigger_events(phi.left) + _trigger_events(phi.right)
    raise _not_monitorable(phi, "the trigger must be an event or a conjunction of events")


def compile_from_scope(name: str, phi: Formula, tick_channel: ChannelId) -> MonitorSpec:
    """Recognise a monitorable SCOPE formula and extract its pattern"""
    body = as_always(phi)
    if body is None:
        raise _not_monitorable(phi, "the property must have the form 'always ...'")
    text = format_formula(phi)
    if isinstance(body, Not) and isinstance(body.operand, Event):
        event = body.operand
        return MonitorSpec(name, SafetyPattern(event.channel, event.cond), text)
    parts = _split_implication(body)
    if parts is None:
        raise _not_monitorable(body, "expected a negated event or an implication")
    premise, conclusion = parts
    if isinstance(conclusion, Event):
        if not isinstance(premise, Event):
            raise _not_monitorable(premise, "a safety implication needs a single event as premise")
        if premise.channel != conclusion.channel:
            raise _not_monitorable(body, "both events of a safety implication must use the same channel")
        bad = CondAnd(premise.cond, CondNot(conclusion.cond))
        return MonitorSpec(name, SafetyPattern(premise.channel, bad), text)
    if isinstance(conclusion, TimeUntil):
        if conclusion.relop == "<":
            theta = conclusion.bound
        elif conclusion.relop == "<=":
            theta = conclusion.bound + 1
        else:
            raise _not_monitorable(conclusion, f"time_until with '{conclusion.relop}' is not supported")
        if not isinstance(theta, int):
            raise _not_monitorable(conclusion, "the deadline must be bound to a number")
        merged: Dict[ChannelId, Condition] = {}
        for event in _trigger_events(premise):
            merged[event.channel] = CondAnd(merged[event.channel], event.cond) if event.channel in merged else event.cond
        response = (conclusion.event.channel, conclusion.event.cond)
        try:
            pattern = ResponsePattern(tuple(merged.items()), response, theta, tick_channel)
        except NotMonitorableError as e:
            raise NotMonitorableError(format_formula(body), e.reason, SUPPORTED_SHAPES) from None
        return MonitorSpec(name, pattern, text)
    raise _not_monitorable(conclusion, "the conclusion must be an event or a time_until constraint")


def attach(cs: ChannelSystem, monitors: Iterable[MonitorGraph]) -> ChannelSystem:
    """Instrumented copy of cs in which the monitors observe their channels"""
    graphs = []
    taken = set(cs.by_name)
    for monitor in monitors:
        graph = monitor.graph
        if graph.name in taken:
            raise AttachError(f"a process named '{graph.name}' already exists")
        taken.add(graph.name)
        for t in graph.transitions:
            channel = t.action.channel
            if channel is not None and channel not in cs.channels:
                raise AttachError(f"monitor '{monitor.name}' observes unknown channel {channel}")
        check_monitor_graph(graph)
        graphs.append(graph)
    logger.info(f"Attached {len(graphs)} monitors to {cs.name}")
    return cs.with_monitors(graphs)


def verdicts(trace: ExecutionTrace) -> List[MonitorVerdict]:
    """One verdict per monitor attached to the run that produced the trace"""
    first: Dict[str, object] = {}
    for event in trace.violations:
        first.setdefault(event.monitor, event)
    result = []
    for process in trace.monitors:
        name = process[len(MONITOR_PREFIX):] if process.startswith(MONITOR_PREFIX) else process
        event = first.get(process)
        if event is None:
            result.append(MonitorVerdict(name, MonitorStatus.RUNNING, trace.final.locations[process]))
        else:
            result.append(MonitorVerdict(name, MonitorStatus.VIOLATED, event.location, event.tick, event.position,
                                         event.step, str(event.channel) if event.channel else None,
                                         format_value(event.message) if event.message is not None else None))
    return result


def record_run_issues(trace: ExecutionTrace, diagnostics: DiagnosticLog) -> int:
    """Diagnostics for every monitor violation of a run, and for a deadlock"""
    for event in trace.violations:
        diagnostics.record(IssueType.MONITOR_VIOLATION, IssueSeverity.HIGH, event.describe(), event.monitor,
                           format_value(event.message) if event.message is not None else None)
    if trace.status is TerminalStatus.DEADLOCK:
        blocked = ", ".join(f"{p}@{loc}" for p, loc in trace.blocked.items())
        diagnostics.record(IssueType.DEADLOCK, IssueSeverity.MEDIUM,
                           f"no transition enabled after {trace.steps} steps", "system", blocked)
    return len(trace.violations)


def load_monitor_file(text: str, file: Optional[str] = None) -> List[MonitorGraph]:
    """Monitors written in the program-graph text format"""
    result = []
    for graph in parse_graphs(text, file=file):
        if not graph.monitor:
            raise ModelError(f"'{graph.name}' in {file or '<input>'} is not a monitor block")
        check_monitor_graph(graph)
        name = graph.name[len(MONITOR_PREFIX):] if graph.name.startswith(MONITOR_PREFIX) else graph.name
        result.append(MonitorGraph(name, graph))
    return result


def monitors_from_properties(properties: Sequence, tick_channel: ChannelId) -> List[MonitorGraph]:
    """Synthesize a monitor for every named property"""
    return [synthesize(compile_from_scope(p.name, p.formula, tick_channel)) for p in properties]
