"""
Interleaving semantics of channel systems

enabled_transitions() lists every executable step of a configuration,
step() applies one of them, and run() drives a scheduler up to a horizon
while recording the timed state sequence seen by the property evaluator.
Monitors never take part in scheduling: they move together with the
observed exchange and then settle their internal transitions.
"""

import logging
import random
from collections import ChainMap, Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

from btrv.errors import ContractViolation, EvaluationError, ModelError
from btrv.expressions import eval_guard
from btrv.program_graph import (Assignments, ChannelId, ChannelSystem, Configuration, NativeEffect,
                                ProgramGraph, Receive, Send, Sniff, is_internal)
from btrv.tss import TimedStateSequence
from btrv.values import Message, format_value

logger = logging.getLogger(__name__)


class TerminalStatus(str, Enum):
    HORIZON = "horizon"
    DEADLOCK = "deadlock"
    VIOLATION = "violation"
    SCHEDULE_END = "schedule_end"


@dataclass(frozen=True)
class TransitionInstance:
    """One executable step: an internal move, a send, a receive or a handshake"""
    kind: str
    pid: str
    index: int
    channel: Optional[ChannelId] = None
    partner: Optional[str] = None
    partner_index: Optional[int] = None

    def label(self) -> str:
        if self.kind == "internal":
            return f"{self.pid}#{self.index}"
        if self.kind == "handshake":
            return f"{self.pid}#{self.index} <-> {self.partner}#{self.partner_index} on {self.channel}"
        return f"{self.pid}#{self.index} {self.kind} on {self.channel}"


@dataclass(frozen=True)
class Observation:
    channel: ChannelId
    value: Message
    side: str


@dataclass(frozen=True)
class MonitorEvent:
    """A monitor entering one of its error locations"""
    monitor: str
    location: str
    step: int
    position: int
    tick: int
    channel: Optional[ChannelId] = None
    message: Optional[Message] = None

    def describe(self) -> str:
        what = f" on {self.channel} carrying {format_value(self.message)}" if self.channel else ""
        return f"monitor {self.monitor} reached {self.location} at step {self.step} (tick {self.tick}, position {self.position}){what}"


@dataclass
class StepResult:
    configuration: Configuration
    observations: List[Observation] = field(default_factory=list)
    violations: List[Tuple[str, str, Optional[Observation]]] = field(default_factory=list)
    tick_delivered: bool = False


@dataclass
class ExecutionTrace:
    choices: List[int]
    final: Configuration
    status: TerminalStatus
    tss: TimedStateSequence
    steps: int = 0
    ticks: int = 0
    blocked: Dict[str, str] = field(default_factory=dict)
    message_counts: Dict[str, int] = field(default_factory=dict)
    violations: List[MonitorEvent] = field(default_factory=list)
    monitors: Tuple[str, ...] = ()
    seed: Optional[int] = None


def _env(cfg: Configuration, pid: str):
    return cfg.env(pid)


def _guard(graph: ProgramGraph, transition, env) -> bool:
    try:
        return eval_guard(transition.guard, env)
    except EvaluationError as e:
        raise EvaluationError(f"{graph.name}: {transition.text()}: {e}") from e


def enabled_transitions(cs: ChannelSystem, cfg: Configuration) -> List[TransitionInstance]:
    result: List[TransitionInstance] = []
    for graph in cs.processes:
        location = cfg.locations.get(graph.name)
        if location is None or location not in graph.locations:
            raise ModelError(f"configuration places '{graph.name}' at unknown location '{location}'")
        env = _env(cfg, graph.name)
        for index, t in graph.outgoing(location):
            action = t.action
            if is_internal(action):
                if _guard(graph, t, env):
                    result.append(TransitionInstance("internal", graph.name, index))
            elif isinstance(action, Send):
                channel = cs.channels[action.channel]
                if channel.buffered:
                    if cfg.buffers[channel.id] is None and _guard(graph, t, env):
                        result.append(TransitionInstance("send", graph.name, index, channel.id))
                    continue
                if not _guard(graph, t, env):
                    continue
                value = action.payload.evaluate(env)
                receiver = cs.process(channel.id.dest)
                receiver_env = _env(cfg, receiver.name)
                for r_index, rt in receiver.outgoing(cfg.locations[receiver.name]):
                    ra = rt.action
                    if isinstance(ra, Receive) and ra.channel == channel.id and ra.accepts(value) \
                            and _guard(receiver, rt, receiver_env):
                        result.append(TransitionInstance("handshake", graph.name, index, channel.id,
                                                         receiver.name, r_index))
            elif isinstance(action, Receive):
                channel = cs.channels[action.channel]
                if not channel.buffered:
                    continue
                value = cfg.buffers[channel.id]
                if value is not None and action.accepts(value) and _guard(graph, t, env):
                    result.append(TransitionInstance("receive", graph.name, index, channel.id))
    return result


def _assign(cs: ChannelSystem, cfg: Configuration, graph: ProgramGraph, name: str, value):
    decl = graph.variables.get(name)
    if decl is not None:
        decl.domain.check(f"{graph.name}.{name}", value)
        cfg.local(graph.name)[name] = value
    elif name in cs.shared and not graph.monitor:
        cs.shared[name].domain.check(name, value)
        cfg.shared[name] = value
    else:
        raise EvaluationError(f"'{graph.name}' assigns unknown variable '{name}'")


def _apply_updates(cs, cfg, graph, updates, env):
    values = [(name, expr.evaluate(env)) for name, expr in updates]
    for name, value in values:
        _assign(cs, cfg, graph, name, value)


def _apply_internal(cs: ChannelSystem, cfg: Configuration, graph: ProgramGraph, action):
    if isinstance(action, Assignments):
        _apply_updates(cs, cfg, graph, action.updates, _env(cfg, graph.name))
    elif isinstance(action, NativeEffect):
        local = cfg.local(graph.name)
        before = set(local)
        action.fn(local, cfg.shared)
        if set(local) != before:
            raise EvaluationError(f"native effect '{action.name}' of '{graph.name}' changed the variable set")
        for name, value in local.items():
            graph.variables[name].domain.check(f"{graph.name}.{name}", value)
        for name, value in cfg.shared.items():
            cs.shared[name].domain.check(name, value)


def _settle(cs: ChannelSystem, cfg: Configuration, monitor: ProgramGraph):
    for _ in range(len(monitor.transitions) + 1):
        env = _env(cfg, monitor.name)
        for _, t in monitor.outgoing(cfg.locations[monitor.name]):
            if is_internal(t.action) and _guard(monitor, t, env):
                _apply_internal(cs, cfg, monitor, t.action)
                cfg.locations[monitor.name] = t.target
                break
        else:
            return
    raise ModelError(f"monitor '{monitor.name}' does not settle; its internal transitions form a cycle")


def _observe(cs: ChannelSystem, cfg: Configuration, obs: Observation, result: StepResult):
    for monitor in cs.monitors:
        before = cfg.locations[monitor.name]
        if before in monitor.error_locations:
            continue
        for _, t in monitor.outgoing(before):
            action = t.action
            if not isinstance(action, Sniff) or action.channel != obs.channel:
                continue
            if obs.side != "handshake" and action.on != obs.side:
                continue
            env = ChainMap({action.target: obs.value}, cfg.variables[monitor.name], cfg.shared)
            if not _guard(monitor, t, env):
                continue
            _assign(cs, cfg, monitor, action.target, obs.value)
            _apply_updates(cs, cfg, monitor, action.updates, env)
            cfg.locations[monitor.name] = t.target
            break
        _settle(cs, cfg, monitor)
        after = cfg.locations[monitor.name]
        if after in monitor.error_locations:
            result.violations.append((monitor.name, after, obs))


def apply_transition(cs: ChannelSystem, cfg: Configuration, t: TransitionInstance) -> StepResult:
    """Apply an enabled transition without re-checking enabledness"""
    new = cfg.evolve()
    result = StepResult(new)
    graph = cs.process(t.pid)
    transition = graph.transitions[t.index]
    action = transition.action
    if t.kind == "internal":
        _apply_internal(cs, new, graph, action)
    elif t.kind == "send":
        value = action.payload.evaluate(_env(cfg, graph.name))
        new.buffers[t.channel] = value
        result.observations.append(Observation(t.channel, value, "send"))
    elif t.kind == "receive":
        value = new.buffers[t.channel]
        new.buffers[t.channel] = None
        if action.target is not None:
            _assign(cs, new, graph, action.target, value)
        result.observations.append(Observation(t.channel, value, "receive"))
    elif t.kind == "handshake":
        value = action.payload.evaluate(_env(cfg, graph.name))
        receiver = cs.process(t.partner)
        receive = receiver.transitions[t.partner_index]
        if receive.action.target is not None:
            _assign(cs, new, receiver, receive.action.target, value)
        new.locations[receiver.name] = receive.target
        result.observations.append(Observation(t.channel, value, "handshake"))
    else:
        raise ContractViolation(f"unknown transition kind '{t.kind}'")
    new.locations[graph.name] = transition.target

    if t.channel is not None and t.channel == cs.tick_channel:
        new.ticks += 1
        result.tick_delivered = True
        for hook in cs.tick_hooks:
            hook(new, new.ticks - 1)
    for obs in result.observations:
        _observe(cs, new, obs, result)
    return result


def step(cs: ChannelSystem, cfg: Configuration, t: TransitionInstance) -> Configuration:
    if t not in enabled_transitions(cs, cfg):
        raise ContractViolation(f"transition {t.label()} is not enabled")
    return apply_transition(cs, cfg, t).configuration


def initial_configuration(cs: ChannelSystem) -> Configuration:
    cfg = cs.initial_configuration()
    for monitor in cs.monitors:
        _settle(cs, cfg, monitor)
    return cfg


def replay(cs: ChannelSystem, choices: Sequence[int]) -> Configuration:
    """Re-execute a recorded choice sequence from the initial configuration"""
    cfg = initial_configuration(cs)
    for position, choice in enumerate(choices):
        enabled = enabled_transitions(cs, cfg)
        if not 0 <= choice < len(enabled):
            raise ContractViolation(f"choice {choice} at step {position} is out of range ({len(enabled)} enabled)")
        cfg = apply_transition(cs, cfg, enabled[choice]).configuration
    return cfg


# Schedulers

class Scheduler:
    """Picks an index into the enabled list, or None to stop"""

    def reset(self, cs: ChannelSystem):
        pass

    def choose(self, enabled: Sequence[TransitionInstance], cfg: Configuration) -> Optional[int]:
        raise NotImplementedError


class RandomScheduler(Scheduler):
    """Uniform choice driven by a seeded generator"""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.rng = random.Random(seed)

    def reset(self, cs):
        self.rng = random.Random(self.seed)

    def choose(self, enabled, cfg):
        return self.rng.randrange(len(enabled))


class RoundRobinScheduler(Scheduler):
    """Rotates fairly over processes; within a process takes the first option"""

    def __init__(self):
        self.order: Dict[str, int] = {}
        self.last = -1

    def reset(self, cs):
        self.order = {graph.name: i for i, graph in enumerate(cs.processes)}
        self.last = -1

    def choose(self, enabled, cfg):
        best = None
        best_key = None
        for i, t in enumerate(enabled):
            position = self.order.get(t.pid, 0)
            key = (position <= self.last, position)
            if best_key is None or key < best_key:
                best, best_key = i, key
        self.last = self.order.get(enabled[best].pid, 0)
        return best


class ReplayScheduler(Scheduler):
    """Feeds a fixed choice sequence; stops when it runs out"""

    def __init__(self, choices: Sequence[int]):
        self.choices = list(choices)
        self.position = 0

    def reset(self, cs):
        self.position = 0

    def choose(self, enabled, cfg):
        if self.position >= len(self.choices):
            return None
        choice = self.choices[self.position]
        self.position += 1
        if not 0 <= choice < len(enabled):
            raise ContractViolation(f"replayed choice {choice} out of range ({len(enabled)} enabled)")
        return choice


class TraceRecorder:
    """Builds the timed state sequence from step observations

    Each buffered channel shows the latest message sent on it during the
    current tick; the view is cleared whenever a tick is delivered.
    """

    def __init__(self, cs: ChannelSystem, progressive: bool = True):
        self.buffered = set(cs.buffered_channels)
        self.tss = TimedStateSequence(tuple(sorted(self.buffered)), [], progressive)
        self.view: Dict[ChannelId, Message] = {}
        self.last: Tuple[Dict[ChannelId, Message], int] = ({}, 0)

    def _record(self, tick: int) -> int:
        if not self.tss.entries and tick > 0:
            self.tss.append({}, 0)
        self.last = (dict(self.view), tick)
        return self.tss.append(self.view, tick)

    def observe(self, result: StepResult) -> Optional[int]:
        tick = max(0, result.configuration.ticks - 1)
        recorded = None
        for obs in result.observations:
            if obs.channel not in self.buffered:
                continue
            if obs.side == "send":
                self.view[obs.channel] = obs.value
            recorded = self._record(tick)
        if result.tick_delivered:
            self.view = {}
            if (self.view, tick) != self.last:
                recorded = self._record(tick)
        return recorded


def run(cs: ChannelSystem, scheduler: Scheduler, horizon: int, stop_on_violation: bool = False,
        seed: Optional[int] = None) -> ExecutionTrace:
    """Execute up to `horizon` steps and record the timed state sequence"""
    if horizon < 0:
        raise ContractViolation("horizon must be non-negative")
    scheduler.reset(cs)
    cfg = initial_configuration(cs)
    recorder = TraceRecorder(cs)
    counts: Counter = Counter()
    choices: List[int] = []
    violations: List[MonitorEvent] = []
    status = TerminalStatus.HORIZON
    blocked: Dict[str, str] = {}
    logger.info(f"Running {cs.name} for at most {horizon} steps with {len(cs.monitors)} monitors")

    while len(choices) < horizon:
        enabled = enabled_transitions(cs, cfg)
        if not enabled:
            status = TerminalStatus.DEADLOCK
            blocked = {graph.name: cfg.locations[graph.name] for graph in cs.processes}
            logger.warning(f"Deadlock after {len(choices)} steps at tick {cfg.ticks}")
            break
        choice = scheduler.choose(enabled, cfg)
        if choice is None:
            status = TerminalStatus.SCHEDULE_END
            break
        result = apply_transition(cs, cfg, enabled[choice])
        choices.append(choice)
        cfg = result.configuration
        for obs in result.observations:
            counts[str(obs.channel)] += 1
        recorded = recorder.observe(result)
        for monitor, location, obs in result.violations:
            position = recorded if recorded is not None else len(recorder.tss)
            event = MonitorEvent(monitor, location, len(choices) - 1, position, max(0, cfg.ticks - 1),
                                 obs.channel if obs else None, obs.value if obs else None)
            violations.append(event)
            logger.warning(event.describe())
        if violations and stop_on_violation:
            status = TerminalStatus.VIOLATION
            break

    return ExecutionTrace(
        choices=choices,
        final=cfg,
        status=status,
        tss=recorder.tss,
        steps=len(choices),
        ticks=cfg.ticks,
        blocked=blocked,
        message_counts=dict(sorted(counts.items())),
        violations=violations,
        monitors=tuple(m.name for m in cs.monitors),
        seed=seed,
    )
