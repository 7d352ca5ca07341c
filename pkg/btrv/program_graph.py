"""
Program graphs, channels and channel systems

A ProgramGraph is a finite set of locations connected by guarded
transitions; each transition carries one action. A ChannelSystem composes
program graphs that communicate over capacity-0 (handshake) and capacity-1
(buffered) channels, optionally with monitor graphs that only observe.
"""

import logging
from collections import ChainMap
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, MutableMapping, Optional, Sequence, Tuple

from btrv.errors import EvaluationError, ModelError
from btrv.expressions import TRUE, Expr, eval_guard, strict_equal
from btrv.values import Domain, Message, MessageDomain, format_value

logger = logging.getLogger(__name__)

SNIFF_SIDES = ("send", "receive")


@dataclass(frozen=True, order=True)
class ChannelId:
    source: str
    dest: str

    def __post_init__(self):
        if not self.source or not self.dest:
            raise ModelError("channel endpoints must be non-empty")
        if self.source == self.dest:
            raise ModelError(f"channel from '{self.source}' to itself")

    @classmethod
    def parse(cls, text: str) -> "ChannelId":
        source, sep, dest = text.partition("->")
        if not sep:
            raise ModelError(f"malformed channel identifier '{text}'")
        return cls(source.strip(), dest.strip())

    def __str__(self):
        return f"{self.source}->{self.dest}"


@dataclass(frozen=True)
class Channel:
    id: ChannelId
    capacity: int

    def __post_init__(self):
        if self.capacity not in (0, 1):
            raise ModelError(f"channel {self.id} has capacity {self.capacity}; only 0 and 1 are supported")

    @property
    def buffered(self) -> bool:
        return self.capacity == 1


@dataclass(frozen=True)
class VarDecl:
    name: str
    domain: Domain
    initial: object = None

    def initial_value(self):
        value = self.domain.default() if self.initial is None else self.initial
        return self.domain.check(self.name, value)


# Actions

class Action:
    """Base class for transition actions; communication actions carry a channel"""

    def text(self) -> str:
        raise NotImplementedError

    def __str__(self):
        return self.text()


@dataclass(frozen=True)
class Assignments(Action):
    """Simultaneous assignment; an empty list is a plain internal move"""
    updates: Tuple[Tuple[str, Expr], ...] = ()
    channel = None

    def text(self):
        if not self.updates:
            return "skip"
        return ", ".join(f"{name} := {expr.text()}" for name, expr in self.updates)


TAU = Assignments()


@dataclass(frozen=True)
class NativeEffect(Action):
    """Internal action implemented by a Python callable fn(local, shared)"""
    name: str
    fn: Callable[[MutableMapping, MutableMapping], None] = field(compare=False, hash=False, repr=False)
    channel = None

    def text(self):
        return f"call {self.name}"


@dataclass(frozen=True)
class Send(Action):
    channel: ChannelId
    payload: Expr

    def text(self):
        return f"!({self.channel.source}, {self.channel.dest}, {self.payload.text()})"


@dataclass(frozen=True)
class Receive(Action):
    """Receive into a variable, or only accept an exact literal message"""
    channel: ChannelId
    target: Optional[str] = None
    pattern: Optional[Message] = None

    def __post_init__(self):
        if (self.target is None) == (self.pattern is None):
            raise ModelError(f"receive on {self.channel} needs exactly one of a variable or a literal message")

    def accepts(self, value) -> bool:
        if self.pattern is None:
            return True
        return strict_equal(self.pattern, value)

    def text(self):
        what = self.target if self.target is not None else format_value(self.pattern)
        return f"?({self.channel.source}, {self.channel.dest}, {what})"


@dataclass(frozen=True)
class Sniff(Action):
    """Monitor-only observation of a data exchange on a channel"""
    channel: ChannelId
    target: str
    on: str = "send"
    updates: Tuple[Tuple[str, Expr], ...] = ()

    def __post_init__(self):
        if self.on not in SNIFF_SIDES:
            raise ModelError(f"sniff side must be one of {SNIFF_SIDES}, got '{self.on}'")

    def text(self):
        side = "" if self.on == "send" else " on receive"
        text = f"??({self.channel.source}, {self.channel.dest}, {self.target}){side}"
        if self.updates:
            text += " / " + ", ".join(f"{name} := {expr.text()}" for name, expr in self.updates)
        return text


def is_internal(action: Action) -> bool:
    return isinstance(action, (Assignments, NativeEffect))


@dataclass(frozen=True)
class Transition:
    source: str
    guard: Expr
    action: Action
    target: str

    def text(self) -> str:
        guard = "" if self.guard == TRUE else f"{self.guard.text()} : "
        return f"{self.source} --[ {guard}{self.action.text()} ]--> {self.target}"


class ProgramGraph:
    """One process: locations, variables and guarded transitions"""

    def __init__(self, name: str, locations: Iterable[str], transitions: Iterable[Transition],
                 initial: Sequence[str], variables: Iterable[VarDecl] = (),
                 initial_condition: Expr = TRUE, monitor: bool = False,
                 error_locations: Iterable[str] = ()):
        if not name:
            raise ModelError("process name must be non-empty")
        self.name = name
        self.locations: Tuple[str, ...] = tuple(dict.fromkeys(locations))
        self.transitions: Tuple[Transition, ...] = tuple(transitions)
        self.initial: Tuple[str, ...] = tuple(initial)
        self.variables: Dict[str, VarDecl] = {}
        for decl in variables:
            if decl.name in self.variables:
                raise ModelError(f"variable '{decl.name}' declared twice in '{name}'")
            self.variables[decl.name] = decl
        self.initial_condition = initial_condition
        self.monitor = monitor
        self.error_locations: Tuple[str, ...] = tuple(error_locations)
        self._outgoing: Dict[str, List[Tuple[int, Transition]]] = {loc: [] for loc in self.locations}
        self.validate()
        if self.initial_condition.variables() <= set(self.variables):
            self.check_initial_condition()

    def validate(self):
        known = set(self.locations)
        if not self.initial:
            raise ModelError(f"process '{self.name}' has no initial location")
        for loc in self.initial + self.error_locations:
            if loc not in known:
                raise ModelError(f"process '{self.name}' refers to undeclared location '{loc}'")
        for index, t in enumerate(self.transitions):
            for loc in (t.source, t.target):
                if loc not in known:
                    raise ModelError(f"transition {t.text()} in '{self.name}' uses undeclared location '{loc}'")
            if isinstance(t.action, Sniff) and not self.monitor:
                raise ModelError(f"sniff action in non-monitor process '{self.name}'")
            if isinstance(t.action, (Send, Receive)) and self.monitor:
                raise ModelError(f"monitor '{self.name}' may only observe channels")
            target = getattr(t.action, "target", None)
            decl = self.variables.get(target) if target is not None else None
            if decl is not None and not isinstance(decl.domain, MessageDomain):
                raise ModelError(f"'{target}' in '{self.name}' receives messages but is not declared msg")
            self._outgoing[t.source].append((index, t))
        for loc in self.error_locations:
            if self._outgoing[loc]:
                raise ModelError(f"error location '{loc}' of '{self.name}' has outgoing transitions")

    @property
    def initial_location(self) -> str:
        return self.initial[0]

    def outgoing(self, location: str) -> List[Tuple[int, Transition]]:
        try:
            return self._outgoing[location]
        except KeyError:
            raise ModelError(f"process '{self.name}' has no location '{location}'") from None

    def initial_evaluation(self) -> Dict[str, object]:
        return {name: decl.initial_value() for name, decl in self.variables.items()}

    def check_initial_condition(self, shared: Optional[Mapping[str, object]] = None):
        """The initial condition must hold on the declared initial values"""
        env = ChainMap(self.initial_evaluation(), dict(shared or {}))
        try:
            ok = eval_guard(self.initial_condition, env)
        except EvaluationError as e:
            raise ModelError(f"initial condition of '{self.name}' cannot be evaluated: {e}") from e
        if not ok:
            raise ModelError(f"initial condition of '{self.name}' is false on its initial evaluation")

    def channels(self) -> List[ChannelId]:
        seen = []
        for t in self.transitions:
            if t.action.channel is not None and t.action.channel not in seen:
                seen.append(t.action.channel)
        return seen

    def __repr__(self):
        return f"ProgramGraph({self.name!r}, {len(self.locations)} locations, {len(self.transitions)} transitions)"


TickHook = Callable[["Configuration", int], None]


class Configuration:
    """Global state; step() builds new configurations copy-on-write"""

    __slots__ = ("locations", "variables", "shared", "buffers", "ticks", "_owned")

    def __init__(self, locations: Dict[str, str], variables: Dict[str, Dict[str, object]],
                 shared: Dict[str, object], buffers: Dict[ChannelId, Optional[Message]], ticks: int = 0):
        self.locations = locations
        self.variables = variables
        self.shared = shared
        self.buffers = buffers
        self.ticks = ticks
        self._owned = set()

    def evolve(self) -> "Configuration":
        return Configuration(dict(self.locations), dict(self.variables), dict(self.shared),
                             dict(self.buffers), self.ticks)

    def local(self, pid: str) -> Dict[str, object]:
        """Writable evaluation of one process (copied on first write)"""
        if pid not in self._owned:
            self.variables[pid] = dict(self.variables[pid])
            self._owned.add(pid)
        return self.variables[pid]

    def env(self, pid: str) -> Mapping:
        return ChainMap(self.variables[pid], self.shared)

    def get(self, pid: str, name: str):
        local = self.variables[pid]
        return local[name] if name in local else self.shared[name]

    def _key(self):
        return (
            tuple(sorted(self.locations.items())),
            tuple(sorted((pid, tuple(sorted(vs.items(), key=lambda kv: kv[0]))) for pid, vs in self.variables.items())),
            tuple(sorted(self.shared.items())),
            tuple(sorted(self.buffers.items())),
            self.ticks,
        )

    def __eq__(self, other):
        return isinstance(other, Configuration) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"Configuration(ticks={self.ticks}, locations={self.locations})"


class ChannelSystem:
    """Processes, channels, shared variables and attached monitors"""

    def __init__(self, name: str, processes: Iterable[ProgramGraph], channels: Iterable[Channel],
                 shared: Iterable[VarDecl] = (), tick_channel: Optional[ChannelId] = None,
                 monitors: Iterable[ProgramGraph] = (), tick_hooks: Iterable[TickHook] = ()):
        self.name = name
        self.processes: Tuple[ProgramGraph, ...] = tuple(processes)
        self.channels: Dict[ChannelId, Channel] = {}
        for channel in channels:
            if channel.id in self.channels:
                raise ModelError(f"channel {channel.id} declared twice")
            self.channels[channel.id] = channel
        self.shared: Dict[str, VarDecl] = {}
        for decl in shared:
            if decl.name in self.shared:
                raise ModelError(f"shared variable '{decl.name}' declared twice")
            self.shared[decl.name] = decl
        self.tick_channel = tick_channel
        self.monitors: Tuple[ProgramGraph, ...] = tuple(monitors)
        self.tick_hooks: List[TickHook] = list(tick_hooks)
        self.by_name: Dict[str, ProgramGraph] = {}
        self.validate()

    @property
    def monitor_errors(self) -> Dict[str, Tuple[str, ...]]:
        return {m.name: m.error_locations for m in self.monitors}

    @property
    def buffered_channels(self) -> List[ChannelId]:
        return [cid for cid, ch in self.channels.items() if ch.buffered]

    def process(self, name: str) -> ProgramGraph:
        try:
            return self.by_name[name]
        except KeyError:
            raise ModelError(f"unknown process '{name}'") from None

    def validate(self):
        for graph in self.processes + self.monitors:
            if graph.name in self.by_name:
                raise ModelError(f"process name '{graph.name}' is not unique")
            self.by_name[graph.name] = graph
        for graph in self.processes:
            if graph.monitor:
                raise ModelError(f"'{graph.name}' is a monitor; attach it as a monitor")
            for name in graph.variables:
                if name in self.shared:
                    raise ModelError(f"local variable '{name}' of '{graph.name}' shadows a shared variable")
        for graph in self.monitors:
            if not graph.monitor:
                raise ModelError(f"'{graph.name}' is not a monitor graph")
        for cid in self.channels:
            for end in (cid.source, cid.dest):
                if end not in self.by_name or self.by_name[end].monitor:
                    raise ModelError(f"channel {cid} has unknown endpoint '{end}'")
        for graph in self.processes + self.monitors:
            for t in graph.transitions:
                action = t.action
                if action.channel is None:
                    continue
                if action.channel not in self.channels:
                    raise ModelError(f"'{graph.name}' uses undeclared channel {action.channel}")
                if isinstance(action, Send) and action.channel.source != graph.name:
                    raise ModelError(f"'{graph.name}' sends on {action.channel} but is not its source")
                if isinstance(action, Receive) and action.channel.dest != graph.name:
                    raise ModelError(f"'{graph.name}' receives on {action.channel} but is not its destination")
                target = getattr(action, "target", None)
                if target is not None and target not in graph.variables:
                    raise ModelError(f"'{graph.name}' receives into undeclared variable '{target}'")
        if self.tick_channel is not None:
            channel = self.channels.get(self.tick_channel)
            if channel is None:
                raise ModelError(f"tick channel {self.tick_channel} is not declared")
            if channel.buffered:
                raise ModelError("the tick channel must have capacity 0")
        shared = {name: decl.initial_value() for name, decl in self.shared.items()}
        for graph in self.processes + self.monitors:
            graph.check_initial_condition(shared)

    def initial_configuration(self) -> Configuration:
        shared = {name: decl.initial_value() for name, decl in self.shared.items()}
        locations = {}
        variables = {}
        for graph in self.processes + self.monitors:
            locations[graph.name] = graph.initial_location
            variables[graph.name] = graph.initial_evaluation()
        buffers = {cid: None for cid in self.buffered_channels}
        return Configuration(locations, variables, shared, buffers, 0)

    def with_monitors(self, monitors: Iterable[ProgramGraph]) -> "ChannelSystem":
        return ChannelSystem(self.name, self.processes, self.channels.values(), self.shared.values(),
                             self.tick_channel, self.monitors + tuple(monitors), self.tick_hooks)

    def __repr__(self):
        return f"ChannelSystem({self.name!r}, {len(self.processes)} processes, {len(self.channels)} channels)"

