"""
Behavior tree definitions and their compilation to program graphs

Every node becomes one process `BT.<name>`. Parents and children exchange
[<tick>], [<halt>], status messages and [<halted>] acknowledgements over
capacity-0 channels; a leaf talks to its skill over a pair of capacity-1
channels. The root is ticked by the tick source (TickGenerator by default)
and answers it with its status.

Composites are reactive: each tick re-runs the children from the first. When
a composite finishes a tick without reaching the child that was running in
the previous tick, it halts that child and waits for the acknowledgement
before replying.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple

from btrv.diagnostics import DiagnosticLog, IssueSeverity, IssueType
from btrv.errors import BtCompileError
from btrv.expressions import TRUE, BinOp, Const, Expr, MessageTemplate, Not, Var, conjunction
from btrv.program_graph import (Assignments, Channel, ChannelId, Configuration, ProgramGraph, Receive, Send,
                                Transition, VarDecl)
from btrv.scope_ast import Compare, Condition, condition_expr
from btrv.values import MSG, IntDomain, Message, Symbol, msg, symbols

logger = logging.getLogger(__name__)

BT_PREFIX = "BT."
DEFAULT_TICK_SOURCE = "TickGenerator"
UNMAPPED_LIMIT = 1_000_000

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")


class BtStatus(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class NodeKind(str, Enum):
    SEQUENCE = "sequence"
    FALLBACK = "fallback"
    CONDITION = "condition"
    ACTION = "action"


TICK = msg("tick")
HALT = msg("halt")
HALTED = msg("halted")


@dataclass(frozen=True)
class ReplyRule:
    """Leaf status chosen when the skill reply satisfies the condition"""
    status: BtStatus
    condition: Condition


def _status_rule(status: BtStatus) -> ReplyRule:
    return ReplyRule(status, Compare(1, "=", Symbol(status.value)))


@dataclass(frozen=True)
class BtNodeDef:
    kind: NodeKind
    name: str
    children: Tuple["BtNodeDef", ...] = ()
    skill: Optional[str] = None
    rules: Tuple[ReplyRule, ...] = ()
    may_run: bool = False
    halt_message: Message = HALT

    @property
    def is_leaf(self) -> bool:
        return self.kind in (NodeKind.CONDITION, NodeKind.ACTION)

    @property
    def can_run(self) -> bool:
        return self.kind == NodeKind.ACTION or self.may_run

    @property
    def process_name(self) -> str:
        return BT_PREFIX + self.name

    def reply_rules(self) -> Tuple[ReplyRule, ...]:
        """Declared mapping, or the default one-part status mapping"""
        if self.rules:
            return self.rules
        statuses = [BtStatus.SUCCESS, BtStatus.FAILURE]
        if self.can_run:
            statuses.append(BtStatus.RUNNING)
        return tuple(_status_rule(s) for s in statuses)

    def walk(self) -> Iterator["BtNodeDef"]:
        yield self
        for child in self.children:
            yield from child.walk()


def sequence(name: str, *children: BtNodeDef) -> BtNodeDef:
    return BtNodeDef(NodeKind.SEQUENCE, name, tuple(children))


def fallback(name: str, *children: BtNodeDef) -> BtNodeDef:
    return BtNodeDef(NodeKind.FALLBACK, name, tuple(children))


def condition(name: str, skill: Optional[str] = None, rules=(), may_run: bool = False) -> BtNodeDef:
    return BtNodeDef(NodeKind.CONDITION, name, skill=skill or name, rules=tuple(rules), may_run=may_run)


def action(name: str, skill: Optional[str] = None, rules=(), halt_message: Message = HALT) -> BtNodeDef:
    return BtNodeDef(NodeKind.ACTION, name, skill=skill or name, rules=tuple(rules), halt_message=halt_message)


@dataclass(frozen=True)
class BehaviorTreeDef:
    name: str
    root: BtNodeDef
    tick_source: str = DEFAULT_TICK_SOURCE

    def nodes(self) -> List[BtNodeDef]:
        return list(self.root.walk())

    def leaves(self) -> List[BtNodeDef]:
        return [n for n in self.nodes() if n.is_leaf]

    def skills(self) -> List[str]:
        seen: List[str] = []
        for leaf in self.leaves():
            if leaf.skill not in seen:
                seen.append(leaf.skill)
        return seen

    def find(self, name: str) -> Optional[BtNodeDef]:
        for node in self.nodes():
            if node.name == name:
                return node
        return None


@dataclass(frozen=True)
class LeafBinding:
    leaf: str
    skill: str
    request: ChannelId
    reply: ChannelId


@dataclass
class CompiledTree:
    tree: BehaviorTreeDef
    processes: List[ProgramGraph]
    channels: List[Channel]
    tick_channel: ChannelId
    status_channel: ChannelId
    leaves: Dict[str, LeafBinding] = field(default_factory=dict)

    @property
    def process_names(self) -> List[str]:
        return [p.name for p in self.processes]

    def skill_channels(self) -> List[Channel]:
        return [c for c in self.channels if c.buffered]


# Program graph helpers

def _message(*names: str) -> MessageTemplate:
    return MessageTemplate(tuple(Const(Symbol(n)) for n in names))


def _is_status(status: BtStatus, variable: str = "x") -> Expr:
    return condition_expr(Compare(1, "=", Symbol(status.value)), variable)


def _tr(source: str, act, target: str, guard: Expr = TRUE) -> Transition:
    return Transition(source, guard, act, target)


_STATUS_DOMAIN = symbols(*(s.value for s in BtStatus))


def _finish(j: int, status: BtStatus) -> Assignments:
    running_child = j if status == BtStatus.RUNNING else -1
    return Assignments((
        ("s", Const(Symbol(status.value))),
        ("last", Const(j)),
        ("prev", Var("r")),
        ("r", Const(running_child)),
    ))


def _composite_graph(node: BtNodeDef, parent: str) -> ProgramGraph:
    me = node.process_name
    kids = [c.process_name for c in node.children]
    k = len(kids)
    if node.kind == NodeKind.SEQUENCE:
        proceed, stops = BtStatus.SUCCESS, (BtStatus.FAILURE, BtStatus.RUNNING)
    else:
        proceed, stops = BtStatus.FAILURE, (BtStatus.SUCCESS, BtStatus.RUNNING)

    up, down = ChannelId(me, parent), ChannelId(parent, me)
    transitions = [
        _tr("Idle", Receive(down, pattern=TICK), "Tick"),
        _tr("Idle", Receive(down, pattern=HALT), "Halt"),
        _tr("Tick", Send(ChannelId(me, kids[0]), _message("tick")), "Wait0"),
    ]
    for j, kid in enumerate(kids):
        transitions.append(_tr(f"Wait{j}", Receive(ChannelId(kid, me), target="x"), f"Decide{j}"))
        if j + 1 < k:
            transitions.append(_tr(f"Decide{j}", Send(ChannelId(me, kids[j + 1]), _message("tick")), f"Wait{j + 1}",
                                   _is_status(proceed)))
            finals = stops
        else:
            finals = (proceed,) + stops
        for status in finals:
            transitions.append(_tr(f"Decide{j}", _finish(j, status), "Finish", _is_status(status)))

    reply = Send(up, MessageTemplate((Var("s"),)))
    for m in range(1, k):
        stale = BinOp("and", BinOp("=", Var("prev"), Const(m)), BinOp(">", Const(m), Var("last")))
        transitions.append(_tr("Finish", Send(ChannelId(me, kids[m]), _message("halt")), f"Halting{m}", stale))
        transitions.append(_tr(f"Halting{m}", Receive(ChannelId(kids[m], me), pattern=HALTED), "Reply"))
    transitions.append(_tr("Finish", reply, "Idle", BinOp("<=", Var("prev"), Var("last"))))
    transitions.append(_tr("Reply", reply, "Idle"))

    for m in range(k):
        transitions.append(_tr("Halt", Send(ChannelId(me, kids[m]), _message("halt")), f"HaltChild{m}",
                               BinOp("=", Var("r"), Const(m))))
        transitions.append(_tr(f"HaltChild{m}", Receive(ChannelId(kids[m], me), pattern=HALTED), "Halted"))
    transitions.append(_tr("Halted", Assignments((("r", Const(-1)),)), "Halt"))
    transitions.append(_tr("Halt", Send(up, _message("halted")), "Idle", BinOp("<", Var("r"), Const(0))))

    locations = ["Idle", "Tick"]
    for j in range(k):
        locations += [f"Wait{j}", f"Decide{j}"]
    locations += ["Finish", "Reply"] + [f"Halting{m}" for m in range(1, k)]
    locations += ["Halt", "Halted"] + [f"HaltChild{m}" for m in range(k)]
    variables = [
        VarDecl("x", MSG),
        VarDecl("s", _STATUS_DOMAIN, Symbol(BtStatus.FAILURE.value)),
        VarDecl("r", IntDomain(-1, k - 1), -1),
        VarDecl("prev", IntDomain(-1, k - 1), -1),
        VarDecl("last", IntDomain(0, k - 1), 0),
    ]
    return ProgramGraph(me, locations, transitions, ["Idle"], variables)


def _leaf_graph(node: BtNodeDef, parent: str) -> ProgramGraph:
    me = node.process_name
    up, down = ChannelId(me, parent), ChannelId(parent, me)
    request, reply = ChannelId(me, node.skill), ChannelId(node.skill, me)
    transitions = [
        _tr("Idle", Receive(down, pattern=TICK), "Request"),
        _tr("Request", Send(request, _message("tick")), "Await"),
        _tr("Await", Receive(reply, target="x"), "Map"),
    ]
    matched: List[Expr] = []
    for rule in node.reply_rules():
        holds = condition_expr(rule.condition, "x")
        guard = conjunction(holds, *[Not(m) for m in matched])
        transitions.append(_tr("Map", Send(up, _message(rule.status.value)), "Idle", guard))
        matched.append(holds)
    unmapped = conjunction(*[Not(m) for m in matched])
    transitions += [
        _tr("Map", Assignments((("unmapped", BinOp("+", Var("unmapped"), Const(1))),)), "Unmapped", unmapped),
        _tr("Unmapped", Send(up, _message(BtStatus.FAILURE.value)), "Idle"),
    ]
    locations = ["Idle", "Request", "Await", "Map", "Unmapped", "Acknowledge"]
    if node.kind == NodeKind.ACTION:
        halt = MessageTemplate(tuple(Const(p) for p in node.halt_message))
        transitions += [
            _tr("Idle", Receive(down, pattern=HALT), "HaltRequest"),
            _tr("HaltRequest", Send(request, halt), "HaltAwait"),
            _tr("HaltAwait", Receive(reply, target="x"), "Acknowledge"),
        ]
        locations += ["HaltRequest", "HaltAwait"]
    else:
        transitions.append(_tr("Idle", Receive(down, pattern=HALT), "Acknowledge"))
    transitions.append(_tr("Acknowledge", Send(up, _message("halted")), "Idle"))
    variables = [VarDecl("x", MSG), VarDecl("unmapped", IntDomain(0, UNMAPPED_LIMIT), 0)]
    return ProgramGraph(me, locations, transitions, ["Idle"], variables)


# Compilation

def validate_tree(tree: BehaviorTreeDef):
    seen = set()
    for node in tree.nodes():
        if not _NAME.match(node.name):
            raise BtCompileError(f"node name '{node.name}' is not an identifier")
        if node.name in seen:
            raise BtCompileError(f"node name '{node.name}' used twice")
        seen.add(node.name)
        if node.is_leaf:
            if node.children:
                raise BtCompileError(f"leaf '{node.name}' has children")
            if not node.skill:
                raise BtCompileError(f"leaf '{node.name}' is not bound to a skill")
            if not _NAME.match(node.skill):
                raise BtCompileError(f"skill name '{node.skill}' of '{node.name}' is not an identifier")
            if not node.can_run and any(r.status == BtStatus.RUNNING for r in node.rules):
                raise BtCompileError(f"condition '{node.name}' maps a reply to running but is not declared running")
            if not node.halt_message:
                raise BtCompileError(f"action '{node.name}' has an empty halt message")
        elif not node.children:
            raise BtCompileError(f"{node.kind.value} '{node.name}' has no children")
    if not _NAME.match(tree.tick_source):
        raise BtCompileError(f"tick source '{tree.tick_source}' is not an identifier")
    skills = set(tree.skills())
    if tree.tick_source in skills:
        raise BtCompileError(f"tick source '{tree.tick_source}' is also a skill")


def compile_bt(tree: BehaviorTreeDef) -> CompiledTree:
    """Translate a tree into node processes and their channels"""
    validate_tree(tree)
    processes: List[ProgramGraph] = []
    channels: List[Channel] = []
    leaves: Dict[str, LeafBinding] = {}

    def visit(node: BtNodeDef, parent: str):
        me = node.process_name
        channels.append(Channel(ChannelId(parent, me), 0))
        channels.append(Channel(ChannelId(me, parent), 0))
        if node.is_leaf:
            processes.append(_leaf_graph(node, parent))
            binding = LeafBinding(node.name, node.skill, ChannelId(me, node.skill), ChannelId(node.skill, me))
            channels.append(Channel(binding.request, 1))
            channels.append(Channel(binding.reply, 1))
            leaves[node.name] = binding
            return
        processes.append(_composite_graph(node, parent))
        for child in node.children:
            visit(child, me)

    visit(tree.root, tree.tick_source)
    root = tree.root.process_name
    compiled = CompiledTree(tree, processes, channels, ChannelId(tree.tick_source, root),
                            ChannelId(root, tree.tick_source), leaves)
    logger.debug(f"Compiled tree {tree.name}: {len(processes)} node processes, {len(channels)} channels")
    return compiled


def unmapped_replies(compiled: CompiledTree, cfg: Configuration) -> Dict[str, int]:
    """Unmapped skill replies seen by each leaf so far"""
    counts = {}
    for name in compiled.leaves:
        value = cfg.variables[BT_PREFIX + name]["unmapped"]
        if value:
            counts[name] = value
    return counts


def record_unmapped(compiled: CompiledTree, cfg: Configuration, diagnostics: DiagnosticLog) -> Dict[str, int]:
    counts = unmapped_replies(compiled, cfg)
    for leaf, count in counts.items():
        diagnostics.record(IssueType.UNMAPPED_REPLY, IssueSeverity.MEDIUM,
                           f"{count} skill replies matched no reply rule and returned failure",
                           BT_PREFIX + leaf)
    return counts
