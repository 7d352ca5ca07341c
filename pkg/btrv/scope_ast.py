"""
SCOPE formula and message-condition trees

Derived forms are not separate node types: `false`, `implies`, `eventually`
and `always` are expanded when parsing and recognised again when printing.
"""

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from btrv.diagnostics import DiagnosticLog, IssueSeverity, IssueType
from btrv.expressions import BinOp, Const, Expr, Index, Not as NotExpr, Var, compare, normalize_relop
from btrv.program_graph import ChannelId
from btrv.values import MISSING, Message, Part, format_value


# Message conditions

class Condition:
    """Boolean combination of comparisons over message parts"""

    def holds(self, message: Message, diagnostics: Optional[DiagnosticLog] = None) -> bool:
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def is_atomic(self) -> bool:
        return False

    def __str__(self):
        return self.text()


def _wrap_condition(cond: Condition) -> str:
    return cond.text() if cond.is_atomic() else f"({cond.text()})"


@dataclass(frozen=True)
class Compare(Condition):
    """m[index] relop constant"""
    index: int
    relop: str
    const: Part

    def __post_init__(self):
        object.__setattr__(self, "relop", normalize_relop(self.relop))

    def holds(self, message, diagnostics=None):
        if 1 <= self.index <= len(message):
            part = message[self.index - 1]
        else:
            part = MISSING
            if diagnostics is not None:
                diagnostics.record(IssueType.MISSING_MESSAGE_PART, IssueSeverity.LOW,
                                   f"m[{self.index}] read from a {len(message)}-part message",
                                   self.text(), format_value(message))
        return compare(self.relop, part, self.const)

    def is_atomic(self):
        return True

    def text(self):
        return f"m[{self.index}] {self.relop} {format_value(self.const)}"


@dataclass(frozen=True)
class CondNot(Condition):
    operand: Condition

    def holds(self, message, diagnostics=None):
        return not self.operand.holds(message, diagnostics)

    def text(self):
        return f"not {_wrap_condition(self.operand)}"


@dataclass(frozen=True)
class CondAnd(Condition):
    left: Condition
    right: Condition

    def holds(self, message, diagnostics=None):
        return self.left.holds(message, diagnostics) and self.right.holds(message, diagnostics)

    def text(self):
        return f"{_wrap_condition(self.left)} and {_wrap_condition(self.right)}"


@dataclass(frozen=True)
class CondOr(Condition):
    left: Condition
    right: Condition

    def holds(self, message, diagnostics=None):
        return self.left.holds(message, diagnostics) or self.right.holds(message, diagnostics)

    def text(self):
        return f"{_wrap_condition(self.left)} or {_wrap_condition(self.right)}"


@dataclass(frozen=True)
class CondImplies(Condition):
    """Only legal at the top of an event; lifted to the formula level"""
    left: Condition
    right: Condition

    def holds(self, message, diagnostics=None):
        return (not self.left.holds(message, diagnostics)) or self.right.holds(message, diagnostics)

    def text(self):
        return f"{_wrap_condition(self.left)} implies {_wrap_condition(self.right)}"


def condition_expr(cond: Condition, variable: str = "y") -> Expr:
    """Guard over a message variable equivalent to a message condition"""
    if isinstance(cond, Compare):
        return BinOp(cond.relop, Index(Var(variable), cond.index), Const(cond.const))
    if isinstance(cond, CondNot):
        return NotExpr(condition_expr(cond.operand, variable))
    if isinstance(cond, (CondAnd, CondImplies)):
        left = condition_expr(cond.left, variable)
        if isinstance(cond, CondImplies):
            return BinOp("or", NotExpr(left), condition_expr(cond.right, variable))
        return BinOp("and", left, condition_expr(cond.right, variable))
    if isinstance(cond, CondOr):
        return BinOp("or", condition_expr(cond.left, variable), condition_expr(cond.right, variable))
    raise TypeError(f"not a message condition: {cond!r}")


# Formulas

class Formula:
    """SCOPE formula node"""

    def children(self) -> tuple:
        return ()

    def walk(self) -> Iterator["Formula"]:
        yield self
        for child in self.children():
            yield from child.walk()

    def events(self) -> Iterator["Event"]:
        for node in self.walk():
            if isinstance(node, Event):
                yield node
            elif isinstance(node, TimeUntil):
                yield node.event

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True)
class TrueFormula(Formula):
    pass


TRUE = TrueFormula()


@dataclass(frozen=True)
class Event(Formula):
    source: str
    dest: str
    cond: Condition
    pos: Optional[int] = field(default=None, compare=False, repr=False, hash=False)

    @property
    def channel(self) -> ChannelId:
        return ChannelId(self.source, self.dest)


@dataclass(frozen=True)
class TimeUntil(Formula):
    event: Event
    relop: str
    bound: Union[int, str]
    pos: Optional[int] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "relop", normalize_relop(self.relop))


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Next(Formula):
    operand: Formula

    def children(self):
        return (self.operand,)


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


FALSE = Not(TRUE)


def implies(a: Formula, b: Formula) -> Formula:
    return Or(Not(a), b)


def eventually(a: Formula) -> Formula:
    return Until(TRUE, a)


def always(a: Formula) -> Formula:
    return Not(Until(TRUE, Not(a)))


def as_always(phi: Formula) -> Optional[Formula]:
    """Body of an `always` formula, or None"""
    if isinstance(phi, Not) and isinstance(phi.operand, Until) and phi.operand.left == TRUE \
            and isinstance(phi.operand.right, Not):
        return phi.operand.right.operand
    return None


def as_implies(phi: Formula):
    if isinstance(phi, Or) and isinstance(phi.left, Not):
        return phi.left.operand, phi.right
    return None


# Printing

def _is_atomic(phi: Formula, abbreviate: bool = True) -> bool:
    return isinstance(phi, (TrueFormula, Event, TimeUntil)) or (abbreviate and phi == FALSE)


def _wrap(phi: Formula, abbreviate: bool) -> str:
    text = format_formula(phi, abbreviate)
    return text if _is_atomic(phi, abbreviate) else f"({text})"


def format_event(event: Event) -> str:
    return f"({event.source}, {event.dest}, {event.cond.text()})"


def format_formula(phi: Formula, abbreviate: bool = True) -> str:
    """Print a formula so that parsing the text gives back the same tree"""
    if isinstance(phi, TrueFormula):
        return "true"
    if isinstance(phi, Event):
        return format_event(phi)
    if isinstance(phi, TimeUntil):
        return f"time_until {format_event(phi.event)} {phi.relop} {phi.bound}"
    if abbreviate:
        if phi == FALSE:
            return "false"
        body = as_always(phi)
        if body is not None:
            return f"always {_wrap(body, abbreviate)}"
        if isinstance(phi, Until) and phi.left == TRUE:
            return f"eventually {_wrap(phi.right, abbreviate)}"
        parts = as_implies(phi)
        if parts is not None:
            return f"{_wrap(parts[0], abbreviate)} implies {_wrap(parts[1], abbreviate)}"
    if isinstance(phi, Not):
        return f"not {_wrap(phi.operand, abbreviate)}"
    if isinstance(phi, Next):
        return f"next {_wrap(phi.operand, abbreviate)}"
    if isinstance(phi, And):
        return f"{_wrap(phi.left, abbreviate)} and {_wrap(phi.right, abbreviate)}"
    if isinstance(phi, Or):
        return f"{_wrap(phi.left, abbreviate)} or {_wrap(phi.right, abbreviate)}"
    if isinstance(phi, Until):
        return f"{_wrap(phi.left, abbreviate)} until {_wrap(phi.right, abbreviate)}"
    raise TypeError(f"not a SCOPE formula: {phi!r}")
