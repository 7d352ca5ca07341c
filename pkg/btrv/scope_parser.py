"""
SCOPE property parser

Grammar (precedence from tightest to loosest):
    unary   not, next, always, eventually
    and
    or
    until   (right associative)
    implies (right associative)

Atoms are `true`, `false`, events `(source, dest, condition)` and timed
events `time_until (source, dest, condition) relop bound`, where bound is a
natural number or a parameter name bound at parse time.

Property files hold `param <name> = <int>;` bindings and `<name>: <formula>;`
declarations; `#` starts a comment.
"""

import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Set

from pyparsing import (Group, Keyword, Literal, MatchFirst, OneOrMore, OpAssoc, ParseBaseException, ParserElement,
                       Regex, StringEnd, Suppress, ZeroOrMore, col, infix_notation, lineno, one_of, python_style_comment)

from btrv.errors import ScopeSyntaxError
from btrv.program_graph import ChannelId
from btrv.scope_ast import (FALSE, TRUE, And, Compare, CondAnd, CondImplies, CondNot, CondOr, Condition, Event,
                            Formula, Next, Not, Or, TimeUntil, Until, always, eventually, format_formula, implies)
from btrv.values import Symbol

logger = logging.getLogger(__name__)

ParserElement.enable_packrat()

KEYWORDS = ("true", "false", "not", "and", "or", "implies", "next", "until", "always", "eventually",
            "time_until", "param")
RELOP = one_of("<= >= != ≤ ≥ ≠ == = < >")


def _fold_left(node):
    def action(tokens):
        items = tokens[0]
        result = items[0]
        for i in range(2, len(items), 2):
            result = node(result, items[i])
        return result
    return action


def _fold_right(node):
    def action(tokens):
        items = tokens[0]
        result = items[-1]
        for i in range(len(items) - 3, -1, -2):
            result = node(items[i], result)
        return result
    return action


def _constant(tokens):
    text = tokens[0]
    if text == "true":
        return True
    if text == "false":
        return False
    if text.startswith("<"):
        return Symbol(text[1:-1])
    return int(text)


def constant_grammar():
    """Message part literal: <symbol>, integer, true or false"""
    const = (Regex(r"<[A-Za-z_][A-Za-z0-9_]*>") | Regex(r"-?\d+") | Keyword("true") | Keyword("false"))
    return const.set_parse_action(_constant)


def condition_grammar():
    """Message conditions over m[i]"""
    compare = (Suppress(Keyword("m")) + Suppress("[") + Regex(r"\d+") + Suppress("]") + RELOP + constant_grammar())
    compare.set_parse_action(lambda t: Compare(int(t[0]), t[1], t[2]))
    return infix_notation(compare, [
        (Keyword("not"), 1, OpAssoc.RIGHT, lambda t: CondNot(t[0][1])),
        (Keyword("and"), 2, OpAssoc.LEFT, _fold_left(CondAnd)),
        (Keyword("or"), 2, OpAssoc.LEFT, _fold_left(CondOr)),
        (Keyword("implies"), 2, OpAssoc.RIGHT, _fold_right(CondImplies)),
    ])


UNARY_OPERATORS = ("not", "next", "always", "eventually")
BINARY_OPERATORS = ("and", "or", "until", "implies")


@dataclass(frozen=True)
class _Token:
    """Lexed formula token: an atom, an operator keyword or a parenthesis"""
    kind: str
    value: object
    loc: int


def _build_grammar():
    reserved = "|".join(sorted(KEYWORDS, key=len, reverse=True))
    name = Regex(rf"(?!(?:{reserved})\b)[^\W\d][\w.]*")
    condition = condition_grammar()

    event = (Suppress("(") + name + Suppress(",") + name + Suppress(",") + condition + Suppress(")"))
    event.set_parse_action(lambda s, loc, t: Event(t[0], t[1], t[2], pos=loc))
    bound = Regex(r"-?\d+") | name
    timed = (Suppress(Keyword("time_until")) + event + RELOP + bound)
    timed.set_parse_action(lambda s, loc, t: TimeUntil(t[0], t[1], int(t[2]) if re.fullmatch(r"-?\d+", t[2]) else t[2],
                                                       pos=loc))
    atom = (Keyword("true").set_parse_action(lambda: TRUE)
            | Keyword("false").set_parse_action(lambda: FALSE)
            | timed
            | event)
    atom.add_parse_action(lambda s, loc, t: _Token("atom", t[0], loc))
    operator = MatchFirst([Keyword(k) for k in UNARY_OPERATORS + BINARY_OPERATORS])
    operator.set_parse_action(lambda s, loc, t: _Token("op", t[0], loc))
    paren = (Literal("(") | Literal(")")).set_parse_action(lambda s, loc, t: _Token(t[0], t[0], loc))
    tokens = Group(OneOrMore(atom | operator | paren))

    single = tokens + StringEnd()
    single.ignore(python_style_comment)

    param = Group(Suppress(Keyword("param")) + name + Suppress("=") + Regex(r"-?\d+") + Suppress(";"))
    param.set_parse_action(lambda s, loc, t: ("param", loc, t[0][0], int(t[0][1])))
    declaration = Group(name + Suppress(":") + tokens + Suppress(";"))
    declaration.set_parse_action(lambda s, loc, t: ("property", loc, t[0][0], list(t[0][1])))
    document = ZeroOrMore(param | declaration) + StringEnd()
    document.ignore(python_style_comment)
    return single, document


_SINGLE, _DOCUMENT = _build_grammar()


class _FormulaParser:
    """Precedence climbing over lexed tokens

    implies and until associate to the right, and/or to the left; unary
    operators bind tightest.
    """

    def __init__(self, tokens: List[_Token], text: str):
        self.tokens = tokens
        self.text = text
        self.pos = 0

    def current(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def error(self, message: str, token: Optional[_Token]):
        loc = token.loc if token is not None else len(self.text)
        raise ScopeSyntaxError(message, lineno(loc, self.text), col(loc, self.text))

    def accept(self, kind: str, value: Optional[str] = None) -> bool:
        token = self.current()
        if token is not None and token.kind == kind and (value is None or token.value == value):
            self.pos += 1
            return True
        return False

    def parse(self) -> Formula:
        phi = self.parse_implies()
        token = self.current()
        if token is not None:
            self.error(f"unexpected '{token.value if token.kind != 'atom' else format_formula(token.value)}'", token)
        return phi

    def parse_implies(self) -> Formula:
        left = self.parse_until()
        if self.accept("op", "implies"):
            return implies(left, self.parse_implies())
        return left

    def parse_until(self) -> Formula:
        left = self.parse_or()
        if self.accept("op", "until"):
            return Until(left, self.parse_until())
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.accept("op", "or"):
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_unary()
        while self.accept("op", "and"):
            left = And(left, self.parse_unary())
        return left

    def parse_unary(self) -> Formula:
        token = self.current()
        if token is None:
            self.error("unexpected end of formula", None)
        self.pos += 1
        if token.kind == "atom":
            return token.value
        if token.kind == "(":
            phi = self.parse_implies()
            if not self.accept(")"):
                self.error("expected ')'", self.current())
            return phi
        if token.kind == "op" and token.value in UNARY_OPERATORS:
            operand = self.parse_unary()
            if token.value == "not":
                return Not(operand)
            if token.value == "next":
                return Next(operand)
            if token.value == "always":
                return always(operand)
            return eventually(operand)
        self.error(f"unexpected '{token.value}'", token)


@dataclass(frozen=True)
class NamedProperty:
    name: str
    formula: Formula
    text: str


class _Resolver:
    """Binds parameters, checks names and lifts event-level implications"""

    def __init__(self, text: str, bindings: Mapping[str, int], processes: Optional[Set[str]],
                 channels: Optional[Set[ChannelId]]):
        self.text = text
        self.bindings = dict(bindings)
        self.processes = processes
        self.channels = channels

    def error(self, message: str, pos: Optional[int]):
        if pos is None:
            raise ScopeSyntaxError(message, 0, 0)
        raise ScopeSyntaxError(message, lineno(pos, self.text), col(pos, self.text))

    def resolve(self, phi: Formula) -> Formula:
        if isinstance(phi, Event):
            self.check_event(phi)
            if isinstance(phi.cond, CondImplies):
                left = Event(phi.source, phi.dest, phi.cond.left, pos=phi.pos)
                right = Event(phi.source, phi.dest, phi.cond.right, pos=phi.pos)
                self.check_condition(left.cond, phi.pos)
                self.check_condition(right.cond, phi.pos)
                return implies(left, right)
            self.check_condition(phi.cond, phi.pos)
            return phi
        if isinstance(phi, TimeUntil):
            self.check_event(phi.event)
            self.check_condition(phi.event.cond, phi.pos)
            bound = phi.bound
            if isinstance(bound, str):
                if bound not in self.bindings:
                    self.error(f"unbound parameter '{bound}'", phi.pos)
                bound = self.bindings[bound]
            if bound < 0:
                self.error(f"negative time constant {bound}", phi.pos)
            return TimeUntil(phi.event, phi.relop, int(bound), pos=phi.pos)
        if isinstance(phi, (Not, Next)):
            return type(phi)(self.resolve(phi.operand))
        if isinstance(phi, (And, Or, Until)):
            return type(phi)(self.resolve(phi.left), self.resolve(phi.right))
        return phi

    def check_event(self, event: Event):
        if event.source == event.dest:
            self.error(f"event channel from '{event.source}' to itself", event.pos)
        if self.processes is not None:
            for end in (event.source, event.dest):
                if end not in self.processes:
                    self.error(f"unknown process '{end}'", event.pos)
        if self.channels is not None and event.channel not in self.channels:
            self.error(f"unknown channel {event.channel}", event.pos)

    def check_condition(self, cond: Condition, pos):
        if isinstance(cond, CondImplies):
            self.error("'implies' inside a message condition is only allowed at the top of an event", pos)
        if isinstance(cond, CondNot):
            self.check_condition(cond.operand, pos)
        elif isinstance(cond, (CondAnd, CondOr)):
            self.check_condition(cond.left, pos)
            self.check_condition(cond.right, pos)


def _syntax_error(e: ParseBaseException) -> ScopeSyntaxError:
    return ScopeSyntaxError(e.msg, e.lineno, e.col)


def parse(text: str, bindings: Optional[Mapping[str, int]] = None, processes: Optional[Iterable[str]] = None,
          channels: Optional[Iterable[ChannelId]] = None) -> Formula:
    """Parse one SCOPE formula

    processes/channels, when given, restrict the names events may use.
    """
    try:
        tokens = _SINGLE.parse_string(text, parse_all=True)[0]
    except ParseBaseException as e:
        raise _syntax_error(e) from None
    raw = _FormulaParser(list(tokens), text).parse()
    resolver = _Resolver(text, bindings or {}, set(processes) if processes is not None else None,
                         set(channels) if channels is not None else None)
    return resolver.resolve(raw)


def load_properties(text: str, bindings: Optional[Mapping[str, int]] = None,
                    processes: Optional[Iterable[str]] = None,
                    channels: Optional[Iterable[ChannelId]] = None) -> List[NamedProperty]:
    """Parse a property file; explicit bindings override `param` lines"""
    try:
        items = _DOCUMENT.parse_string(text, parse_all=True)
    except ParseBaseException as e:
        raise _syntax_error(e) from None
    params: Dict[str, int] = {}
    for kind, loc, name, value in items:
        if kind == "param":
            params[name] = value
    params.update(bindings or {})
    resolver = _Resolver(text, params, set(processes) if processes is not None else None,
                         set(channels) if channels is not None else None)
    result: List[NamedProperty] = []
    seen = set()
    for kind, loc, name, value in items:
        if kind != "property":
            continue
        if name in seen:
            raise ScopeSyntaxError(f"property '{name}' declared twice", lineno(loc, text), col(loc, text))
        seen.add(name)
        formula = resolver.resolve(_FormulaParser(value, text).parse())
        result.append(NamedProperty(name, formula, _declaration_text(text, loc)))
        logger.debug(f"Loaded property {name}")
    return result


def _declaration_text(text: str, loc: int) -> str:
    end = text.find(";", loc)
    snippet = text[loc:end if end >= 0 else len(text)]
    return snippet.split(":", 1)[1].strip() if ":" in snippet else snippet.strip()

