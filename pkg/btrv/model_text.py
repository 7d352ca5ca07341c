"""
Text format for program graphs and channel systems

    system <name>
    shared var <x> : <domain> [= <value>]
    channel <p> -> <q> capacity <0|1>
    tick channel <p> -> <q>
    process|monitor <name>
      var <x> : <domain> [= <value>]
      init <loc>
      initial <guard>
      location <loc>, <loc>, ...
      error <loc>
      <loc> --[ [<guard> :] <action> ]--> <loc>
    end

Parse errors carry file, line and column.
"""

import logging
from typing import Callable, Dict, List, Mapping, Optional

from pyparsing import (Forward, Group, Keyword, Literal, OpAssoc, Optional as Opt, ParseBaseException, ParseResults,
                       ParserElement, Regex, StringEnd, Suppress, ZeroOrMore, col, delimited_list, infix_notation,
                       lineno, one_of, python_style_comment)

from btrv.errors import ModelError, ModelSyntaxError
from btrv.expressions import (FALSE, TRUE, BinOp, Const, Expr, Index, MessageTemplate, Neg, Not, Var,
                              normalize_relop)
from btrv.program_graph import (Assignments, Channel, ChannelId, ChannelSystem, NativeEffect, ProgramGraph,
                                Receive, Send, Sniff, Transition, VarDecl)
from btrv.values import BOOL, MSG, IntDomain, Symbol, format_value, symbols

logger = logging.getLogger(__name__)

ParserElement.enable_packrat()

RESERVED = ("system", "shared", "var", "channel", "capacity", "tick", "process", "monitor", "end", "init",
            "initial", "location", "error", "skip", "call", "on", "send", "receive", "true", "false", "none",
            "not", "and", "or")

NativeTable = Mapping[str, Callable]


def _keywords(*words):
    return {w: Keyword(w) for w in words}


def expression_grammar(identifier) -> Forward:
    """Guards and effect expressions"""
    expr = Forward()
    integer = Regex(r"\d+").set_parse_action(lambda t: Const(int(t[0])))
    boolean = (Keyword("true").set_parse_action(lambda: TRUE) | Keyword("false").set_parse_action(lambda: FALSE))
    none = Keyword("none").set_parse_action(lambda: Const(None))
    symbol = Regex(r"<([A-Za-z_][A-Za-z0-9_]*)>").set_parse_action(lambda t: Const(Symbol(t[0][1:-1])))
    template = (Suppress("[") + Group(delimited_list(expr)) + Suppress("]")).set_parse_action(
        lambda t: MessageTemplate(tuple(t[0])))
    variable = (identifier + ZeroOrMore(Suppress("[") + Regex(r"\d+") + Suppress("]"))).set_parse_action(_indexed)
    operand = integer | boolean | none | symbol | template | variable

    expr <<= infix_notation(operand, [
        (Literal("-"), 1, OpAssoc.RIGHT, _negate),
        (Literal("*"), 2, OpAssoc.LEFT, _binary),
        (one_of("+ -"), 2, OpAssoc.LEFT, _binary),
        (one_of("<= >= != ≤ ≥ ≠ = < >"), 2, OpAssoc.LEFT, _binary),
        (Keyword("not"), 1, OpAssoc.RIGHT, lambda t: Not(t[0][1])),
        (Keyword("and"), 2, OpAssoc.LEFT, _binary),
        (Keyword("or"), 2, OpAssoc.LEFT, _binary),
    ])
    return expr


def _indexed(tokens):
    result: Expr = Var(tokens[0])
    for position in tokens[1:]:
        result = Index(result, int(position))
    return result


def _negate(tokens):
    operand = tokens[0][1]
    if isinstance(operand, Const) and isinstance(operand.value, int) and not isinstance(operand.value, bool):
        return Const(-operand.value)
    return Neg(operand)


def _binary(tokens):
    items = tokens[0]
    result = items[0]
    for i in range(1, len(items), 2):
        result = BinOp(normalize_relop(items[i]), result, items[i + 1])
    return result


def identifier_grammar():
    """A single token; reserved words are excluded"""
    reserved = "|".join(sorted(RESERVED, key=len, reverse=True))
    return Regex(rf"(?!(?:{reserved})(?![A-Za-z0-9_$]))[A-Za-z_][A-Za-z0-9_.]*")


def _first(value):
    if isinstance(value, ParseResults):
        return value[0] if len(value) else None
    return value


def _constant(expr: Expr, what: str):
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, MessageTemplate) and expr.is_constant():
        return tuple(p.value for p in expr.parts)
    raise ModelError(f"{what} must be a constant, got {expr.text()}")


class ModelParser:
    """Builds ChannelSystem objects from the text format"""

    def __init__(self, natives: Optional[NativeTable] = None):
        self.natives: Dict[str, Callable] = dict(natives or {})
        self.logger = logging.getLogger(__name__)
        self.grammar = self._build()

    def _build(self):
        kw = _keywords(*RESERVED)
        ident = identifier_grammar()
        expr = expression_grammar(ident)
        self.expr = expr
        integer = Regex(r"-?\d+")
        arrow = Suppress("->")

        domain = (
            (Keyword("int") + Suppress("[") + integer + Suppress("..") + integer + Suppress("]"))
            .set_parse_action(lambda t: IntDomain(int(t[1]), int(t[2])))
            | Keyword("bool").set_parse_action(lambda: BOOL)
            | (Keyword("sym") + Suppress("{") + Group(delimited_list(Regex(r"[A-Za-z_][A-Za-z0-9_]*"))) + Suppress("}"))
            .set_parse_action(lambda t: symbols(*t[1]))
            | Keyword("msg").set_parse_action(lambda: MSG)
        )
        var_decl = Group(kw["var"] + ident("name") + Suppress(":") + domain("domain") + Opt(Suppress("=") + expr("value")))
        shared_decl = Group(kw["shared"] + var_decl("decl"))
        channel_decl = Group(kw["channel"] + ident("source") + arrow + ident("dest") + kw["capacity"] + Regex(r"\d+")("capacity"))
        tick_decl = Group(kw["tick"] + kw["channel"] + ident("source") + arrow + ident("dest"))

        assignment = Group(ident + Suppress(":=") + expr)
        assignments = Group(delimited_list(assignment))
        channel_ref = ident + Suppress(",") + ident + Suppress(",")
        action = (
            kw["skip"].set_parse_action(lambda: ("skip",))
            | (kw["call"] + ident).set_parse_action(lambda t: ("call", t[1]))
            | (Suppress("??(") + channel_ref + ident + Suppress(")")
               + Opt(kw["on"] + (kw["send"] | kw["receive"]))("side")
               + Opt(Suppress("/") + assignments)("updates")).set_parse_action(self._sniff_tokens)
            | (Suppress("?(") + channel_ref + expr + Suppress(")")).set_parse_action(lambda t: ("receive", t[0], t[1], t[2]))
            | (Suppress("!(") + channel_ref + expr + Suppress(")")).set_parse_action(lambda t: ("send", t[0], t[1], t[2]))
            | assignments.copy().set_parse_action(lambda t: ("assign", list(t[0])))
        )
        guard = expr + Regex(r":(?!=)").suppress()
        transition = Group(ident("source") + Suppress("--[") + Opt(guard)("guard") + action("action")
                           + Suppress("]-->") + ident("target"))
        transition.set_parse_action(self._located("transition"))

        member = (
            var_decl.copy().set_parse_action(self._located("var"))
            | Group(kw["init"] + Group(delimited_list(ident))("locs")).set_parse_action(self._located("init"))
            | Group(kw["initial"] + expr("guard")).set_parse_action(self._located("initial"))
            | Group(kw["location"] + Group(delimited_list(ident))("locs")).set_parse_action(self._located("location"))
            | Group(kw["error"] + Group(delimited_list(ident))("locs")).set_parse_action(self._located("error"))
            | transition
        )
        block = Group((kw["process"] | kw["monitor"])("kind") + ident("name") + Group(ZeroOrMore(member))("members")
                      + kw["end"])
        block.set_parse_action(self._located("block"))

        header = Opt(Group(kw["system"] + ident("name"))("header"))
        item = (shared_decl.set_parse_action(self._located("shared"))
                | tick_decl.set_parse_action(self._located("tick"))
                | channel_decl.set_parse_action(self._located("channel"))
                | block)
        document = header + Group(ZeroOrMore(item))("items") + StringEnd()
        document.ignore(python_style_comment)
        return document

    @staticmethod
    def _sniff_tokens(tokens):
        side = "send"
        updates = []
        rest = list(tokens[3:])
        if rest and rest[0] == "on":
            side = rest[1]
            rest = rest[2:]
        if rest:
            updates = list(rest[0])
        return ("sniff", tokens[0], tokens[1], tokens[2], side, updates)

    @staticmethod
    def _located(kind):
        def action(s, loc, tokens):
            return [(kind, loc, s, tokens[0])]
        return action

    def parse(self, text: str, file: Optional[str] = None, name: Optional[str] = None) -> ChannelSystem:
        try:
            result = self.grammar.parse_string(text, parse_all=True)
        except ParseBaseException as e:
            self.logger.error(f"Syntax error in {file or '<input>'}: {e}")
            raise ModelSyntaxError(e.msg, e.lineno, e.col, file) from None
        return self._system(result, file, name)

    def parse_graphs(self, text: str, file: Optional[str] = None) -> List[ProgramGraph]:
        """Parse a file holding only process/monitor blocks"""
        try:
            result = self.grammar.parse_string(text, parse_all=True)
        except ParseBaseException as e:
            raise ModelSyntaxError(e.msg, e.lineno, e.col, file) from None
        graphs = []
        for kind, loc, s, tokens in result["items"]:
            if kind != "block":
                raise ModelSyntaxError("only process and monitor blocks are allowed here", *self._where(s, loc), file)
            graphs.append(self._graph(tokens, s, loc, file))
        return graphs

    @staticmethod
    def _where(s, loc):
        return lineno(loc, s), col(loc, s)

    def _system(self, result, file, name) -> ChannelSystem:
        header = result.get("header")
        system_name = name or (header["name"] if header else "system")
        shared: List[VarDecl] = []
        channels: List[Channel] = []
        tick_channel = None
        processes: List[ProgramGraph] = []
        monitors: List[ProgramGraph] = []
        for kind, loc, s, tokens in result["items"]:
            try:
                if kind == "shared":
                    shared.append(self._var(tokens["decl"]))
                elif kind == "channel":
                    channels.append(Channel(ChannelId(tokens["source"], tokens["dest"]), int(tokens["capacity"])))
                elif kind == "tick":
                    tick_channel = ChannelId(tokens["source"], tokens["dest"])
                else:
                    graph = self._graph(tokens, s, loc, file)
                    (monitors if graph.monitor else processes).append(graph)
            except ModelError as e:
                raise ModelSyntaxError(str(e), *self._where(s, loc), file) from e
        return ChannelSystem(system_name, processes, channels, shared, tick_channel, monitors)

    def _var(self, tokens) -> VarDecl:
        value = tokens.get("value")
        initial = _constant(_first(value), f"initial value of '{tokens['name']}'") if value is not None else None
        return VarDecl(tokens["name"], _first(tokens["domain"]), initial)

    def _graph(self, tokens, s, loc, file) -> ProgramGraph:
        name = tokens["name"]
        variables: List[VarDecl] = []
        init: List[str] = []
        locations: List[str] = []
        errors: List[str] = []
        initial_condition = TRUE
        transitions: List[Transition] = []
        for kind, mloc, ms, member in tokens["members"]:
            try:
                if kind == "var":
                    variables.append(self._var(member))
                elif kind == "init":
                    init.extend(member["locs"])
                elif kind == "initial":
                    initial_condition = _first(member["guard"])
                elif kind == "location":
                    locations.extend(member["locs"])
                elif kind == "error":
                    errors.extend(member["locs"])
                elif kind == "transition":
                    transitions.append(self._transition(member))
            except ModelError as e:
                raise ModelSyntaxError(str(e), *self._where(ms, mloc), file) from e
        if len(init) > 1:
            self.logger.info(f"'{name}' declares {len(init)} initial locations; using '{init[0]}'")
        for t in transitions:
            for end in (t.source, t.target):
                if end not in locations:
                    locations.append(end)
        for loc_name in init + errors:
            if loc_name not in locations:
                locations.append(loc_name)
        try:
            return ProgramGraph(name, locations, transitions, init, variables, initial_condition,
                                monitor=_first(tokens["kind"]) == "monitor", error_locations=errors)
        except ModelError as e:
            raise ModelSyntaxError(str(e), *self._where(s, loc), file) from e

    def _transition(self, tokens) -> Transition:
        guard = _first(tokens.get("guard"))
        guard = guard if guard is not None else TRUE
        action = _first(tokens["action"])
        kind = action[0]
        if kind == "skip":
            built = Assignments()
        elif kind == "call":
            if action[1] not in self.natives:
                raise ModelError(f"unknown native effect '{action[1]}'")
            built = NativeEffect(action[1], self.natives[action[1]])
        elif kind == "assign":
            built = Assignments(tuple((a[0], a[1]) for a in action[1]))
        elif kind == "send":
            built = Send(ChannelId(action[1], action[2]), action[3])
        elif kind == "receive":
            what = action[3]
            if isinstance(what, Var):
                built = Receive(ChannelId(action[1], action[2]), target=what.name)
            else:
                built = Receive(ChannelId(action[1], action[2]), pattern=_constant(what, "receive pattern"))
        else:
            built = Sniff(ChannelId(action[1], action[2]), action[3], action[4],
                          tuple((a[0], a[1]) for a in action[5]))
        return Transition(tokens["source"], guard, built, tokens["target"])


def parse_system(text: str, natives: Optional[NativeTable] = None, file: Optional[str] = None) -> ChannelSystem:
    return ModelParser(natives).parse(text, file)


def parse_graphs(text: str, natives: Optional[NativeTable] = None, file: Optional[str] = None) -> List[ProgramGraph]:
    return ModelParser(natives).parse_graphs(text, file)


def parse_expression(text: str) -> Expr:
    parser = ModelParser()
    try:
        return parser.expr.parse_string(text, parse_all=True)[0]
    except ParseBaseException as e:
        raise ModelSyntaxError(e.msg, e.lineno, e.col) from None


# Printing

def _initial_text(decl: VarDecl) -> str:
    if decl.initial is None:
        return ""
    return f" = {format_value(decl.initial)}"


def format_graph(graph: ProgramGraph) -> str:
    lines = [f"{'monitor' if graph.monitor else 'process'} {graph.name}"]
    for decl in graph.variables.values():
        lines.append(f"  var {decl.name} : {decl.domain.text()}{_initial_text(decl)}")
    lines.append(f"  init {', '.join(graph.initial)}")
    if graph.initial_condition != TRUE:
        lines.append(f"  initial {graph.initial_condition.text()}")
    lines.append(f"  location {', '.join(graph.locations)}")
    if graph.error_locations:
        lines.append(f"  error {', '.join(graph.error_locations)}")
    for t in graph.transitions:
        lines.append(f"  {t.text()}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def format_system(cs: ChannelSystem) -> str:
    lines = [f"system {cs.name}"]
    for decl in cs.shared.values():
        lines.append(f"shared var {decl.name} : {decl.domain.text()}{_initial_text(decl)}")
    for channel in cs.channels.values():
        lines.append(f"channel {channel.id.source} -> {channel.id.dest} capacity {channel.capacity}")
    if cs.tick_channel is not None:
        lines.append(f"tick channel {cs.tick_channel.source} -> {cs.tick_channel.dest}")
    text = "\n".join(lines) + "\n"
    for graph in cs.processes + cs.monitors:
        text += "\n" + format_graph(graph)
    return text


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def graph_to_dot(graph: ProgramGraph) -> str:
    """Graphviz rendering of one program graph"""
    lines = [f'digraph "{_dot_escape(graph.name)}" {{', "  rankdir=LR;"]
    for loc in graph.locations:
        shape = "doublecircle" if loc in graph.error_locations else "circle"
        lines.append(f'  "{_dot_escape(loc)}" [shape={shape}];')
    lines.append('  "__start" [shape=point];')
    lines.append(f'  "__start" -> "{_dot_escape(graph.initial_location)}";')
    for t in graph.transitions:
        guard = "" if t.guard == TRUE else f"[{t.guard.text()}] "
        label = _dot_escape(guard + t.action.text())
        lines.append(f'  "{_dot_escape(t.source)}" -> "{_dot_escape(t.target)}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
