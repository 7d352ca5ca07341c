"""
Text format for behavior trees

    tree <name> [tick <source>]
    ? <name> { <node> ... }                 fallback
    → <name> { <node> ... }                 sequence (also written ->)
    condition <name> [uses <skill>] [running] [map { <status>: <condition>; ... }]
    action <name> [uses <skill>] [halt [<part>, ...]] [map { ... }]

A leaf without `uses` is bound to the skill of the same name. Reply rules
are tried in order; their conditions use the m[i] syntax of properties.
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

from pyparsing import (Forward, Group, Keyword, Literal, OneOrMore, Optional as Opt, ParseBaseException, ParserElement,
                       Regex, StringEnd, Suppress, ZeroOrMore, delimited_list, python_style_comment)

from btrv.behavior_tree import (DEFAULT_TICK_SOURCE, HALT, BehaviorTreeDef, BtNodeDef, BtStatus, NodeKind,
                                ReplyRule)
from btrv.errors import BtCompileError, ModelSyntaxError
from btrv.scope_parser import condition_grammar, constant_grammar
from btrv.values import format_value

logger = logging.getLogger(__name__)

ParserElement.enable_packrat()

FALLBACK_MARK = "?"
SEQUENCE_MARK = "→"


def _build_grammar():
    name = Regex(r"[A-Za-z_][A-Za-z0-9_]*")
    status = Regex(r"success|failure|running")
    rule = Group(status + Suppress(":") + condition_grammar() + Suppress(";"))
    mapping = Suppress(Keyword("map")) + Suppress("{") + Group(ZeroOrMore(rule))("rules") + Suppress("}")
    message = Suppress("[") + Group(delimited_list(constant_grammar()))("halt") + Suppress("]")

    uses = Suppress(Keyword("uses")) + name("skill")
    condition_leaf = Group(Keyword("condition")("kind") + name("name") + Opt(uses)
                           + Opt(Keyword("running")("running")) + Opt(mapping))
    action_leaf = Group(Keyword("action")("kind") + name("name") + Opt(uses)
                        + Opt(Suppress(Keyword("halt")) + message) + Opt(mapping))

    node = Forward()
    mark = (Literal("?") | Keyword("fallback")).set_parse_action(lambda: NodeKind.FALLBACK.value) \
        | (Literal("->") | Literal("→") | Keyword("sequence")).set_parse_action(lambda: NodeKind.SEQUENCE.value)
    composite = Group(mark("kind") + name("name") + Suppress("{") + Group(OneOrMore(node))("children") + Suppress("}"))
    node <<= condition_leaf | action_leaf | composite

    header = Suppress(Keyword("tree")) + name("tree") + Opt(Suppress(Keyword("tick")) + name("tick"))
    document = header + node + StringEnd()
    document.ignore(python_style_comment)
    return document


_DOCUMENT = _build_grammar()


def _node(tokens) -> BtNodeDef:
    kind = NodeKind(tokens["kind"])
    name = tokens["name"]
    if kind in (NodeKind.SEQUENCE, NodeKind.FALLBACK):
        return BtNodeDef(kind, name, tuple(_node(c) for c in tokens["children"]))
    rules = tuple(ReplyRule(BtStatus(r[0]), r[1]) for r in tokens.get("rules", []))
    skill = tokens.get("skill", name)
    if kind == NodeKind.CONDITION:
        return BtNodeDef(kind, name, skill=skill, rules=rules, may_run="running" in tokens)
    halt = tuple(tokens["halt"]) if "halt" in tokens else HALT
    return BtNodeDef(kind, name, skill=skill, rules=rules, halt_message=halt)


def parse_tree(text: str, file: Optional[str] = None) -> BehaviorTreeDef:
    try:
        result = _DOCUMENT.parse_string(text, parse_all=True)
    except ParseBaseException as e:
        logger.error(f"Syntax error in tree {file or '<input>'}: {e}")
        raise ModelSyntaxError(e.msg, e.lineno, e.col, file) from None
    tree = BehaviorTreeDef(result["tree"], _node(result[-1]), result.get("tick", DEFAULT_TICK_SOURCE))
    logger.debug(f"Parsed tree {tree.name} with {len(tree.nodes())} nodes")
    return tree


def load_tree(path: Union[str, Path]) -> BehaviorTreeDef:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise BtCompileError(f"cannot read tree file {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise BtCompileError(f"tree file {path} is not UTF-8 text: {e.reason} at byte {e.start}") from None
    return parse_tree(text, str(path))


# Printing

def _leaf_lines(node: BtNodeDef) -> List[str]:
    head = f"{node.kind.value} {node.name}"
    if node.skill != node.name:
        head += f" uses {node.skill}"
    if node.kind == NodeKind.CONDITION and node.may_run:
        head += " running"
    if node.kind == NodeKind.ACTION and tuple(node.halt_message) != HALT:
        head += f" halt {format_value(tuple(node.halt_message))}"
    if not node.rules:
        return [head]
    lines = [head + " map {"]
    lines += [f"    {rule.status.value}: {rule.condition.text()};" for rule in node.rules]
    lines.append("}")
    return lines


def _node_lines(node: BtNodeDef) -> List[str]:
    if node.is_leaf:
        return _leaf_lines(node)
    mark = FALLBACK_MARK if node.kind == NodeKind.FALLBACK else SEQUENCE_MARK
    lines = [f"{mark} {node.name} {{"]
    for child in node.children:
        lines += ["    " + line for line in _node_lines(child)]
    lines.append("}")
    return lines


def format_tree(tree: BehaviorTreeDef) -> str:
    """Pretty-print a tree in the ?/→ notation; the output parses back"""
    header = f"tree {tree.name}"
    if tree.tick_source != DEFAULT_TICK_SOURCE:
        header += f" tick {tree.tick_source}"
    return "\n".join([header] + _node_lines(tree.root)) + "\n"
