"""
Tests for the program-graph text format
"""

import pytest

from btrv.errors import ModelSyntaxError
from btrv.expressions import Expr
from btrv.model_text import format_system, graph_to_dot, parse_graphs, parse_system
from btrv.program_graph import ChannelId, NativeEffect, Sniff
from btrv.values import IntDomain

from conftest import PING_PONG


def test_parse_ping_pong(ping_pong):
    assert ping_pong.name == "PingPong"
    assert [p.name for p in ping_pong.processes] == ["Pinger", "Ponger"]
    assert ping_pong.tick_channel == ChannelId("Pinger", "Ponger")
    assert ping_pong.channels[ChannelId("Ponger", "Pinger")].capacity == 1
    assert ping_pong.shared["n"].domain == IntDomain(0, 3)


def test_format_parses_back(ping_pong):
    text = format_system(ping_pong)
    again = parse_system(text)
    assert format_system(again) == text
    assert [len(p.transitions) for p in again.processes] == [3, 2]


def test_syntax_error_reports_position():
    with pytest.raises(ModelSyntaxError) as info:
        parse_system("process P\n  init A\n  A --[ !(P, Q ]--> A\nend\n", file="broken.pg")
    assert info.value.file == "broken.pg"


def test_reserved_words_are_not_identifiers():
    with pytest.raises(ModelSyntaxError):
        parse_system("process P\n  var tick : bool\n  init A\nend\n")


def test_unknown_native_effect():
    with pytest.raises(ModelSyntaxError):
        parse_graphs("process P\n  init A\n  A --[ call missing ]--> A\nend\n")


def test_native_effects_are_resolved_from_the_table():
    def bump(local, shared):
        local["n"] += 1

    graphs = parse_graphs("process P\n  var n : int[0..3]\n  init A\n  A --[ n < 3 : call bump ]--> A\nend\n",
                          natives={"bump": bump})
    action = graphs[0].transitions[0].action
    assert isinstance(action, NativeEffect)
    assert action.fn is bump


def test_monitor_block_with_sniff_and_error_location():
    graphs = parse_graphs("""
monitor Watch
  var y : msg
  var seen : bool = false
  init I
  error Err
  I --[ ??(A, B, y) / seen := y[1] = <bad> ]--> Check
  Check --[ seen : skip ]--> Err
  Check --[ not seen : skip ]--> I
end
""")
    watch = graphs[0]
    assert watch.monitor
    assert watch.error_locations == ("Err",)
    sniff = watch.transitions[0].action
    assert isinstance(sniff, Sniff)
    assert sniff.on == "send"
    assert sniff.updates[0][0] == "seen"


def test_multiple_initial_locations_use_the_first():
    graphs = parse_graphs("process P\n  init B, A\n  A --[ skip ]--> B\nend\n")
    assert graphs[0].initial_location == "B"


def test_dotted_process_names():
    cs = parse_system("""
channel BT.Root -> Skill capacity 1
process BT.Root
  init A
  A --[ !(BT.Root, Skill, [<tick>]) ]--> A
end
process Skill
  var x : msg
  init A
  A --[ ?(BT.Root, Skill, x) ]--> A
end
""")
    assert ChannelId("BT.Root", "Skill") in cs.channels


def test_dot_rendering(ping_pong):
    dot = graph_to_dot(ping_pong.process("Pinger"))
    assert dot.startswith('digraph "Pinger"')
    assert '"Count" -> "Send"' in dot


def test_fixture_text_is_parseable():
    assert parse_system(PING_PONG).process("Ponger").initial_location == "Listen"


def test_parsed_values_are_plain_objects():
    cs = parse_system("""
process P
  var n : int[0..3] = 2
  var flag : bool = true
  initial n > 1
  init A
  A --[ skip ]--> A
end
""")
    assert cs.name == "system"
    graph = cs.processes[0]
    n, flag = graph.variables["n"], graph.variables["flag"]
    assert n.name == "n" and isinstance(n.name, str)
    assert n.domain == IntDomain(0, 3)
    assert type(n.initial) is int and n.initial == 2
    assert flag.initial is True
    assert isinstance(graph.initial_condition, Expr)
    assert parse_system("system Demo\n" + PING_PONG.split("\n", 2)[2]).name == "Demo"
