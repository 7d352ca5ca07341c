"""
Tests for the behavior tree text format
"""

import pytest

from btrv.behavior_tree import HALT, BtStatus, NodeKind
from btrv.bt_text import format_tree, load_tree, parse_tree
from btrv.errors import BtCompileError, ModelSyntaxError
from btrv.scope_ast import Compare
from btrv.values import Symbol


def test_parse_mission_tree(data_dir):
    tree = load_tree(data_dir / "trees" / "mission.bt")
    assert tree.name == "Mission"
    assert tree.tick_source == "TickGenerator"
    assert tree.root.kind is NodeKind.FALLBACK
    assert [c.name for c in tree.root.children] == ["Mission", "Recharge"]
    level = tree.find("BatteryLevelAbove30")
    assert level.skill == "BatteryLevel"
    assert tree.find("GoToDestination").skill == "GoToDestination"
    assert tree.find("GoToDestination").halt_message == HALT


def test_format_parses_back(data_dir):
    for name in ("mission.bt", "wait_at_station.bt"):
        tree = load_tree(data_dir / "trees" / name)
        assert parse_tree(format_tree(tree)) == tree


def test_running_conditions_and_ascii_sequence_mark():
    tree = parse_tree("""
tree T tick Clock
-> Root {
    condition Wait uses Waiter running
    action Go
}
""")
    assert tree.tick_source == "Clock"
    assert tree.root.kind is NodeKind.SEQUENCE
    assert tree.find("Wait").may_run
    assert format_tree(tree).startswith("tree T tick Clock\n→ Root {")


def test_reply_maps_and_halt_messages():
    tree = parse_tree("""
tree T
fallback Root {
    condition Level map {
        success: m[2] > 30;
        failure: m[2] ≤ 30;
    }
    action Go halt [<stop>, 1] map { running: m[1] = <busy>; success: m[1] = <done>; }
}
""")
    level = tree.find("Level")
    assert [r.status for r in level.rules] == [BtStatus.SUCCESS, BtStatus.FAILURE]
    assert level.rules[1].condition == Compare(2, "<=", 30)
    go = tree.find("Go")
    assert go.halt_message == (Symbol("stop"), 1)
    assert go.rules[0].condition == Compare(1, "=", Symbol("busy"))
    assert parse_tree(format_tree(tree)) == tree


def test_syntax_error_has_position():
    with pytest.raises(ModelSyntaxError) as info:
        parse_tree("tree T\n? Root {\n    condition\n}\n", file="broken.bt")
    assert info.value.file == "broken.bt"
    assert info.value.line >= 1


def test_missing_tree_file(tmp_path):
    with pytest.raises(BtCompileError):
        load_tree(tmp_path / "nothing.bt")
