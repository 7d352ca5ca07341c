"""
Tests for the SCOPE property parser and printer
"""

import random

import pytest

from btrv.errors import ScopeSyntaxError
from btrv.scope_ast import (FALSE, TRUE, And, Compare, CondAnd, CondNot, CondOr, Event, Next, Not, Or, TimeUntil,
                            Until, always, eventually, format_formula, implies)
from btrv.scope_parser import load_properties, parse
from btrv.values import Symbol

OK = Symbol("ok")


def test_battery_safety_property_ast():
    phi = parse("always (BatteryReader, BatteryLevel, m[1] = <ok> implies m[2] >= 20)")
    expected = always(implies(
        Event("BatteryReader", "BatteryLevel", Compare(1, "=", OK)),
        Event("BatteryReader", "BatteryLevel", Compare(2, ">=", 20)),
    ))
    assert phi == expected


def test_battery_response_property_ast():
    phi = parse("always (((Navigation, GoToDestination, m[1] = <ok> and m[2] = <running>)"
                " and (BatteryReader, BatteryLevel, m[1] = <ok> and m[2] <= 30))"
                " implies time_until (GoToRechargingStation, Navigation,"
                " m[1] = <start_navigation> and m[2] = <RechargingStation>) < theta)",
                bindings={"theta": 100})
    trigger = And(
        Event("Navigation", "GoToDestination", CondAnd(Compare(1, "=", OK), Compare(2, "=", Symbol("running")))),
        Event("BatteryReader", "BatteryLevel", CondAnd(Compare(1, "=", OK), Compare(2, "<=", 30))),
    )
    response = TimeUntil(Event("GoToRechargingStation", "Navigation",
                               CondAnd(Compare(1, "=", Symbol("start_navigation")),
                                       Compare(2, "=", Symbol("RechargingStation")))), "<", 100)
    assert phi == always(implies(trigger, response))


def test_precedence():
    a, b, c = (Event("P", "Q", Compare(1, "=", i)) for i in (1, 2, 3))
    assert parse("(P, Q, m[1] = 1) and (P, Q, m[1] = 2) or (P, Q, m[1] = 3)") == Or(And(a, b), c)
    assert parse("(P, Q, m[1] = 1) until (P, Q, m[1] = 2) until (P, Q, m[1] = 3)") == Until(a, Until(b, c))
    assert parse("(P, Q, m[1] = 1) implies (P, Q, m[1] = 2) implies (P, Q, m[1] = 3)") == \
        implies(a, implies(b, c))
    assert parse("not (P, Q, m[1] = 1) and (P, Q, m[1] = 2)") == And(Not(a), b)
    assert parse("always (P, Q, m[1] = 1) or (P, Q, m[1] = 2)") == Or(always(a), b)
    assert parse("(P, Q, m[1] = 1) until (P, Q, m[1] = 2) implies (P, Q, m[1] = 3)") == implies(Until(a, b), c)


def test_derived_forms():
    assert parse("false") == FALSE
    assert parse("eventually true") == Until(TRUE, TRUE)
    assert parse("next true") == Next(TRUE)


def test_unicode_relops():
    phi = parse("time_until (P, Q, m[1] ≠ 1) ≤ 4")
    assert phi == TimeUntil(Event("P", "Q", Compare(1, "!=", 1)), "<=", 4)


def test_unbound_and_negative_bounds():
    with pytest.raises(ScopeSyntaxError):
        parse("time_until (P, Q, m[1] = 1) < theta")
    with pytest.raises(ScopeSyntaxError):
        parse("time_until (P, Q, m[1] = 1) < -1")


def test_unknown_process_and_channel():
    with pytest.raises(ScopeSyntaxError) as info:
        parse("always (P, Ghost, m[1] = 1)", processes=["P", "Q"])
    assert "Ghost" in str(info.value)
    with pytest.raises(ScopeSyntaxError):
        parse("(P, P, m[1] = 1)")


def test_nested_implies_in_condition_rejected():
    with pytest.raises(ScopeSyntaxError):
        parse("(P, Q, not (m[1] = 1 implies m[2] = 2))")


def test_syntax_error_position():
    with pytest.raises(ScopeSyntaxError) as info:
        parse("always (P, Q, m[1] = )")
    assert info.value.line == 1


def test_property_file_with_params(default_properties):
    properties = load_properties(default_properties)
    assert [p.name for p in properties] == ["phi1", "phi2"]
    response = properties[1].formula.operand.right.operand.right
    assert isinstance(response, TimeUntil)
    assert response.bound == 100
    overridden = load_properties(default_properties, {"theta": 7})
    assert overridden[1].formula.operand.right.operand.right.bound == 7
    assert properties[0].text.startswith("always (BatteryReader")


def test_duplicate_property_names():
    with pytest.raises(ScopeSyntaxError):
        load_properties("p: true;\np: false;\n")


# Printer round trips

PROCESSES = ["A", "B", "C"]


def _condition(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.4:
        const = rng.choice([rng.randint(-5, 50), Symbol(rng.choice(["ok", "running", "tick"])), rng.random() < 0.5])
        return Compare(rng.randint(1, 3), rng.choice(["<", ">", "<=", ">=", "=", "!="]), const)
    kind = rng.choice(["not", "and", "or"])
    if kind == "not":
        return CondNot(_condition(rng, depth - 1))
    cls = CondAnd if kind == "and" else CondOr
    return cls(_condition(rng, depth - 1), _condition(rng, depth - 1))


def _event(rng: random.Random) -> Event:
    source, dest = rng.sample(PROCESSES, 2)
    return Event(source, dest, _condition(rng, 2))


def _formula(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        choice = rng.random()
        if choice < 0.1:
            return TRUE
        if choice < 0.2:
            return FALSE
        if choice < 0.4:
            return TimeUntil(_event(rng), rng.choice(["<", "<=", "=", ">", ">="]), rng.randint(0, 20))
        return _event(rng)
    kind = rng.choice(["not", "and", "or", "next", "until", "always", "eventually", "implies"])
    if kind == "not":
        return Not(_formula(rng, depth - 1))
    if kind == "next":
        return Next(_formula(rng, depth - 1))
    if kind == "always":
        return always(_formula(rng, depth - 1))
    if kind == "eventually":
        return eventually(_formula(rng, depth - 1))
    left, right = _formula(rng, depth - 1), _formula(rng, depth - 1)
    return {"and": And, "or": Or, "until": Until, "implies": implies}[kind](left, right)


def test_print_parse_round_trip():
    rng = random.Random(7)
    for _ in range(1000):
        phi = _formula(rng, 6)
        text = format_formula(phi)
        assert parse(text) == phi, text
        assert parse(format_formula(phi, abbreviate=False)) == phi


def test_deeply_nested_formulas():
    event = Event("A", "B", Compare(1, "=", OK))
    phi = event
    for _ in range(8):
        phi = always(implies(event, phi))
    text = format_formula(phi, abbreviate=False)
    assert text.count("(") > 30
    assert parse(text) == phi
    assert parse(format_formula(phi)) == phi

    negated = event
    for _ in range(60):
        negated = Not(negated)
    assert parse("not (" * 60 + "(A, B, m[1] = <ok>)" + ")" * 60) == negated
