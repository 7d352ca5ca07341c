"""
Tests for the three-valued SCOPE evaluator
"""

import itertools
import random

import pytest

from btrv.diagnostics import DiagnosticLog, IssueType
from btrv.errors import ContractViolation
from btrv.program_graph import ChannelId
from btrv.scope_eval import Verdict, earliest_violation, evaluate, evaluate_all
from btrv.scope_parser import parse
from btrv.tss import TimedStateSequence
from btrv.values import msg

AB = ChannelId("A", "B")
CD = ChannelId("C", "D")


def make_trace(entries, progressive=True):
    """entries: (tick, {channel: message})"""
    tss = TimedStateSequence((AB, CD), [], progressive)
    for tick, state in entries:
        tss.append(state, tick)
    return tss


def levels(*values, progressive=True):
    return make_trace([(i, {AB: msg("ok", v)}) for i, v in enumerate(values)], progressive)


def test_event_reads_the_current_state():
    rho = levels(25, 15)
    assert evaluate(parse("(A, B, m[2] > 20)"), rho, 0) is Verdict.TRUE
    assert evaluate(parse("(A, B, m[2] > 20)"), rho, 1) is Verdict.FALSE
    assert evaluate(parse("(C, D, m[1] = <ok>)"), rho, 0) is Verdict.FALSE


def test_always_is_inconclusive_on_unfinished_traces():
    phi = parse("always (A, B, m[1] = <ok> implies m[2] >= 20)")
    assert evaluate(phi, levels(25, 30, 40)) is Verdict.INCONCLUSIVE
    assert evaluate(phi, levels(25, 30, 40, progressive=False)) is Verdict.TRUE
    assert evaluate(phi, levels(25, 10, 40)) is Verdict.FALSE


def test_eventually_and_next_at_the_end():
    phi = parse("eventually (A, B, m[2] = 99)")
    assert evaluate(phi, levels(1, 2)) is Verdict.INCONCLUSIVE
    assert evaluate(phi, levels(1, 2, progressive=False)) is Verdict.FALSE
    assert evaluate(phi, levels(1, 99)) is Verdict.TRUE
    assert evaluate(parse("next true"), levels(1), 0) is Verdict.INCONCLUSIVE
    assert evaluate(parse("next true"), levels(1, progressive=False), 0) is Verdict.FALSE


def test_time_until_measures_tick_distance():
    rho = make_trace([(0, {}), (1, {}), (3, {CD: msg("fix")})])
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) < 4"), rho) is Verdict.TRUE
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) < 3"), rho) is Verdict.FALSE
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) = 3"), rho) is Verdict.TRUE
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) >= 2"), rho, 1) is Verdict.TRUE


def test_time_until_without_response():
    rho = make_trace([(0, {}), (1, {}), (3, {})])
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) < 5"), rho) is Verdict.INCONCLUSIVE
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) < 3"), rho) is Verdict.FALSE
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) > 1"), rho) is Verdict.INCONCLUSIVE
    closed = make_trace([(0, {}), (1, {}), (3, {})], progressive=False)
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) < 5"), closed) is Verdict.FALSE


def test_response_property_over_a_trace():
    phi = parse("always ((A, B, m[1] = <alarm>) implies time_until (C, D, m[1] = <fix>) < 3)")
    answered = make_trace([(0, {AB: msg("alarm")}), (1, {}), (2, {CD: msg("fix")}), (9, {})])
    late = make_trace([(0, {AB: msg("alarm")}), (1, {}), (3, {CD: msg("fix")})])
    assert evaluate(phi, answered) is Verdict.INCONCLUSIVE
    assert evaluate(phi, answered.closed()) is Verdict.TRUE
    assert evaluate(phi, late) is Verdict.FALSE


def test_earliest_violation_position():
    phi = parse("always (A, B, m[1] = <ok> implies m[2] >= 20)")
    assert earliest_violation(phi, levels(25, 30, 15, 40)) == 2
    assert earliest_violation(phi, levels(5)) == 0
    assert earliest_violation(phi, levels(25, 30)) is None


def test_earliest_violation_of_closed_trace_refuted_by_its_end():
    phi = parse("eventually (A, B, m[2] = 99)")
    rho = levels(1, 2, 3, progressive=False)
    assert earliest_violation(phi, rho) == len(rho)


def test_evaluate_all_and_position_contract():
    phi = parse("(A, B, m[2] > 20)")
    assert evaluate_all(phi, levels(25, 15)) == [Verdict.TRUE, Verdict.FALSE]
    assert evaluate(parse("always (A, B, m[2] > 20)"), levels()) is Verdict.INCONCLUSIVE
    with pytest.raises(ContractViolation):
        evaluate(phi, levels(25), 1)


def test_missing_part_is_recorded():
    log = DiagnosticLog()
    rho = make_trace([(0, {AB: msg("ok")})])
    assert evaluate(parse("(A, B, m[2] > 1)"), rho, 0, log) is Verdict.FALSE
    assert log.counts() == {IssueType.MISSING_MESSAGE_PART.value: 1}


# Laws checked by enumeration and on random formulas

STATES = ({}, {AB: msg("ok")}, {AB: msg("bad")})
OK_EVENT = "(A, B, m[1] = <ok>)"


def all_short_traces(max_length=6):
    for length in range(max_length + 1):
        for states in itertools.product(STATES, repeat=length):
            yield [(i, state) for i, state in enumerate(states)]


def _expected(found_from, i, progressive, when_found, otherwise):
    if found_from(i):
        return when_found
    return Verdict.INCONCLUSIVE if progressive else otherwise


def test_eventually_and_always_against_enumeration():
    eventually_ok = parse(f"eventually {OK_EVENT}")
    always_ok = parse(f"always {OK_EVENT}")
    for entries in all_short_traces():
        ok = [state.get(AB) == msg("ok") for _, state in entries]
        n = len(ok)
        for progressive in (True, False):
            rho = make_trace(entries, progressive)
            positions = range(n) if n else ([0] if progressive else [])
            for i in positions:
                expected = _expected(lambda j: any(ok[j:]), i, progressive, Verdict.TRUE, Verdict.FALSE)
                assert evaluate(eventually_ok, rho, i) is expected, (entries, progressive, i)
                expected = _expected(lambda j: not all(ok[j:]), i, progressive, Verdict.FALSE, Verdict.TRUE)
                assert evaluate(always_ok, rho, i) is expected, (entries, progressive, i)


def test_derived_operators_unfold():
    assert parse(f"eventually {OK_EVENT}") == parse(f"true until {OK_EVENT}")
    assert parse(f"always {OK_EVENT}") == parse(f"not (true until (not {OK_EVENT}))")
    assert parse(f"always {OK_EVENT}") == parse(f"not eventually not {OK_EVENT}")
    rho = make_trace([(0, {}), (1, {AB: msg("bad")}), (1, {AB: msg("ok")})], progressive=False)
    for text in (f"eventually {OK_EVENT}", f"always {OK_EVENT}"):
        phi = parse(text)
        dual = parse(f"not eventually not {OK_EVENT}") if text.startswith("always") else \
            parse(f"true until {OK_EVENT}")
        assert evaluate_all(phi, rho) == evaluate_all(dual, rho)


def test_negative_deadline_is_never_met():
    rho = make_trace([(0, {CD: msg("fix")}), (0, {}), (2, {CD: msg("fix")}), (3, {})])
    assert evaluate_all(parse("time_until (C, D, m[1] = <fix>) < 0"), rho) == [Verdict.FALSE] * 4
    assert evaluate_all(parse("time_until (C, D, m[1] = <fix>) <= 0"), rho) == [
        Verdict.TRUE, Verdict.FALSE, Verdict.TRUE, Verdict.INCONCLUSIVE]
    assert evaluate(parse("time_until (C, D, m[1] = <fix>) < 0"), rho.closed(), 3) is Verdict.FALSE


def _random_formula(rng: random.Random, depth: int) -> str:
    atoms = [OK_EVENT, "(A, B, m[1] = <bad>)", "(C, D, m[1] = <fix>)", "true",
             f"time_until (C, D, m[1] = <fix>) {rng.choice(['<', '<=', '=', '>'])} {rng.randint(0, 2)}"]
    if depth == 0 or rng.random() < 0.3:
        return rng.choice(atoms)
    op = rng.choice(["not", "next", "eventually", "always", "and", "or", "until"])
    left = _random_formula(rng, depth - 1)
    if op in ("not", "next", "eventually", "always"):
        return f"{op} ({left})"
    return f"({left}) {op} ({_random_formula(rng, depth - 1)})"


def test_conclusive_verdicts_survive_longer_traces():
    rng = random.Random(77)
    states = STATES + ({CD: msg("fix")}, {AB: msg("ok"), CD: msg("fix")})
    for _ in range(300):
        phi = parse(_random_formula(rng, 3))
        tick, entries = 0, []
        for _ in range(rng.randint(0, 8)):
            tick += rng.choice([0, 0, 1, 2]) if entries else 0
            entries.append((tick, rng.choice(states)))
        rho = make_trace(entries)
        verdicts = [evaluate(phi, rho.prefix(k, progressive=True)) for k in range(len(rho) + 1)]
        final = evaluate(phi, rho.closed())
        for k, verdict in enumerate(verdicts):
            if verdict is Verdict.INCONCLUSIVE:
                continue
            assert all(later is verdict for later in verdicts[k:]), (phi, entries, k)
            assert final is verdict, (phi, entries, k)
