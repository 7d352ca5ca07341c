"""
Three-valued evaluation of SCOPE formulas over timed state sequences

Every subformula is evaluated as a vector over positions 0..n, where n is
one past the last entry. Position n stands for the unknown continuation of
a progressive trace (inconclusive) or the end of a closed trace (false).
"""

import logging
from enum import Enum
from typing import Dict, List, Optional

from btrv.diagnostics import DiagnosticLog
from btrv.errors import ContractViolation
from btrv.expressions import compare
from btrv.program_graph import ChannelId
from btrv.scope_ast import And, Event, Formula, Next, Not, Or, TimeUntil, TrueFormula, Until
from btrv.tss import TimedStateSequence

logger = logging.getLogger(__name__)

F, I, T = 0, 1, 2


class Verdict(str, Enum):
    TRUE = "true"
    FALSE = "false"
    INCONCLUSIVE = "inconclusive"


_TO_VERDICT = {F: Verdict.FALSE, I: Verdict.INCONCLUSIVE, T: Verdict.TRUE}

# `time_until` relops that are already decided false once the window has
# passed without the event: (relop, d_last, bound) -> bool
_EXHAUSTED = {
    "<": lambda d, b: d >= b,
    "<=": lambda d, b: d > b,
    "=": lambda d, b: d > b,
}


def event_holds(event: Event, state, diagnostics: Optional[DiagnosticLog] = None) -> bool:
    """True iff the event's channel shows a message satisfying its condition"""
    message = state.get(event.channel)
    if message is None:
        return False
    return event.cond.holds(message, diagnostics)


class _Evaluator:

    def __init__(self, rho: TimedStateSequence, diagnostics: Optional[DiagnosticLog] = None):
        self.rho = rho
        self.n = len(rho)
        self.end = I if rho.progressive else F
        self.diagnostics = diagnostics
        self.memo: Dict[Formula, List[int]] = {}
        self.events: Dict[Event, List[bool]] = {}

    def vector(self, phi: Formula) -> List[int]:
        cached = self.memo.get(phi)
        if cached is None:
            cached = self._compute(phi)
            self.memo[phi] = cached
        return cached

    def _event_vector(self, event: Event) -> List[bool]:
        cached = self.events.get(event)
        if cached is None:
            cached = [event_holds(event, entry.state, self.diagnostics) for entry in self.rho]
            self.events[event] = cached
        return cached

    def _compute(self, phi: Formula) -> List[int]:
        n = self.n
        if isinstance(phi, TrueFormula):
            return [T] * n + [self.end]
        if isinstance(phi, Event):
            return [T if h else F for h in self._event_vector(phi)] + [self.end]
        if isinstance(phi, Not):
            sub = self.vector(phi.operand)
            return [T - v for v in sub[:n]] + [self.end]
        if isinstance(phi, And):
            a, b = self.vector(phi.left), self.vector(phi.right)
            return [min(x, y) for x, y in zip(a[:n], b[:n])] + [self.end]
        if isinstance(phi, Or):
            a, b = self.vector(phi.left), self.vector(phi.right)
            return [max(x, y) for x, y in zip(a[:n], b[:n])] + [self.end]
        if isinstance(phi, Next):
            sub = self.vector(phi.operand)
            return sub[1:n + 1] + [self.end]
        if isinstance(phi, Until):
            a, b = self.vector(phi.left), self.vector(phi.right)
            out = [F] * n + [self.end]
            for i in range(n - 1, -1, -1):
                out[i] = max(b[i], min(a[i], out[i + 1]))
            return out
        if isinstance(phi, TimeUntil):
            return self._time_until(phi)
        raise ContractViolation(f"cannot evaluate {phi!r}")

    def _time_until(self, phi: TimeUntil) -> List[int]:
        n = self.n
        holds = self._event_vector(phi.event)
        ticks = [entry.tick for entry in self.rho]
        out = [F] * n + [self.end]
        first = None
        exhausted = _EXHAUSTED.get(phi.relop)
        for i in range(n - 1, -1, -1):
            if holds[i]:
                first = i
            if first is not None:
                out[i] = T if compare(phi.relop, ticks[first] - ticks[i], phi.bound) else F
            elif self.end == F:
                out[i] = F
            elif exhausted is not None and exhausted(ticks[-1] - ticks[i], phi.bound):
                out[i] = F
            else:
                out[i] = I
        return out


def evaluate(phi: Formula, rho: TimedStateSequence, i: int = 0,
             diagnostics: Optional[DiagnosticLog] = None) -> Verdict:
    """Verdict of phi at position i of the (possibly unfinished) trace"""
    if not 0 <= i <= len(rho) or (i == len(rho) and len(rho) > 0):
        raise ContractViolation(f"position {i} outside a trace of length {len(rho)}")
    return _TO_VERDICT[_Evaluator(rho, diagnostics).vector(phi)[i]]


def evaluate_all(phi: Formula, rho: TimedStateSequence,
                 diagnostics: Optional[DiagnosticLog] = None) -> List[Verdict]:
    """Verdicts at every position of the trace"""
    vector = _Evaluator(rho, diagnostics).vector(phi)
    return [_TO_VERDICT[v] for v in vector[:len(rho)]]


def earliest_violation(phi: Formula, rho: TimedStateSequence) -> Optional[int]:
    """Index of the entry at which phi first becomes false at position 0

    Prefixes are judged as unfinished traces. For a closed trace that is
    only refuted by its end, the result is len(rho).
    """
    n = len(rho)
    if evaluate(phi, rho.prefix(n, progressive=True)) is not Verdict.FALSE:
        if not rho.progressive and n and evaluate(phi, rho) is Verdict.FALSE:
            return n
        return None
    lo, hi = 1, n
    while lo < hi:
        mid = (lo + hi) // 2
        if evaluate(phi, rho.prefix(mid, progressive=True)) is Verdict.FALSE:
            hi = mid
        else:
            lo = mid + 1
    return lo - 1


def channels_of(phi: Formula) -> List[ChannelId]:
    seen: List[ChannelId] = []
    for event in phi.events():
        if event.channel not in seen:
            seen.append(event.channel)
    return seen
