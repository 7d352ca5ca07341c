"""
Guard and effect expressions

Expressions are immutable trees evaluated against a variable lookup
(a mapping from variable name to value).
"""

from dataclasses import dataclass
from typing import FrozenSet, Mapping, Tuple

from btrv.errors import EvaluationError
from btrv.values import MISSING, Symbol, format_value, is_int, is_part

RELOPS = ("<", ">", "<=", ">=", "=", "!=")
ARITH = ("+", "-", "*")
LOGIC = ("and", "or")

RELOP_ALIASES = {"≤": "<=", "≥": ">=", "≠": "!=", "==": "="}


def normalize_relop(op: str) -> str:
    return RELOP_ALIASES.get(op, op)


def strict_equal(a, b) -> bool:
    """Equality that keeps bools, ints and symbols apart"""
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(strict_equal(x, y) for x, y in zip(a, b))
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if is_int(a) and is_int(b):
        return a == b
    if isinstance(a, Symbol) and isinstance(b, Symbol):
        return a == b
    return a is None and b is None


def compare(op: str, a, b) -> bool:
    """Apply a relational operator; anything involving a missing part is false"""
    op = normalize_relop(op)
    if a is MISSING or b is MISSING:
        return False
    if op == "=":
        return strict_equal(a, b)
    if op == "!=":
        return not strict_equal(a, b)
    if not (is_int(a) and is_int(b)):
        return False
    if op == "<":
        return a < b
    if op == ">":
        return a > b
    if op == "<=":
        return a <= b
    if op == ">=":
        return a >= b
    raise EvaluationError(f"unknown relational operator '{op}'")


class Expr:
    """Base class for expressions"""

    def evaluate(self, env: Mapping):
        raise NotImplementedError

    def variables(self) -> FrozenSet[str]:
        return frozenset()

    def text(self) -> str:
        raise NotImplementedError

    def is_atomic(self) -> bool:
        return True

    def __str__(self):
        return self.text()


def _wrap(expr: Expr) -> str:
    return expr.text() if expr.is_atomic() else f"({expr.text()})"


@dataclass(frozen=True)
class Const(Expr):
    value: object

    def evaluate(self, env):
        return self.value

    def text(self):
        return format_value(self.value)


TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def evaluate(self, env):
        try:
            return env[self.name]
        except KeyError:
            raise EvaluationError(f"unknown variable '{self.name}'") from None

    def variables(self):
        return frozenset({self.name})

    def text(self):
        return self.name


@dataclass(frozen=True)
class Index(Expr):
    """1-based message indexing; past the end yields MISSING"""
    base: Expr
    position: int

    def evaluate(self, env):
        value = self.base.evaluate(env)
        if value is None or value is MISSING:
            return MISSING
        if not isinstance(value, tuple):
            raise EvaluationError(f"cannot index non-message {format_value(value)} in {self.text()}")
        if 1 <= self.position <= len(value):
            return value[self.position - 1]
        return MISSING

    def variables(self):
        return self.base.variables()

    def text(self):
        return f"{_wrap(self.base)}[{self.position}]"


@dataclass(frozen=True)
class MessageTemplate(Expr):
    """Message literal whose parts may be computed"""
    parts: Tuple[Expr, ...]

    def evaluate(self, env):
        values = []
        for part in self.parts:
            value = part.evaluate(env)
            if not is_part(value):
                raise EvaluationError(f"message part {part.text()} evaluated to {format_value(value)}")
            values.append(value)
        return tuple(values)

    def variables(self):
        result = frozenset()
        for part in self.parts:
            result |= part.variables()
        return result

    def is_constant(self) -> bool:
        return all(isinstance(p, Const) for p in self.parts)

    def text(self):
        return "[" + ", ".join(p.text() for p in self.parts) + "]"


@dataclass(frozen=True)
class Not(Expr):
    operand: Expr

    def evaluate(self, env):
        value = self.operand.evaluate(env)
        if not isinstance(value, bool):
            raise EvaluationError(f"'not' applied to non-boolean in {self.text()}")
        return not value

    def variables(self):
        return self.operand.variables()

    def is_atomic(self):
        return False

    def text(self):
        return f"not {_wrap(self.operand)}"


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr

    def evaluate(self, env):
        value = self.operand.evaluate(env)
        if not is_int(value):
            raise EvaluationError(f"unary minus applied to non-integer in {self.text()}")
        return -value

    def variables(self):
        return self.operand.variables()

    def is_atomic(self):
        return False

    def text(self):
        return f"-{_wrap(self.operand)}"


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def evaluate(self, env):
        if self.op in LOGIC:
            left = self._boolean(self.left.evaluate(env))
            if self.op == "and" and not left:
                return False
            if self.op == "or" and left:
                return True
            return self._boolean(self.right.evaluate(env))
        left = self.left.evaluate(env)
        right = self.right.evaluate(env)
        if self.op in ARITH:
            if not (is_int(left) and is_int(right)):
                raise EvaluationError(f"arithmetic on non-integers in {self.text()}")
            if self.op == "+":
                return left + right
            if self.op == "-":
                return left - right
            return left * right
        return compare(self.op, left, right)

    def _boolean(self, value):
        if not isinstance(value, bool):
            raise EvaluationError(f"'{self.op}' applied to non-boolean in {self.text()}")
        return value

    def variables(self):
        return self.left.variables() | self.right.variables()

    def is_atomic(self):
        return False

    def text(self):
        return f"{_wrap(self.left)} {self.op} {_wrap(self.right)}"


def conjunction(*exprs: Expr) -> Expr:
    result = None
    for expr in exprs:
        if expr is None or expr == TRUE:
            continue
        result = expr if result is None else BinOp("and", result, expr)
    return result if result is not None else TRUE


def eval_guard(guard: Expr, env: Mapping) -> bool:
    value = guard.evaluate(env)
    if not isinstance(value, bool):
        raise EvaluationError(f"guard {guard.text()} evaluated to non-boolean {format_value(value)}")
    return value
