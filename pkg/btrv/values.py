"""
Runtime values, messages and variable domains

A message is a non-empty tuple of parts; each part is an int, a bool or a
Symbol. Message indexing is 1-based in guards (m[1] is the first part).
"""

from dataclasses import dataclass
from typing import FrozenSet, Iterable, Optional, Tuple, Union

from btrv.errors import DomainError


@dataclass(frozen=True, order=True)
class Symbol:
    """Symbolic tag, printed as <name>"""
    name: str

    def __str__(self):
        return f"<{self.name}>"


class _Missing:
    """Result of indexing past the end of a message; never equal to anything"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MISSING"

    def __bool__(self):
        return False


MISSING = _Missing()

Part = Union[int, bool, Symbol]
Message = Tuple[Part, ...]
Value = Union[int, bool, Symbol, Message, None]


def sym(name: str) -> Symbol:
    return Symbol(name)


def msg(*parts) -> Message:
    """Build a message; str parts become symbols"""
    if not parts:
        raise DomainError("a message has at least one part")
    return tuple(Symbol(p) if isinstance(p, str) else p for p in parts)


def is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def is_part(value) -> bool:
    return isinstance(value, (int, bool, Symbol))


def is_message(value) -> bool:
    return isinstance(value, tuple) and len(value) > 0 and all(is_part(p) for p in value)


def format_value(value) -> str:
    if value is None:
        return "none"
    if value is MISSING:
        return "missing"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return "[" + ", ".join(format_value(p) for p in value) + "]"
    return str(value)


def encode_part(part):
    """JSON form of a message part (symbols become '<name>' strings)"""
    if isinstance(part, Symbol):
        return str(part)
    return part


def decode_part(raw):
    if isinstance(raw, str):
        if len(raw) >= 3 and raw.startswith("<") and raw.endswith(">"):
            return Symbol(raw[1:-1])
        raise DomainError(f"cannot decode message part {raw!r}")
    if isinstance(raw, (bool, int)):
        return raw
    raise DomainError(f"cannot decode message part {raw!r}")


def encode_message(message: Message) -> list:
    return [encode_part(p) for p in message]


def decode_message(raw: Iterable) -> Message:
    parts = tuple(decode_part(p) for p in raw)
    if not parts:
        raise DomainError("empty message")
    return parts


class Domain:
    """Declared set of admissible values for a variable"""

    def contains(self, value) -> bool:
        raise NotImplementedError

    def default(self):
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    def check(self, name: str, value):
        if not self.contains(value):
            raise DomainError(f"value {format_value(value)} outside domain {self.text()} of '{name}'")
        return value

    def __str__(self):
        return self.text()


@dataclass(frozen=True)
class IntDomain(Domain):
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty integer range {self.lo}..{self.hi}")

    def contains(self, value) -> bool:
        return is_int(value) and self.lo <= value <= self.hi

    def default(self):
        return self.lo if self.lo > 0 or self.hi < 0 else 0

    def text(self) -> str:
        return f"int[{self.lo}..{self.hi}]"


@dataclass(frozen=True)
class BoolDomain(Domain):

    def contains(self, value) -> bool:
        return isinstance(value, bool)

    def default(self):
        return False

    def text(self) -> str:
        return "bool"


@dataclass(frozen=True)
class SymbolDomain(Domain):
    names: FrozenSet[str]

    def contains(self, value) -> bool:
        return isinstance(value, Symbol) and value.name in self.names

    def default(self):
        return Symbol(sorted(self.names)[0])

    def text(self) -> str:
        return "sym{" + ", ".join(sorted(self.names)) + "}"


@dataclass(frozen=True)
class MessageDomain(Domain):

    def contains(self, value) -> bool:
        return value is None or is_message(value)

    def default(self):
        return None

    def text(self) -> str:
        return "msg"


BOOL = BoolDomain()
MSG = MessageDomain()


def symbols(*names: str) -> SymbolDomain:
    return SymbolDomain(frozenset(names))


def domain_for(value) -> Optional[Domain]:
    """Smallest sensible domain holding a literal value"""
    if isinstance(value, bool):
        return BOOL
    if is_int(value):
        return IntDomain(value, value)
    if isinstance(value, Symbol):
        return symbols(value.name)
    if value is None or is_message(value):
        return MSG
    return None
