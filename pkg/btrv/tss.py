"""
Timed state sequences

A state maps each buffered channel to the message it currently shows
(absent channels are empty). Tick identifiers start at 0 and never decrease.
"""

from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

from btrv.errors import ContractViolation
from btrv.program_graph import ChannelId
from btrv.values import Message


@dataclass(frozen=True)
class TssEntry:
    state: Mapping[ChannelId, Message]
    tick: int

    def message(self, channel: ChannelId) -> Optional[Message]:
        return self.state.get(channel)


@dataclass
class TimedStateSequence:
    channels: Tuple[ChannelId, ...] = ()
    entries: List[TssEntry] = field(default_factory=list)
    progressive: bool = True

    def append(self, state: Mapping[ChannelId, Message], tick: int) -> int:
        if self.entries and tick < self.entries[-1].tick:
            raise ContractViolation(f"tick identifiers must not decrease ({self.entries[-1].tick} -> {tick})")
        if not self.entries and tick != 0:
            raise ContractViolation(f"tick identifiers start at 0, got {tick} for the first entry")
        self.entries.append(TssEntry(dict(state), tick))
        return len(self.entries) - 1

    def prefix(self, length: int, progressive: Optional[bool] = None) -> "TimedStateSequence":
        return TimedStateSequence(self.channels, self.entries[:length],
                                  self.progressive if progressive is None else progressive)

    def closed(self) -> "TimedStateSequence":
        return TimedStateSequence(self.channels, list(self.entries), False)

    def __len__(self):
        return len(self.entries)

    def __iter__(self) -> Iterator[TssEntry]:
        return iter(self.entries)

    def __getitem__(self, index) -> TssEntry:
        return self.entries[index]


def state_of(buffers: Dict[ChannelId, Optional[Message]]) -> Dict[ChannelId, Message]:
    return {cid: m for cid, m in buffers.items() if m is not None}
