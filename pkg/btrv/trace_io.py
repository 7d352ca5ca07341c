"""
Trace files

Line-delimited JSON. The header line names the format, version, whether the
trace is progressive and the observed channels. Each entry line holds the
changes against the previous entry: `set` for channels whose message changed,
`clear` for channels that became empty. Violation lines carry the monitor
events of an online run. Keys are sorted so identical runs give identical
files.
"""

import json
import logging
from pathlib import Path
from typing import IO, Dict, Iterable, List, Optional, Tuple, Union

from btrv.engine import MonitorEvent
from btrv.errors import BtrvError, TraceFormatError
from btrv.expressions import strict_equal
from btrv.program_graph import ChannelId
from btrv.tss import TimedStateSequence
from btrv.values import Message, decode_message, encode_message

logger = logging.getLogger(__name__)

TRACE_FORMAT = "btrv-trace"
TRACE_VERSION = 1


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def violation_record(event: MonitorEvent) -> Dict[str, object]:
    return {
        "monitor": event.monitor,
        "location": event.location,
        "step": event.step,
        "position": event.position,
        "tick": event.tick,
        "channel": str(event.channel) if event.channel else None,
        "message": encode_message(event.message) if event.message is not None else None,
    }


def trace_lines(tss: TimedStateSequence, violations: Iterable[MonitorEvent] = ()) -> List[str]:
    lines = [_dumps({
        "format": TRACE_FORMAT,
        "version": TRACE_VERSION,
        "progressive": tss.progressive,
        "channels": [str(c) for c in tss.channels],
    })]
    previous: Dict[ChannelId, Message] = {}
    for pos, entry in enumerate(tss):
        changed = {str(c): encode_message(m) for c, m in entry.state.items()
                   if c not in previous or not strict_equal(previous[c], m)}
        cleared = sorted(str(c) for c in previous if c not in entry.state)
        lines.append(_dumps({"pos": pos, "tick": entry.tick, "set": changed, "clear": cleared}))
        previous = dict(entry.state)
    for event in violations:
        lines.append(_dumps({"violation": violation_record(event)}))
    return lines


def write_trace(tss: TimedStateSequence, target: Union[str, Path, IO[str]],
                violations: Iterable[MonitorEvent] = ()):
    """Write a trace to a path or an open text stream"""
    lines = trace_lines(tss, violations)
    if hasattr(target, "write"):
        target.write("\n".join(lines) + "\n")
        return
    path = Path(target)
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot write trace {path}: {e}")
        raise
    logger.info(f"Wrote {len(tss)} trace entries to {path}")


def _channel(raw, line: int) -> ChannelId:
    if not isinstance(raw, str):
        raise TraceFormatError(f"channel must be a string, got {raw!r}", line)
    try:
        return ChannelId.parse(raw)
    except BtrvError as e:
        raise TraceFormatError(str(e), line) from None


def parse_trace(lines: Iterable[str]) -> Tuple[TimedStateSequence, List[Dict[str, object]]]:
    """Rebuild the timed state sequence and the violation records"""
    tss: Optional[TimedStateSequence] = None
    violations: List[Dict[str, object]] = []
    state: Dict[ChannelId, Message] = {}
    for number, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"invalid JSON: {e.msg}", number) from None
        if not isinstance(record, dict):
            raise TraceFormatError("each line must be a JSON object", number)

        if tss is None:
            if record.get("format") != TRACE_FORMAT:
                raise TraceFormatError(f"not a {TRACE_FORMAT} file", number)
            if record.get("version") != TRACE_VERSION:
                raise TraceFormatError(f"unsupported version {record.get('version')!r}", number)
            channels = tuple(_channel(c, number) for c in record.get("channels", []))
            tss = TimedStateSequence(channels, [], bool(record.get("progressive", True)))
            continue

        if "violation" in record:
            violations.append(record["violation"])
            continue
        if record.get("pos") != len(tss):
            raise TraceFormatError(f"expected position {len(tss)}, got {record.get('pos')!r}", number)
        tick = record.get("tick")
        if not isinstance(tick, int) or isinstance(tick, bool):
            raise TraceFormatError("tick must be an integer", number)
        for name in record.get("clear", []):
            state.pop(_channel(name, number), None)
        for name, parts in record.get("set", {}).items():
            channel = _channel(name, number)
            if tss.channels and channel not in tss.channels:
                raise TraceFormatError(f"channel {channel} is not declared in the header", number)
            try:
                state[channel] = decode_message(parts)
            except BtrvError as e:
                raise TraceFormatError(str(e), number) from None
        try:
            tss.append(state, tick)
        except BtrvError as e:
            raise TraceFormatError(str(e), number) from None

    if tss is None:
        raise TraceFormatError("missing header", 1)
    logger.debug(f"Read trace with {len(tss)} entries and {len(violations)} violations")
    return tss, violations


def read_trace(path: Union[str, Path]) -> Tuple[TimedStateSequence, List[Dict[str, object]]]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise TraceFormatError(f"cannot read {path}: {e}", 0) from e
    except UnicodeDecodeError as e:
        raise TraceFormatError(f"{path} is not UTF-8 text: {e.reason} at byte {e.start}", 0) from None
    return parse_trace(text.splitlines())
