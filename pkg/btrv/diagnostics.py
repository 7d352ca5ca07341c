"""
Logging setup and diagnostic records

Soft problems found while running a system (a leaf receiving a reply it
cannot map, a condition reading a message part that is not there) are
collected as Diagnostic entries instead of being raised.
"""

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional

LOG_ENV_VAR = "BTRV_LOG"
DEFAULT_LOG_LEVEL = "WARNING"
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class EnumEncoder(json.JSONEncoder):
    """Custom JSON encoder that handles enum values"""
    def default(self, obj):
        if isinstance(obj, Enum):
            return obj.value
        return super().default(obj)


class IssueType(Enum):
    """Kinds of soft problems recorded during a run"""
    UNMAPPED_REPLY = "unmapped_reply"
    MISSING_MESSAGE_PART = "missing_message_part"
    DEADLOCK = "deadlock"
    MONITOR_VIOLATION = "monitor_violation"
    NOT_MONITORABLE = "not_monitorable"


class IssueSeverity(Enum):
    """Severity levels for issues"""
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


@dataclass
class Diagnostic:
    """Individual diagnostic entry"""
    issue_type: IssueType
    severity: IssueSeverity
    description: str
    location: str
    raw_content: Optional[str] = None
    timestamp: str = None

    def __post_init__(self):
        if self.timestamp is None:
            self.timestamp = datetime.now().isoformat()


class DiagnosticLog:
    """Accumulates diagnostics for one run"""

    def __init__(self):
        self.entries: List[Diagnostic] = []
        self.logger = logging.getLogger(__name__)

    def record(self, issue_type: IssueType, severity: IssueSeverity, description: str,
               location: str, raw_content: Optional[str] = None) -> Diagnostic:
        entry = Diagnostic(issue_type, severity, description, location, raw_content)
        self.entries.append(entry)
        self.logger.debug(f"{issue_type.value} at {location}: {description}")
        return entry

    def counts(self) -> Dict[str, int]:
        """Breakdown of entries by issue type, most frequent first"""
        counter = Counter(e.issue_type.value for e in self.entries)
        return dict(sorted(counter.items(), key=lambda x: x[1], reverse=True))

    def __len__(self):
        return len(self.entries)


def resolve_log_level(value: Optional[str]) -> int:
    if not value:
        return getattr(logging, DEFAULT_LOG_LEVEL)
    level = logging.getLevelName(value.strip().upper())
    if isinstance(level, int):
        return level
    logging.getLogger(__name__).warning(f"Unknown {LOG_ENV_VAR} value '{value}', using {DEFAULT_LOG_LEVEL}")
    return getattr(logging, DEFAULT_LOG_LEVEL)


def setup_logging(log_file: Optional[str] = None, level: Optional[str] = None) -> logging.Logger:
    """Configure logging for command-line use; level defaults to $BTRV_LOG"""
    handlers: List[logging.Handler] = [logging.StreamHandler()]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(
        level=resolve_log_level(level or os.getenv(LOG_ENV_VAR)),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
    return logging.getLogger("btrv")
