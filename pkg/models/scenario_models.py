"""
Pydantic models for scenario configuration and run reports
"""

import json
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from btrv.errors import ScenarioBuildError

DEFAULT_MAP = [
    "##############",
    "#@..........D#",
    "#.##########.#",
    "#R...........#",
    "##############",
]


class SchedulerKind(str, Enum):
    random = "random"
    round_robin = "round_robin"


class ForceBatteryLevel(BaseModel):
    """Battery reader reports a fixed level from a tick on"""
    kind: Literal["force_battery_level"] = "force_battery_level"
    value: int = Field(ge=0, le=100)
    at_tick: int = Field(ge=0)


class SkillThresholdBug(BaseModel):
    """A threshold skill compares against the wrong level"""
    kind: Literal["skill_threshold_bug"] = "skill_threshold_bug"
    skill: str
    wrong_threshold: int = Field(ge=0, le=100)


class OverrideNavigation(BaseModel):
    """Robot motion is frozen for ticks from_tick .. to_tick - 1"""
    kind: Literal["override_navigation"] = "override_navigation"
    from_tick: int = Field(ge=0)
    to_tick: int = Field(ge=0)

    @model_validator(mode="after")
    def check_interval(self):
        if self.to_tick <= self.from_tick:
            raise ValueError("to_tick must be after from_tick")
        return self


Fault = Annotated[Union[ForceBatteryLevel, SkillThresholdBug, OverrideNavigation], Field(discriminator="kind")]


class BatteryConfig(BaseModel):
    initial_level: int = Field(33, ge=0, le=100)
    drain_every: int = Field(3, ge=1)  # movement ticks per percent
    charge_per_tick: int = Field(5, ge=1, le=100)
    threshold: int = Field(30, ge=0, le=100)
    reserve_percent: int = Field(10, ge=1, le=100)

    @property
    def reserve_moves(self) -> int:
        return self.reserve_percent * self.drain_every


class ScenarioConfig(BaseModel):
    """Everything needed to build and run one scenario"""
    name: str = "default"
    map: List[str] = Field(default_factory=lambda: list(DEFAULT_MAP))
    tree: str = "mission"  # built-in tree name or path to a .bt file
    properties: Optional[str] = None
    battery: BatteryConfig = Field(default_factory=BatteryConfig)
    theta: int = Field(100, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    horizon: int = Field(5000, ge=0)
    stop_on_violation: bool = False
    scheduler: SchedulerKind = SchedulerKind.random
    faults: List[Fault] = Field(default_factory=list)

    @field_validator("map")
    @classmethod
    def rectangular_map(cls, rows):
        if not rows:
            raise ValueError("map needs at least one row")
        width = len(rows[0])
        for i, row in enumerate(rows):
            if len(row) != width:
                raise ValueError(f"map row {i} has width {len(row)}, expected {width}")
        return rows

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ScenarioConfig":
        path = Path(path)
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as e:
            raise ScenarioBuildError(f"cannot read scenario config {path}: {e}") from e
        except UnicodeDecodeError as e:
            raise ScenarioBuildError(f"scenario config {path} is not UTF-8 text: {e.reason} at byte {e.start}") from None
        try:
            config = cls.model_validate_json(raw)
        except ValidationError as e:
            raise ScenarioBuildError(f"invalid scenario config {path}: {e}") from e
        base = path.parent
        if config.tree.endswith(".bt") and not Path(config.tree).is_absolute():
            config = config.model_copy(update={"tree": str(base / config.tree)})
        if config.properties and not Path(config.properties).is_absolute():
            config = config.model_copy(update={"properties": str(base / config.properties)})
        return config


class VerdictReport(BaseModel):
    """Final state of one attached monitor"""
    name: str
    status: str
    location: str
    tick: Optional[int] = None
    position: Optional[int] = None
    step: Optional[int] = None
    channel: Optional[str] = None
    message: Optional[str] = None


class RunReport(BaseModel):
    """Summary of one instrumented run"""
    scenario: str
    seed: int
    horizon: int
    status: str
    verdicts: List[VerdictReport] = []
    trace_path: Optional[str] = None
    ticks: int = 0
    steps: int = 0
    messages: Dict[str, int] = {}
    unmapped_replies: Dict[str, int] = {}
    issues: Dict[str, int] = {}
    blocked: Dict[str, str] = {}
    robot_cell: Optional[List[int]] = None
    battery_level: Optional[int] = None
    created_at: datetime = Field(default_factory=datetime.now)

    @property
    def violated(self) -> List[VerdictReport]:
        return [v for v in self.verdicts if v.status == "violated"]

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True)
