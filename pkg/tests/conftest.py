"""
Shared fixtures for the btrv test suite
"""

import os
import sys
from pathlib import Path

import pytest

# Add the repository root to the path so btrv, models and database import
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from btrv.model_text import parse_system  # noqa: E402
from btrv.scenario import DEFAULT_PROPERTIES  # noqa: E402
from models.scenario_models import ScenarioConfig  # noqa: E402

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

PING_PONG = """
system PingPong
shared var n : int[0..3] = 0
channel Pinger -> Ponger capacity 0
channel Ponger -> Pinger capacity 1
tick channel Pinger -> Ponger

process Pinger
  var x : msg
  init Send
  Send --[ !(Pinger, Ponger, [<ping>, n]) ]--> Wait
  Wait --[ ?(Ponger, Pinger, x) ]--> Count
  Count --[ n < 3 : n := n + 1 ]--> Send
end

process Ponger
  var x : msg
  init Listen
  Listen --[ ?(Pinger, Ponger, x) ]--> Answer
  Answer --[ !(Ponger, Pinger, [<pong>, x[2]]) ]--> Listen
end
"""


@pytest.fixture
def ping_pong():
    return parse_system(PING_PONG)


@pytest.fixture
def default_properties():
    return DEFAULT_PROPERTIES


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def scenario_config():
    """Default scenario with a deterministic seed"""
    return ScenarioConfig(name="test", seed=3)
