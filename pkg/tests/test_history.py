"""
Tests for the SQLAlchemy run history
"""

import pytest

from database import DEFAULT_HISTORY_URL, HISTORY_ENV_VAR, RunHistory, get_database_url


@pytest.fixture
def history(tmp_path):
    return RunHistory(f"sqlite:///{tmp_path / 'history.db'}")


def verdict(name, violated, **extra):
    record = {"name": name, "status": "violated" if violated else "running", "location": "Err" if violated else "I"}
    record.update(extra)
    return record


def test_database_url_resolution(monkeypatch):
    monkeypatch.delenv(HISTORY_ENV_VAR, raising=False)
    assert get_database_url() == DEFAULT_HISTORY_URL
    monkeypatch.setenv(HISTORY_ENV_VAR, "sqlite:///other.db")
    assert get_database_url() == "sqlite:///other.db"
    assert get_database_url("sqlite:///explicit.db") == "sqlite:///explicit.db"


def test_run_lifecycle(history):
    run_id = history.start_run("experiment1", 1, 2000, "exp1.trace")
    history.store_verdicts([
        verdict("phi1", True, tick=5, position=40, step=330, channel="BatteryReader->BatteryLevel",
                message="[<ok>, 10]"),
        verdict("phi2", False),
    ])
    history.complete_run("violation", 6, 331, {"BatteryReader->BatteryLevel": 12})
    assert history.current_session_id is None

    summary = history.run_summary(run_id)
    assert summary == {
        "id": run_id,
        "scenario": "experiment1",
        "status": "violation",
        "ticks": 6,
        "steps": 331,
        "monitors_attached": 2,
        "violations_found": 1,
    }
    assert history.violations() == [{
        "session_id": run_id,
        "scenario": "experiment1",
        "seed": 1,
        "monitor": "phi1",
        "tick": 5,
        "position": 40,
        "channel": "BatteryReader->BatteryLevel",
        "message": "[<ok>, 10]",
    }]


def test_violations_newest_first_and_filtered(history):
    for scenario, seed in [("a", 1), ("b", 2), ("a", 3)]:
        history.start_run(scenario, seed, 100)
        history.store_verdicts([verdict("phi1", True, tick=seed)])
        history.complete_run("violation", seed, 10)
    assert [v["seed"] for v in history.violations()] == [3, 2, 1]
    assert [v["seed"] for v in history.violations("a")] == [3, 1]


def test_store_needs_active_session(history):
    with pytest.raises(ValueError):
        history.store_verdicts([verdict("phi1", False)])


def test_unknown_session(history):
    assert history.run_summary(42) is None
