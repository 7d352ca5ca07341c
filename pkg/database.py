"""
SQLAlchemy models for the btrv run history

Each run is a session: start it, store one result per attached monitor,
then complete it with the summary counters. SQLite by default; any
SQLAlchemy URL works through BTRV_HISTORY_DB.
"""

import logging
import os
from datetime import datetime
from typing import Dict, List, Optional

from sqlalchemy import Boolean, Column, DateTime, ForeignKey, Integer, JSON, String, Text, create_engine
from sqlalchemy.orm import declarative_base, relationship, sessionmaker

HISTORY_ENV_VAR = "BTRV_HISTORY_DB"
DEFAULT_HISTORY_URL = "sqlite:///btrv_history.db"

Base = declarative_base()


def get_database_url(url: Optional[str] = None) -> str:
    """History URL from the argument, the environment or the default"""
    return url or os.getenv(HISTORY_ENV_VAR) or DEFAULT_HISTORY_URL


class RunSession(Base):
    """One scenario run"""
    __tablename__ = "run_sessions"

    id = Column(Integer, primary_key=True, autoincrement=True)
    scenario = Column(String, nullable=False)
    seed = Column(Integer)
    horizon = Column(Integer)
    started_at = Column(DateTime, default=datetime.now)
    completed_at = Column(DateTime)
    status = Column(String, default="running")
    ticks = Column(Integer, default=0)
    steps = Column(Integer, default=0)
    monitors_attached = Column(Integer, default=0)
    violations_found = Column(Integer, default=0)
    trace_path = Column(String)
    message_counts = Column(JSON)

    results = relationship("MonitorResult", back_populates="session", cascade="all, delete-orphan")

    def __str__(self):
        return f"{self.scenario} #{self.id} ({self.status})"


class MonitorResult(Base):
    """Final verdict of one monitor in one run"""
    __tablename__ = "monitor_results"

    id = Column(Integer, primary_key=True, autoincrement=True)
    session_id = Column(Integer, ForeignKey("run_sessions.id"), nullable=False)
    monitor = Column(String, nullable=False)
    violated = Column(Boolean, default=False)
    location = Column(String)
    tick = Column(Integer)
    position = Column(Integer)
    step = Column(Integer)
    channel = Column(String)
    message = Column(Text)

    session = relationship("RunSession", back_populates="results")


class RunHistory:
    """Records runs and answers violation queries"""

    def __init__(self, url: Optional[str] = None):
        self.url = get_database_url(url)
        self.logger = logging.getLogger(__name__)
        self.engine = create_engine(self.url)
        self.SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=self.engine)
        Base.metadata.create_all(self.engine)
        self.current_session_id: Optional[int] = None

    def start_run(self, scenario: str, seed: int, horizon: int, trace_path: Optional[str] = None) -> int:
        """Start a new run session and return its id"""
        with self.SessionLocal() as db:
            try:
                run = RunSession(scenario=scenario, seed=seed, horizon=horizon, trace_path=trace_path)
                db.add(run)
                db.commit()
                self.current_session_id = run.id
                self.logger.info(f"Started run session '{scenario}' with ID {run.id}")
                return run.id
            except Exception as e:
                db.rollback()
                self.logger.error(f"Failed to start run session: {e}")
                raise

    def store_verdicts(self, verdicts: List[Dict[str, object]]):
        """Store one row per monitor verdict of the current session"""
        if not self.current_session_id:
            raise ValueError("No active run session. Call start_run() first.")
        with self.SessionLocal() as db:
            try:
                for verdict in verdicts:
                    db.add(MonitorResult(
                        session_id=self.current_session_id,
                        monitor=verdict["name"],
                        violated=verdict["status"] == "violated",
                        location=verdict.get("location"),
                        tick=verdict.get("tick"),
                        position=verdict.get("position"),
                        step=verdict.get("step"),
                        channel=verdict.get("channel"),
                        message=verdict.get("message"),
                    ))
                db.commit()
            except Exception as e:
                db.rollback()
                self.logger.error(f"Failed to store monitor results: {e}")
                raise

    def complete_run(self, status: str, ticks: int, steps: int, message_counts: Optional[Dict[str, int]] = None):
        """Mark the current session complete and fill its counters"""
        if not self.current_session_id:
            return
        with self.SessionLocal() as db:
            try:
                run = db.get(RunSession, self.current_session_id)
                run.status = status
                run.ticks = ticks
                run.steps = steps
                run.message_counts = message_counts or {}
                run.monitors_attached = len(run.results)
                run.violations_found = sum(1 for r in run.results if r.violated)
                run.completed_at = datetime.now()
                db.commit()
                self.logger.info(f"Completed run session {run.id}: {run.violations_found} of "
                                 f"{run.monitors_attached} monitors violated")
                self.current_session_id = None
            except Exception as e:
                db.rollback()
                self.logger.error(f"Failed to complete run session: {e}")
                raise

    def violations(self, scenario: Optional[str] = None) -> List[Dict[str, object]]:
        """Violated monitors, newest run first"""
        with self.SessionLocal() as db:
            query = db.query(MonitorResult, RunSession).join(RunSession).filter(MonitorResult.violated.is_(True))
            if scenario:
                query = query.filter(RunSession.scenario == scenario)
            rows = query.order_by(RunSession.id.desc(), MonitorResult.monitor).all()
            return [{
                "session_id": run.id,
                "scenario": run.scenario,
                "seed": run.seed,
                "monitor": result.monitor,
                "tick": result.tick,
                "position": result.position,
                "channel": result.channel,
                "message": result.message,
            } for result, run in rows]

    def run_summary(self, session_id: int) -> Optional[Dict[str, object]]:
        with self.SessionLocal() as db:
            run = db.get(RunSession, session_id)
            if run is None:
                return None
            return {
                "id": run.id,
                "scenario": run.scenario,
                "status": run.status,
                "ticks": run.ticks,
                "steps": run.steps,
                "monitors_attached": run.monitors_attached,
                "violations_found": run.violations_found,
            }
