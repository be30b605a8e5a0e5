"""
Run status tracking for check/synth/run/sweep requests
"""

import threading
import uuid
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, List, Optional


class RunPhase(Enum):
    """Where a request currently is in the pipeline"""
    IDLE = "idle"
    PARSING = "parsing"
    CHECKING = "checking"
    SYNTHESIZING = "synthesizing"
    SIMULATING = "simulating"
    COMPLETED = "completed"
    ERROR = "error"


@dataclass
class RunProgress:
    steps_done: int = 0
    steps_total: int = 0
    current_step: str = ""

    @property
    def progress_percentage(self) -> float:
        if self.steps_total == 0:
            return 0.0
        return (self.steps_done / self.steps_total) * 100.0


@dataclass
class RunInfo:
    run_id: str
    command: str
    phase: RunPhase
    start_time: datetime
    scenario: str = ""
    end_time: Optional[datetime] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    progress: RunProgress = field(default_factory=RunProgress)
    outcome: Optional[str] = None
    error_message: Optional[str] = None

    @property
    def duration_seconds(self) -> float:
        end = self.end_time or datetime.now(timezone.utc)
        return (end - self.start_time).total_seconds()

    @property
    def is_active(self) -> bool:
        return self.phase not in (RunPhase.COMPLETED, RunPhase.ERROR, RunPhase.IDLE)

    def to_dict(self) -> Dict[str, Any]:
        out = asdict(self)
        out["phase"] = self.phase.value
        out["start_time"] = self.start_time.timestamp()
        out["end_time"] = self.end_time.timestamp() if self.end_time else None
        out["duration_seconds"] = self.duration_seconds
        out["progress"]["progress_percentage"] = self.progress.progress_percentage
        return out


class RunStatusManager:
    """Thread-safe tracker of the current run and a short history"""

    def __init__(self, max_history: int = 10):
        self._lock = threading.RLock()
        self._current: Optional[RunInfo] = None
        self._history: List[RunInfo] = []
        self._max_history = max_history
        self._total_runs = 0

    def start_run(self, command: str, scenario: str = "", parameters: Optional[Dict[str, Any]] = None) -> str:
        with self._lock:
            if self._current is not None:
                # an unfinished run is superseded, not lost
                self._current.phase = RunPhase.ERROR
                self._current.error_message = "superseded by a newer run"
                self._finalize()
            run_id = str(uuid.uuid4())[:8]
            self._current = RunInfo(
                run_id=run_id,
                command=command,
                phase=RunPhase.PARSING,
                start_time=datetime.now(timezone.utc),
                scenario=scenario,
                parameters=parameters or {},
            )
            self._total_runs += 1
            return run_id

    def update_status(
        self,
        run_id: str,
        phase: RunPhase,
        current_step: str = "",
        steps_done: Optional[int] = None,
        steps_total: Optional[int] = None,
        outcome: Optional[str] = None,
        error_message: Optional[str] = None,
    ):
        with self._lock:
            if self._current is None or self._current.run_id != run_id:
                return
            run = self._current
            run.phase = phase
            if current_step:
                run.progress.current_step = current_step
            if steps_done is not None:
                run.progress.steps_done = steps_done
            if steps_total is not None:
                run.progress.steps_total = steps_total
            if outcome:
                run.outcome = outcome
            if error_message:
                run.error_message = error_message
            if phase in (RunPhase.COMPLETED, RunPhase.ERROR):
                run.end_time = datetime.now(timezone.utc)
                self._finalize()

    def _finalize(self):
        if self._current is None:
            return
        self._history.append(self._current)
        if len(self._history) > self._max_history:
            self._history = self._history[-self._max_history:]
        self._current = None

    def get_current_status(self) -> Dict[str, Any]:
        with self._lock:
            if self._current is None:
                return {
                    "phase": RunPhase.IDLE.value,
                    "is_processing": False,
                    "total_runs": self._total_runs,
                    "message": "No active runs",
                }
            out = self._current.to_dict()
            out["is_active"] = self._current.is_active
            out["is_processing"] = True
            out["total_runs"] = self._total_runs
            return out

    def get_history(self, limit: int = 5) -> List[Dict[str, Any]]:
        """Most recent first"""
        with self._lock:
            return [r.to_dict() for r in reversed(self._history[-limit:])]

    def get_statistics(self) -> Dict[str, Any]:
        with self._lock:
            completed = [r for r in self._history if r.phase == RunPhase.COMPLETED]
            failed = [r for r in self._history if r.phase == RunPhase.ERROR]
            avg = sum(r.duration_seconds for r in completed) / len(completed) if completed else 0.0
            by_command: Dict[str, int] = {}
            for r in self._history:
                by_command[r.command] = by_command.get(r.command, 0) + 1
            return {
                "total_runs": self._total_runs,
                "completed_runs": len(completed),
                "error_runs": len(failed),
                "success_rate": len(completed) / max(1, len(completed) + len(failed)) * 100,
                "average_duration_seconds": avg,
                "runs_by_command": by_command,
                "is_processing": self._current is not None,
            }

    def clear_history(self):
        with self._lock:
            self._history.clear()


_status_manager = RunStatusManager()


def start_run(command: str, scenario: str = "", parameters: Optional[Dict[str, Any]] = None) -> str:
    return _status_manager.start_run(command, scenario, parameters)


def update_run_status(
    run_id: str,
    phase: RunPhase,
    current_step: str = "",
    steps_done: Optional[int] = None,
    steps_total: Optional[int] = None,
    outcome: Optional[str] = None,
    error_message: Optional[str] = None,
):
    _status_manager.update_status(run_id, phase, current_step, steps_done, steps_total, outcome, error_message)


def get_run_status() -> Dict[str, Any]:
    return _status_manager.get_current_status()


def get_run_history(limit: int = 5) -> List[Dict[str, Any]]:
    return _status_manager.get_history(limit)


def get_run_statistics() -> Dict[str, Any]:
    return _status_manager.get_statistics()


def clear_run_history():
    _status_manager.clear_history()
