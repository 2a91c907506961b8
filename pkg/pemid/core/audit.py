"""Append-only audit trail of experiment runs."""

import json
import os
import threading
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, Field


class AuditEvent(BaseModel):
    """Represents a single audit event."""

    id: str
    timestamp: datetime
    # run_start, stage_start, stage_complete, stage_error, multistart_run, run_complete
    event_type: str
    run_id: str
    stage: Optional[str] = None
    command: Optional[str] = None
    data: Dict[str, Any] = Field(default_factory=dict)
    success: bool = True
    error_message: Optional[str] = None


class AuditLogger:
    """Writes audit events as JSON lines."""

    def __init__(self, log_file: Optional[Union[str, Path]] = None) -> None:
        self.log_file = Path(log_file) if log_file else self._get_default_log_file()
        self.log_file.parent.mkdir(parents=True, exist_ok=True)
        if not self.log_file.exists():
            self.log_file.touch()
        self._lock = threading.Lock()

    def _get_default_log_file(self) -> Path:
        log_dir = os.getenv("XDG_DATA_HOME", os.path.expanduser("~/.local/share"))
        return Path(log_dir) / "pemid" / "audit.jsonl"

    def log_event(
        self,
        event_type: str,
        run_id: str,
        stage: Optional[str] = None,
        command: Optional[str] = None,
        data: Optional[Dict[str, Any]] = None,
        success: bool = True,
        error_message: Optional[str] = None,
    ) -> str:
        """Log an audit event and return its id."""
        event = AuditEvent(
            id=str(uuid.uuid4()),
            timestamp=datetime.now(),
            event_type=event_type,
            run_id=run_id,
            stage=stage,
            command=command,
            data=data or {},
            success=success,
            error_message=error_message,
        )
        with self._lock, open(self.log_file, "a", encoding="utf-8") as f:
            f.write(event.model_dump_json() + "\n")
        return event.id

    def _read_events(self) -> List[AuditEvent]:
        events: List[AuditEvent] = []
        if not self.log_file.exists():
            return events
        with open(self.log_file, encoding="utf-8") as f:
            for line in f:
                try:
                    events.append(AuditEvent(**json.loads(line.strip())))
                except (json.JSONDecodeError, ValueError):
                    continue
        return events

    def get_run_events(self, run_id: str) -> List[AuditEvent]:
        """Get all events of one run in time order."""
        events = [e for e in self._read_events() if e.run_id == run_id]
        return sorted(events, key=lambda e: e.timestamp)

    def get_recent_events(self, limit: int = 100) -> List[AuditEvent]:
        """Get the most recent audit events."""
        return sorted(self._read_events(), key=lambda e: e.timestamp, reverse=True)[:limit]
