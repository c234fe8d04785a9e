"""Append-only decision and violation log."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from kgauthz.terms import Term

VIOLATION = "violation"
DENIAL = "denial"
REVOCATION = "revocation"
REGISTRATION = "registration"
ALLOWED = "allowed"
EVENTS = (VIOLATION, DENIAL, REVOCATION, REGISTRATION, ALLOWED)


@dataclass(frozen=True)
class AuditRecord:
    sequence: int
    timestamp: float
    agent_id: str
    event: str
    predicate: Optional[Term] = None
    detail: str = ""

    @property
    def iso_timestamp(self) -> str:
        return datetime.fromtimestamp(self.timestamp, tz=timezone.utc).isoformat()

    def export_line(self) -> str:
        pred = self.predicate.n3() if self.predicate is not None else "-"
        detail = self.detail.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")
        return "\t".join([str(self.sequence), self.iso_timestamp, self.agent_id,
                          self.event, pred, detail])


class AuditLog:
    def __init__(self, export_path: str | Path | None = None,
                 clock: Callable[[], float] = time.time):
        self._records: list[AuditRecord] = []
        self._lock = threading.Lock()
        self._clock = clock
        self.export_path = Path(export_path) if export_path else None

    def log(self, agent_id: str, event: str, predicate: Term | None = None,
            detail: str = "") -> AuditRecord:
        if event not in EVENTS:
            raise ValueError(f"unknown audit event {event!r}")
        with self._lock:
            record = AuditRecord(len(self._records) + 1, self._clock(), agent_id,
                                 event, predicate, detail)
            self._records.append(record)
            if self.export_path is not None:
                with self.export_path.open("a", encoding="utf-8") as fh:
                    fh.write(record.export_line() + "\n")
        return record

    def query_log(self, agent_id: str | None = None, event: str | None = None) -> list[AuditRecord]:
        with self._lock:
            snapshot = list(self._records)
        return [
            r for r in snapshot
            if (agent_id is None or r.agent_id == agent_id) and (event is None or r.event == event)
        ]

    def count(self, event: str | None = None) -> int:
        return len(self.query_log(event=event))

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)
