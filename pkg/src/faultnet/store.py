"""Append-only JSON-lines event store.

One file per entity type under the data directory. Every state change is an
appended event; service state is rebuilt by replaying the files in order, so
a restart reconstructs networks, sessions and jobs exactly.
"""
from __future__ import annotations

import json
import threading
import time
from pathlib import Path

__all__ = ["EventStore"]


class EventStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _path(self, entity: str) -> Path:
        return self.data_dir / f"{entity}.jsonl"

    def append(self, entity: str, event: dict) -> dict:
        """Append one event; a wall-clock timestamp is added if absent."""
        event = dict(event)
        event.setdefault("ts", time.time())
        line = json.dumps(event, sort_keys=True)
        with self._lock:
            with self._path(entity).open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return event

    def replay(self, entity: str):
        """Yield all stored events of one entity type, oldest first."""
        path = self._path(entity)
        if not path.exists():
            return
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    yield json.loads(line)
