"""Append-only event log persistence, one JSON-lines file per session."""
from __future__ import annotations

import re
import threading
from pathlib import Path
from typing import Callable

from ..session import Event, SessionState, parse_log

SESSION_ID_PATTERN = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]{0,63}")


def valid_session_id(session_id: str) -> bool:
    return bool(SESSION_ID_PATTERN.fullmatch(session_id))


class StorageError(RuntimeError):
    pass


class EventLogStore:
    """Filesystem store; each append writes one full line and flushes."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def path(self, session_id: str) -> Path:
        if not valid_session_id(session_id):
            raise StorageError(f"invalid session id {session_id!r}")
        return self.root / f"{session_id}.jsonl"

    def append(self, session_id: str, event: Event) -> None:
        line = event.to_json_line()
        with self._lock:
            with open(self.path(session_id), "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def writer(self, session_id: str) -> Callable[[Event], None]:
        return lambda event: self.append(session_id, event)

    def exists(self, session_id: str) -> bool:
        return self.path(session_id).exists()

    def read(self, session_id: str) -> list[Event]:
        path = self.path(session_id)
        if not path.exists():
            raise KeyError(session_id)
        return parse_log(path.read_text(encoding="utf-8"))

    def replay(self, session_id: str) -> SessionState:
        return SessionState.replay(self.read(session_id))

    def session_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))
