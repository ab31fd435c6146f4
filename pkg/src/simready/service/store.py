"""On-disk store for review sessions and jobs: one JSON record per entity.

No database: a data directory with sessions/, jobs/, trajectories/, and
frames/ subdirectories. Every mutation is persisted immediately, so a restart
reconstructs the full service state from disk.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..annotation.session import AnnotationSession, ObjectDescription
from .jobs import ReviewJob

SESSION_STATES = ("created", "proposed", "simulated", "accepted", "awaiting_requery")

# Allowed state transitions; self-loops listed explicitly.
_TRANSITIONS: dict[str, set[str]] = {
    "created": {"proposed"},
    "proposed": {"proposed", "simulated"},
    "simulated": {"simulated", "accepted", "awaiting_requery", "proposed"},
    "awaiting_requery": {"proposed"},
    "accepted": set(),
}


class StateError(Exception):
    """An operation was attempted in a session state that forbids it."""


@dataclass
class ServiceSession:
    """A review session: the annotation record plus service-level state."""

    annotation: AnnotationSession
    state: str = "created"
    asset_path: str | None = None
    job_ids: list[str] = field(default_factory=list)
    verdicts: list[dict] = field(default_factory=list)

    @property
    def session_id(self) -> str:
        return self.annotation.session_id

    def set_state(self, new_state: str) -> None:
        if new_state not in SESSION_STATES:
            raise ValueError(f"unknown session state {new_state!r}")
        if new_state not in _TRANSITIONS[self.state]:
            raise StateError(f"session cannot go {self.state} -> {new_state}")
        self.state = new_state

    def to_dict(self) -> dict:
        return {
            "annotation": self.annotation.to_dict(),
            "state": self.state,
            "asset_path": self.asset_path,
            "job_ids": list(self.job_ids),
            "verdicts": list(self.verdicts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceSession":
        return cls(
            annotation=AnnotationSession.from_dict(d["annotation"]),
            state=d.get("state", "created"),
            asset_path=d.get("asset_path"),
            job_ids=list(d.get("job_ids", ())),
            verdicts=list(d.get("verdicts", ())),
        )


class DataStore:
    """Filesystem-backed persistence with per-session mutation locks."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("sessions", "jobs", "trajectories", "frames"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- locks

    def session_lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    @staticmethod
    def _write_json(path: Path, payload: dict) -> None:
        # atomic replace: job workers persist while request threads read
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(payload, indent=2))
        os.replace(tmp, path)

    # -- sessions

    def _session_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.json"

    def create_session(
        self, description: ObjectDescription, asset_path: str | None = None
    ) -> ServiceSession:
        session = ServiceSession(
            annotation=AnnotationSession.new(description), asset_path=asset_path
        )
        self.save_session(session)
        return session

    def save_session(self, session: ServiceSession) -> None:
        self._write_json(self._session_path(session.session_id), session.to_dict())

    def get_session(self, session_id: str) -> ServiceSession:
        path = self._session_path(session_id)
        if not path.is_file():
            raise KeyError(f"unknown session {session_id!r}")
        return ServiceSession.from_dict(json.loads(path.read_text()))

    def list_sessions(self) -> list[ServiceSession]:
        sessions = [
            ServiceSession.from_dict(json.loads(p.read_text()))
            for p in sorted((self.root / "sessions").glob("*.json"))
        ]
        return sorted(sessions, key=lambda s: (s.annotation.created_at, s.session_id))

    # -- jobs

    def _job_path(self, job_id: str) -> Path:
        return self.root / "jobs" / f"{job_id}.json"

    def save_job(self, job: ReviewJob) -> None:
        self._write_json(self._job_path(job.job_id), job.to_dict())

    def get_job(self, job_id: str) -> ReviewJob:
        path = self._job_path(job_id)
        if not path.is_file():
            raise KeyError(f"unknown job {job_id!r}")
        return ReviewJob.from_dict(json.loads(path.read_text()))

    def trajectory_path(self, job_id: str) -> Path:
        return self.root / "trajectories" / f"{job_id}.trj"

    def frames_dir(self, job_id: str) -> Path:
        return self.root / "frames" / job_id
