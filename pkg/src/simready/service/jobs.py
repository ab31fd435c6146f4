"""Review jobs: simulation runs executed on a bounded in-process worker pool."""

from __future__ import annotations

import datetime as _dt
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

JOB_STATUSES = ("queued", "running", "done", "failed")


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class ReviewJob:
    """One simulation run of a session under a scenario."""

    job_id: str
    session_id: str
    scenario: dict
    sim_config: dict
    duration: float
    fps: int
    status: str = "queued"
    error: str | None = None
    n_frames: int = 0
    trajectory_path: str = ""
    frames_dir: str = ""
    created_at: str = field(default_factory=_utcnow)
    finished_at: str | None = None

    def advance(self, new_status: str) -> None:
        """Move status forward; regressions are a bug, not a request error."""
        if new_status not in JOB_STATUSES:
            raise ValueError(f"unknown job status {new_status!r}")
        if JOB_STATUSES.index(new_status) <= JOB_STATUSES.index(self.status):
            raise ValueError(f"job status cannot go {self.status} -> {new_status}")
        if self.status in ("done", "failed"):
            raise ValueError(f"job already finished ({self.status})")
        self.status = new_status
        if new_status in ("done", "failed"):
            self.finished_at = _utcnow()

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "session_id": self.session_id,
            "scenario": self.scenario,
            "sim_config": self.sim_config,
            "duration": self.duration,
            "fps": self.fps,
            "status": self.status,
            "error": self.error,
            "n_frames": self.n_frames,
            "trajectory_path": self.trajectory_path,
            "frames_dir": self.frames_dir,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReviewJob":
        return cls(**{k: d[k] for k in cls.__dataclass_fields__ if k in d})


def new_job_id() -> str:
    return uuid.uuid4().hex[:12]


class JobManager:
    """Runs job payloads on a small thread pool and persists state changes.

    The payload returns (trajectory_path, frames_dir, n_frames) on success;
    any exception marks the job failed with its message. Job records are
    persisted through the store callback on every transition.
    """

    def __init__(self, save_job: Callable[[ReviewJob], None], n_workers: int = 2):
        if n_workers < 1:
            raise ValueError("n_workers must be >= 1")
        self._save = save_job
        self._pool = ThreadPoolExecutor(max_workers=n_workers)
        self._lock = threading.Lock()
        self._jobs: dict[str, ReviewJob] = {}

    def submit(self, job: ReviewJob, payload: Callable[[], tuple[str, str, int]]) -> None:
        with self._lock:
            self._jobs[job.job_id] = job
        self._save(job)
        self._pool.submit(self._run, job, payload)

    def _run(self, job: ReviewJob, payload: Callable[[], tuple[str, str, int]]) -> None:
        with self._lock:
            job.advance("running")
        self._save(job)
        try:
            trajectory_path, frames_dir, n_frames = payload()
        except Exception as e:
            with self._lock:
                job.advance("failed")
                job.error = f"{type(e).__name__}: {e}"
        else:
            with self._lock:
                job.advance("done")
                job.trajectory_path = trajectory_path
                job.frames_dir = frames_dir
                job.n_frames = n_frames
        self._save(job)

    def shutdown(self, wait: bool = True) -> None:
        self._pool.shutdown(wait=wait)
