"""Review service: HTTP API, job execution, rendering, persistence."""

from .app import create_app
from .geometry import apply_materials, placeholder_cloud
from .jobs import JOB_STATUSES, JobManager, ReviewJob
from .render import render_frame, render_trajectory
from .store import SESSION_STATES, DataStore, ServiceSession, StateError

__all__ = [
    "create_app",
    "apply_materials",
    "placeholder_cloud",
    "JOB_STATUSES",
    "JobManager",
    "ReviewJob",
    "render_frame",
    "render_trajectory",
    "SESSION_STATES",
    "DataStore",
    "ServiceSession",
    "StateError",
]
