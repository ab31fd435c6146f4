"""Trajectory container and .trj file format.

A trajectory is a sequence of particle position snapshots with exact
timestamps, plus enough run metadata to reproduce or compare it. On
disk: one JSON header line, then one little-endian float32 block of
N x 3 positions per frame. Timestamps live in the header at full
precision (JSON round-trips Python floats exactly).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

TRJ_MAGIC = "TRJ"
TRJ_SCHEMA_VERSION = 1


class TrajectoryFormatError(Exception):
    """File does not conform to the .trj schema."""


def canonical_json(obj) -> str:
    """Deterministic serialization used for hashing run configurations."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run_config_hash(asset_id: str, scenario: dict, sim_config: dict) -> str:
    payload = {"asset_id": asset_id, "scenario": scenario, "sim_config": sim_config}
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Trajectory:
    asset_id: str
    scenario: dict
    sim_config: dict
    config_hash: str
    timestamps: np.ndarray  # (T,) float64, strictly increasing
    frames: np.ndarray  # (T, N, 3) float32, world meters

    @property
    def n_frames(self) -> int:
        return int(self.frames.shape[0])

    @property
    def n_particles(self) -> int:
        return int(self.frames.shape[1])

    def frame_at(self, i: int) -> np.ndarray:
        return self.frames[i]

    def validation_failures(self) -> list[str]:
        fails = []
        if self.frames.ndim != 3 or self.frames.shape[2] != 3:
            fails.append(f"frames shape {self.frames.shape} is not (T, N, 3)")
            return fails
        if self.frames.shape[0] < 1:
            fails.append("trajectory needs at least one frame")
        if self.timestamps.shape != (self.frames.shape[0],):
            fails.append(
                f"{self.timestamps.shape[0]} timestamps for {self.frames.shape[0]} frames"
            )
        elif self.timestamps.size > 1 and not np.all(np.diff(self.timestamps) > 0):
            fails.append("timestamps must be strictly increasing")
        if self.frames.dtype != np.float32:
            fails.append(f"frames dtype {self.frames.dtype} is not float32")
        if not np.all(np.isfinite(self.frames)):
            fails.append("frames contain non-finite positions")
        return fails

    def validate(self) -> "Trajectory":
        fails = self.validation_failures()
        if fails:
            raise TrajectoryFormatError("; ".join(fails))
        return self

    @classmethod
    def from_frames(
        cls,
        asset_id: str,
        scenario: dict,
        sim_config: dict,
        timestamps,
        frames,
    ) -> "Trajectory":
        ts = np.asarray(timestamps, dtype=np.float64)
        fr = np.ascontiguousarray(frames, dtype=np.float32)
        traj = cls(
            asset_id=asset_id,
            scenario=scenario,
            sim_config=sim_config,
            config_hash=run_config_hash(asset_id, scenario, sim_config),
            timestamps=ts,
            frames=fr,
        )
        return traj.validate()


def save_trajectory(traj: Trajectory, path) -> None:
    traj.validate()
    header = {
        "format": TRJ_MAGIC,
        "schema_version": TRJ_SCHEMA_VERSION,
        "asset_id": traj.asset_id,
        "scenario": traj.scenario,
        "sim_config": traj.sim_config,
        "config_hash": traj.config_hash,
        "n_frames": traj.n_frames,
        "n_particles": traj.n_particles,
        "timestamps": traj.timestamps.tolist(),
    }
    with open(path, "wb") as f:
        f.write((json.dumps(header, separators=(",", ":")) + "\n").encode("utf-8"))
        for i in range(traj.n_frames):
            f.write(np.ascontiguousarray(traj.frames[i], dtype="<f4").tobytes())


def load_trajectory(path) -> Trajectory:
    with open(path, "rb") as f:
        head_line = f.readline()
        blob = f.read()
    try:
        header = json.loads(head_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise TrajectoryFormatError(f"unreadable header: {e}") from None
    if header.get("format") != TRJ_MAGIC:
        raise TrajectoryFormatError(f"not a trajectory file (format={header.get('format')!r})")
    if header.get("schema_version") != TRJ_SCHEMA_VERSION:
        raise TrajectoryFormatError(
            f"unsupported schema_version {header.get('schema_version')!r}"
        )
    for key in ("asset_id", "scenario", "sim_config", "config_hash", "n_frames", "n_particles", "timestamps"):
        if key not in header:
            raise TrajectoryFormatError(f"header missing field {key!r}")
    T = int(header["n_frames"])
    N = int(header["n_particles"])
    expected = T * N * 3 * 4
    if len(blob) != expected:
        raise TrajectoryFormatError(
            f"position blob holds {len(blob)} bytes, expected {expected} "
            f"({T} frames x {N} particles)"
        )
    frames = np.frombuffer(blob, dtype="<f4").reshape(T, N, 3).copy()
    traj = Trajectory(
        asset_id=header["asset_id"],
        scenario=header["scenario"],
        sim_config=header["sim_config"],
        config_hash=header["config_hash"],
        timestamps=np.asarray(header["timestamps"], dtype=np.float64),
        frames=frames,
    )
    traj.validate()
    stated = run_config_hash(traj.asset_id, traj.scenario, traj.sim_config)
    if traj.config_hash != stated:
        raise TrajectoryFormatError(
            f"config_hash mismatch: header says {traj.config_hash[:12]}..., "
            f"recomputed {stated[:12]}..."
        )
    return traj
