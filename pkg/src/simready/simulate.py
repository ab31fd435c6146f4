"""Top-level simulation driver: asset + scenario -> trajectory."""

from __future__ import annotations

import dataclasses

from .assets import SimReadyAsset
from .mpm import MPMSim, SimConfig, StepDiagnostics
from .scenarios import Scenario, prepare_scenario, scenario_to_dict
from .trajectory import Trajectory

import numpy as np


def sim_config_to_dict(cfg: SimConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d["gravity"] = list(d["gravity"])
    return d


def run_identity_config(cfg: SimConfig) -> dict:
    """Engine settings that determine the computed frames.

    Worker count is an execution detail (results are identical for any
    value), so it stays out of stored run configs and their hashes.
    """
    d = sim_config_to_dict(cfg)
    d.pop("n_workers", None)
    return d


def sim_config_from_dict(d: dict) -> SimConfig:
    names = {f.name for f in dataclasses.fields(SimConfig)}
    unknown = set(d) - names
    if unknown:
        raise ValueError(f"unknown simulation config keys: {sorted(unknown)}")
    kwargs = dict(d)
    if "gravity" in kwargs:
        kwargs["gravity"] = tuple(kwargs["gravity"])
    return SimConfig(**kwargs).validate()


def simulate_with_diagnostics(
    asset: SimReadyAsset,
    scenario: Scenario,
    cfg: SimConfig | None = None,
    duration: float = 1.0,
    fps: int = 24,
    progress=None,
) -> tuple[Trajectory, StepDiagnostics]:
    """Simulate the scenario and sample particle positions at fps.

    Frame 0 is the initial state; frames land on exact multiples of
    1/fps. Substeps between frames follow the configured dt, or the CFL
    bound when dt is None. Returns the trajectory plus step counters.
    """
    if not duration > 0:
        raise ValueError(f"duration={duration} must be > 0")
    if not fps > 0:
        raise ValueError(f"fps={fps} must be > 0")
    cfg = cfg if cfg is not None else SimConfig()
    prep = prepare_scenario(scenario, asset, cfg)
    sim = MPMSim(prep.cfg, prep.particles)

    n_frames = int(round(duration * fps)) + 1
    frames = np.empty((n_frames, prep.particles.n, 3), dtype=np.float32)
    timestamps = np.empty(n_frames, dtype=np.float64)
    frames[0] = prep.particles.x
    timestamps[0] = 0.0
    for f in range(1, n_frames):
        target = f / fps
        sim.advance(target - sim.t, extra_accel_fn=prep.accel_fn, kinematic_fn=prep.kinematic_fn)
        # pin the clock to the nominal frame time so float accumulation
        # cannot desynchronize repeat runs
        sim.t = target
        frames[f] = prep.particles.x
        timestamps[f] = target
        if progress is not None:
            progress(f, n_frames - 1)

    traj = Trajectory.from_frames(
        asset_id=asset.metadata.asset_id,
        scenario=scenario_to_dict(scenario),
        sim_config=run_identity_config(prep.cfg),
        timestamps=timestamps,
        frames=frames,
    )
    return traj, sim.diagnostics


def run_simulation(
    asset: SimReadyAsset,
    scenario: Scenario,
    cfg: SimConfig | None = None,
    duration: float = 1.0,
    fps: int = 24,
    progress=None,
) -> Trajectory:
    """simulate_with_diagnostics minus the counters."""
    traj, _ = simulate_with_diagnostics(
        asset, scenario, cfg=cfg, duration=duration, fps=fps, progress=progress
    )
    return traj
