"""Verification scenarios: standard perturbations applied to an asset.

Five scenario families, each a frozen dataclass with physical defaults.
prepare_scenario turns (scenario, asset, config) into an initial
particle state plus the time-dependent driving terms the stepper needs.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assets import SimReadyAsset
from .mpm import ConfigError, ParticleState, SimConfig, particles_from_asset


class ScenarioError(ValueError):
    """Scenario specification rejected."""


@dataclass(frozen=True)
class DropScenario:
    """Free fall onto the ground from a given clearance."""

    drop_height: float = 0.5

    def validation_failures(self):
        return [] if self.drop_height > 0 else [f"drop_height={self.drop_height} must be > 0"]


@dataclass(frozen=True)
class ThrowScenario:
    """Launch with an initial velocity from a low height."""

    velocity: tuple[float, float, float] = (1.0, 1.5, 0.0)
    drop_height: float = 0.3

    def validation_failures(self):
        return [] if self.drop_height > 0 else [f"drop_height={self.drop_height} must be > 0"]


@dataclass(frozen=True)
class TiltScenario:
    """Rest the object on a ground plane tilted about the z axis."""

    tilt_deg: float = 20.0

    def validation_failures(self):
        if not (0 <= self.tilt_deg < 90):
            return [f"tilt_deg={self.tilt_deg} outside [0, 90)"]
        return []


@dataclass(frozen=True)
class DragScenario:
    """Grab the top slab of the object and pull it at constant velocity."""

    velocity: tuple[float, float, float] = (0.5, 0.0, 0.0)
    duration: float = 0.5
    handle_fraction: float = 0.1

    def validation_failures(self):
        fails = []
        if not self.duration > 0:
            fails.append(f"duration={self.duration} must be > 0")
        if not (0 < self.handle_fraction <= 1):
            fails.append(f"handle_fraction={self.handle_fraction} outside (0, 1]")
        return fails


@dataclass(frozen=True)
class WindScenario:
    """Uniform acceleration gust with a half-sine time envelope."""

    accel: tuple[float, float, float] = (3.0, 0.0, 0.0)
    duration: float = 0.5

    def validation_failures(self):
        return [] if self.duration > 0 else [f"duration={self.duration} must be > 0"]


Scenario = DropScenario | ThrowScenario | TiltScenario | DragScenario | WindScenario

SCENARIO_TYPES: dict[str, type] = {
    "drop": DropScenario,
    "throw": ThrowScenario,
    "tilt": TiltScenario,
    "drag": DragScenario,
    "wind": WindScenario,
}

_NAMES = {v: k for k, v in SCENARIO_TYPES.items()}


def scenario_name(spec: Scenario) -> str:
    return _NAMES[type(spec)]


def scenario_to_dict(spec: Scenario) -> dict:
    d = dataclasses.asdict(spec)
    d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in d.items()}
    d["type"] = scenario_name(spec)
    return d


def scenario_from_dict(d: dict) -> Scenario:
    if "type" not in d:
        raise ScenarioError("scenario dict missing 'type'")
    name = d["type"]
    if name not in SCENARIO_TYPES:
        raise ScenarioError(
            f"unknown scenario type {name!r}; expected one of {sorted(SCENARIO_TYPES)}"
        )
    cls = SCENARIO_TYPES[name]
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for k, v in d.items():
        if k == "type":
            continue
        if k not in fields:
            raise ScenarioError(f"scenario {name!r} has no parameter {k!r}")
        kwargs[k] = tuple(v) if isinstance(v, list) else v
    spec = cls(**kwargs)
    return validate_scenario(spec)


def validate_scenario(spec: Scenario) -> Scenario:
    fails = spec.validation_failures()
    if fails:
        raise ScenarioError("; ".join(fails))
    return spec


def default_scenario(name: str) -> Scenario:
    if name not in SCENARIO_TYPES:
        raise ScenarioError(
            f"unknown scenario {name!r}; expected one of {sorted(SCENARIO_TYPES)}"
        )
    return SCENARIO_TYPES[name]()


@dataclass
class PreparedScenario:
    """Initial conditions and driving terms, ready for the stepper."""

    particles: ParticleState
    cfg: SimConfig
    accel_fn: Callable[[float], tuple[float, float, float]]
    kinematic_fn: Callable[[float], Optional[tuple[float, float, float]]]


def _no_accel(t: float):
    return (0.0, 0.0, 0.0)


def _no_kinematic(t: float):
    return None


def _placement_offset(asset: SimReadyAsset, cfg: SimConfig, bottom_height: float, center_x=None):
    """Offset placing the scaled asset centered in x/z with its lowest
    point at bottom_height."""
    ws = asset.metadata.world_scale
    pts = asset.points.astype(float) * ws
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    cx = cfg.domain_size / 2 if center_x is None else center_x
    return np.array(
        [
            cx - (lo[0] + hi[0]) / 2,
            bottom_height - lo[1],
            cfg.domain_size / 2 - (lo[2] + hi[2]) / 2,
        ]
    )


def prepare_scenario(spec: Scenario, asset: SimReadyAsset, cfg: SimConfig) -> PreparedScenario:
    validate_scenario(spec)
    cfg.validate()
    ws = asset.metadata.world_scale
    if ws >= cfg.domain_size / 2:
        raise ConfigError(
            f"asset world_scale {ws} is too large for domain_size {cfg.domain_size}"
        )

    if isinstance(spec, DropScenario):
        offset = _placement_offset(asset, cfg, cfg.ground_height + spec.drop_height)
        particles = particles_from_asset(asset, offset)
        return PreparedScenario(particles, cfg, _no_accel, _no_kinematic)

    if isinstance(spec, ThrowScenario):
        # start off-center so the flight stays inside the domain
        vx = spec.velocity[0]
        cx = cfg.domain_size * (0.3 if vx >= 0 else 0.7)
        offset = _placement_offset(asset, cfg, cfg.ground_height + spec.drop_height, center_x=cx)
        particles = particles_from_asset(asset, offset, velocity=spec.velocity)
        return PreparedScenario(particles, cfg, _no_accel, _no_kinematic)

    if isinstance(spec, TiltScenario):
        tilted = dataclasses.replace(cfg, ground_tilt_deg=spec.tilt_deg)
        offset = _placement_offset(asset, tilted, tilted.ground_height)
        particles = particles_from_asset(asset, offset)
        # lift along the plane normal until the lowest point has half a
        # cell of clearance
        point, normal = tilted.ground_plane()
        d = (particles.x - point) @ normal
        clearance = 0.5 * tilted.dx
        shift = clearance - float(d.min())
        if shift > 0:
            particles.x += shift * normal
        return PreparedScenario(particles, tilted, _no_accel, _no_kinematic)

    if isinstance(spec, DragScenario):
        offset = _placement_offset(asset, cfg, cfg.ground_height + 0.5 * cfg.dx)
        particles = particles_from_asset(asset, offset)
        y = particles.x[:, 1]
        cut = y.max() - spec.handle_fraction * (y.max() - y.min())
        particles.kinematic[:] = y >= cut
        vel = spec.velocity
        dur = spec.duration

        def kin(t: float):
            return vel if t < dur else None

        return PreparedScenario(particles, cfg, _no_accel, kin)

    if isinstance(spec, WindScenario):
        offset = _placement_offset(asset, cfg, cfg.ground_height + 0.5 * cfg.dx)
        particles = particles_from_asset(asset, offset)
        ax, ay, az = spec.accel
        dur = spec.duration

        def gust(t: float):
            if t >= dur:
                return (0.0, 0.0, 0.0)
            env = math.sin(math.pi * t / dur)
            return (ax * env, ay * env, az * env)

        return PreparedScenario(particles, cfg, gust, _no_kinematic)

    raise ScenarioError(f"unhandled scenario type {type(spec).__name__}")
