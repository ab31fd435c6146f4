"""Material point method engine on a uniform grid.

MLS-MPM with quadratic B-spline transfers and APIC affine velocities,
symplectic Euler in time. Materials are heterogeneous per particle; each
carries its own moduli and behavior code. The inner loops live in
`_kernels` and run serially, so results never depend on worker count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .assets import BehaviorType, SimReadyAsset
from .constitutive import drucker_prager_alpha


class SimulationError(Exception):
    """Raised when a run becomes physically or numerically invalid."""


class ConfigError(ValueError):
    """Simulation configuration rejected before any stepping."""


@dataclass(frozen=True)
class SimConfig:
    """Engine settings. Lengths in meters, times in seconds.

    dt=None derives the substep from the CFL bound each frame; a fixed
    dt is validated against that bound once at start.
    """

    grid_res: int = 64
    domain_size: float = 2.0
    dt: float | None = None
    cfl_factor: float = 0.4
    gravity: tuple[float, float, float] = (0.0, -9.8, 0.0)
    ground_height: float = 0.2
    ground_tilt_deg: float = 0.0
    ground_friction: float = 0.5
    # collision band above the plane, in cells; keeps the full spline
    # support of resting bodies constrained
    ground_band_cells: float = 1.0
    wall_cells: int = 3
    sv_clamp_lo: float = 0.05
    sv_clamp_hi: float = 4.0
    deterministic: bool = True
    # accepted for API symmetry; kernels are serial so results are
    # identical for any worker count
    n_workers: int = 1

    @property
    def dx(self) -> float:
        return self.domain_size / self.grid_res

    def validate(self) -> "SimConfig":
        fails = []
        if self.grid_res < 8:
            fails.append(f"grid_res={self.grid_res} too small (need >= 8)")
        if not self.domain_size > 0:
            fails.append(f"domain_size={self.domain_size} must be > 0")
        if self.dt is not None and not self.dt > 0:
            fails.append(f"dt={self.dt} must be > 0 or None")
        if not (0 < self.cfl_factor <= 1):
            fails.append(f"cfl_factor={self.cfl_factor} must be in (0, 1]")
        if not (0 <= self.ground_friction):
            fails.append(f"ground_friction={self.ground_friction} must be >= 0")
        if not (0 <= self.ground_band_cells <= 3):
            fails.append(f"ground_band_cells={self.ground_band_cells} outside [0, 3]")
        if not (0 <= self.ground_height < self.domain_size):
            fails.append(f"ground_height={self.ground_height} outside the domain")
        if not (1 <= self.wall_cells < self.grid_res // 2):
            fails.append(f"wall_cells={self.wall_cells} must be in [1, grid_res/2)")
        if not (0 < self.sv_clamp_lo < 1 < self.sv_clamp_hi):
            fails.append("sv clamp band must straddle 1")
        if self.n_workers < 1:
            fails.append(f"n_workers={self.n_workers} must be >= 1")
        if fails:
            raise ConfigError("; ".join(fails))
        return self

    def ground_plane(self) -> tuple[np.ndarray, np.ndarray]:
        """(point, unit normal) of the ground, tilted about the z axis
        through the domain center."""
        th = math.radians(self.ground_tilt_deg)
        normal = np.array([-math.sin(th), math.cos(th), 0.0])
        point = np.array([self.domain_size / 2, self.ground_height, self.domain_size / 2])
        return point, normal


@dataclass
class ParticleState:
    """Struct-of-arrays particle data, all float64 except codes."""

    x: np.ndarray  # (N, 3) positions, world meters
    v: np.ndarray  # (N, 3) velocities
    F: np.ndarray  # (N, 3, 3) deformation gradient
    C: np.ndarray  # (N, 3, 3) APIC affine velocity
    mass: np.ndarray  # (N,)
    vol0: np.ndarray  # (N,) initial volume
    mu: np.ndarray  # (N,)
    lam: np.ndarray  # (N,)
    behavior: np.ndarray  # (N,) int32
    sigma_y0: np.ndarray  # (N,) initial yield stress (0 where unused)
    sigma_y_cur: np.ndarray  # (N,) current yield stress after softening
    eps_p: np.ndarray  # (N,) accumulated plastic strain
    alpha_dp: np.ndarray  # (N,) Drucker-Prager friction coefficient
    kinematic: np.ndarray  # (N,) bool, driven externally while active

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def copy(self) -> "ParticleState":
        return ParticleState(**{k: v.copy() for k, v in self.__dict__.items()})

    def max_wave_speed(self) -> float:
        """Upper bound on the elastic wave speed over all particles."""
        E_eff = self.mu * (3.0 * self.lam + 2.0 * self.mu) / (self.mu + self.lam)
        rho = self.mass / self.vol0
        return float(np.sqrt(E_eff / rho).max())

    def max_speed(self) -> float:
        return float(np.linalg.norm(self.v, axis=1).max())


def material_arrays(asset: SimReadyAsset):
    """Per-particle Lame parameters and plasticity constants from asset
    material columns."""
    E = asset.E.astype(np.float64)
    nu = asset.nu.astype(np.float64)
    mu = E / (2.0 * (1.0 + nu))
    lam = E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
    behavior = asset.behavior.astype(np.int32)
    sigma_y0 = np.zeros(asset.n_points)
    vm = (behavior == int(BehaviorType.M1)) | (behavior == int(BehaviorType.M2))
    sigma_y0[vm] = asset.sigma_y[vm]
    alpha = np.zeros(asset.n_points)
    dp = behavior == int(BehaviorType.M3)
    alpha[dp] = [drucker_prager_alpha(float(p)) for p in asset.phi[dp]]
    return mu, lam, behavior, sigma_y0, alpha


def estimate_particle_volume(points: np.ndarray, world_scale: float) -> float:
    """Volume per particle from voxel occupancy of the normalized cloud.

    Voxel resolution tracks the point count (about one point per cell
    for a solid), and the sample bounding box is padded by half a cell
    since samples sit at cell centers. The absolute scale cancels out of
    homogeneously sampled dynamics, so a rough estimate is enough.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = np.maximum(hi - lo, 1e-9)
    res = max(2, int(round(n ** (1.0 / 3.0))))
    ijk = np.clip(((pts - lo) / extent * res).astype(int), 0, res - 1)
    occupied = len(np.unique(ijk[:, 0] * res * res + ijk[:, 1] * res + ijk[:, 2]))
    fill = occupied / res**3
    padded_extent = extent * res / (res - 1)
    bbox_vol = float(np.prod(padded_extent)) * world_scale**3
    return bbox_vol * fill / n


def particles_from_asset(
    asset: SimReadyAsset,
    placement_offset: np.ndarray,
    velocity: tuple[float, float, float] = (0.0, 0.0, 0.0),
    world_scale: float | None = None,
) -> ParticleState:
    """Instantiate simulation particles from an asset.

    Asset points (normalized to the unit box) are scaled by world_scale
    (meters per unit, metadata default) and shifted by placement_offset.
    """
    ws = asset.metadata.world_scale if world_scale is None else world_scale
    if not ws > 0:
        raise ConfigError(f"world_scale={ws} must be > 0")
    x = asset.points.astype(np.float64) * ws + np.asarray(placement_offset, dtype=float)
    n = asset.n_points
    mu, lam, behavior, sigma_y0, alpha = material_arrays(asset)
    vol_p = estimate_particle_volume(asset.points, ws)
    vol0 = np.full(n, vol_p)
    mass = asset.rho.astype(np.float64) * vol0
    F = np.tile(np.eye(3), (n, 1, 1))
    return ParticleState(
        x=np.ascontiguousarray(x),
        v=np.tile(np.asarray(velocity, dtype=float), (n, 1)),
        F=F,
        C=np.zeros((n, 3, 3)),
        mass=mass,
        vol0=vol0,
        mu=mu,
        lam=lam,
        behavior=behavior,
        sigma_y0=sigma_y0,
        sigma_y_cur=sigma_y0.copy(),
        eps_p=np.zeros(n),
        alpha_dp=alpha,
        kinematic=np.zeros(n, dtype=bool),
    )


def cfl_dt_limit(cfg: SimConfig, particles: ParticleState) -> float:
    """Largest stable substep: cfl_factor * dx / (v_max + c_max)."""
    speed = particles.max_speed() + particles.max_wave_speed()
    if speed <= 0:
        speed = 1e-6
    return cfg.cfl_factor * cfg.dx / speed


@dataclass
class StepDiagnostics:
    n_clamped: int = 0
    n_substeps: int = 0


class MPMSim:
    """Owns grid storage and advances a ParticleState in place."""

    def __init__(self, cfg: SimConfig, particles: ParticleState):
        cfg.validate()
        self.cfg = cfg
        self.p = particles
        res = cfg.grid_res
        self.grid_m = np.zeros((res, res, res))
        self.grid_mv = np.zeros((res, res, res, 3))
        self.t = 0.0
        self.diagnostics = StepDiagnostics()
        self._ground_point, self._ground_normal = cfg.ground_plane()
        self._check_in_domain()
        if cfg.dt is not None:
            limit = cfl_dt_limit(cfg, particles)
            if cfg.dt > limit:
                raise ConfigError(
                    f"dt={cfg.dt:g} exceeds the CFL bound {limit:g} for this "
                    f"material and grid; use dt <= {limit:g} or dt=None"
                )

    def _check_in_domain(self):
        lo = self.cfg.dx
        hi = self.cfg.domain_size - self.cfg.dx
        bad = np.nonzero((self.p.x < lo) | (self.p.x > hi))[0]
        if bad.size:
            i = int(bad[0])
            raise SimulationError(
                f"particle {i} at {self.p.x[i].tolist()} is outside the "
                f"simulation domain [{lo:g}, {hi:g}]^3; shrink the asset or "
                f"enlarge domain_size"
            )

    def substep(self, dt: float, extra_accel=(0.0, 0.0, 0.0), kinematic_velocity=None):
        """One symplectic Euler step of length dt."""
        p = self.p
        cfg = self.cfg
        stress = np.empty((p.n, 3, 3))
        self.diagnostics.n_clamped += _kernels.update_f_and_stress(
            p.F,
            p.C,
            p.mu,
            p.lam,
            p.behavior,
            p.sigma_y0,
            p.sigma_y_cur,
            p.eps_p,
            p.alpha_dp,
            dt,
            cfg.sv_clamp_lo,
            cfg.sv_clamp_hi,
            5.0,
            0.1,
            stress,
        )
        err, *box = _kernels.p2g(
            p.x,
            p.v,
            p.C,
            stress,
            p.mass,
            p.vol0,
            self.grid_m,
            self.grid_mv,
            cfg.grid_res,
            cfg.dx,
            1.0 / cfg.dx,
            dt,
        )
        if err >= 0:
            raise SimulationError(
                f"particle {err} at {p.x[err].tolist()} left the simulation "
                f"domain at t={self.t:.6f}s"
            )
        accel = np.asarray(cfg.gravity, dtype=float) + np.asarray(extra_accel, dtype=float)
        _kernels.grid_update(
            self.grid_m,
            self.grid_mv,
            np.asarray(box, dtype=np.int64),
            cfg.grid_res,
            cfg.dx,
            dt,
            accel,
            cfg.wall_cells,
            self._ground_point,
            self._ground_normal,
            cfg.ground_friction,
            cfg.ground_band_cells * cfg.dx,
        )
        kin_active = kinematic_velocity is not None
        kin_vel = np.asarray(kinematic_velocity if kin_active else (0.0, 0.0, 0.0), dtype=float)
        _kernels.g2p(
            p.x,
            p.v,
            p.C,
            self.grid_mv,
            cfg.grid_res,
            1.0 / cfg.dx,
            dt,
            p.kinematic,
            kin_active,
            kin_vel,
        )
        self.t += dt
        self.diagnostics.n_substeps += 1

    def advance(self, duration: float, extra_accel_fn=None, kinematic_fn=None):
        """Advance by duration using CFL-limited substeps.

        extra_accel_fn(t) and kinematic_fn(t) sample time-dependent
        external acceleration and the kinematic drive at the start of
        each substep.
        """
        target = self.t + duration
        while self.t < target - 1e-12:
            dt = self.cfg.dt if self.cfg.dt is not None else cfl_dt_limit(self.cfg, self.p)
            dt = min(dt, target - self.t)
            extra = extra_accel_fn(self.t) if extra_accel_fn else (0.0, 0.0, 0.0)
            kin = kinematic_fn(self.t) if kinematic_fn else None
            self.substep(dt, extra, kin)
