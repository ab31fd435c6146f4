import math

import numpy as np
import pytest

from simready import _kernels
from simready.assets import (
    AssetMetadata,
    BehaviorType,
    MaterialParams,
    PartInfo,
    SimReadyAsset,
)
from simready.constitutive import (
    clamp_singular_values,
    kirchhoff_neo_hookean,
    kirchhoff_stvk,
    return_map_drucker_prager,
    return_map_von_mises,
    return_map_von_mises_softening,
)
from simready.mpm import (
    ConfigError,
    MPMSim,
    SimConfig,
    SimulationError,
    cfl_dt_limit,
    estimate_particle_volume,
    particles_from_asset,
)


def cube_asset(n_side=6, E=2e5, nu=0.3, rho=1000.0, behavior=BehaviorType.M0,
               sigma_y=None, phi=None, world_scale=0.2):
    g = (np.arange(n_side) + 0.5) / n_side
    pts = np.stack(np.meshgrid(g, g, g, indexing="ij"), axis=-1).reshape(-1, 3).astype(np.float32)
    n = pts.shape[0]
    mats = [
        MaterialParams(E=E, nu=nu, rho=rho, behavior=behavior, sigma_y=sigma_y, phi=phi)
        for _ in range(n)
    ]
    meta = AssetMetadata(
        category="block",
        parts=(PartInfo(name="body"),),
        world_scale=world_scale,
        asset_id="unit-cube",
    )
    return SimReadyAsset.from_materials(
        pts, np.full((n, 3), 0.5, np.float32), np.zeros(n, np.int32), mats, meta
    )


def small_cfg(**kw):
    base = dict(grid_res=16, domain_size=1.0)
    base.update(kw)
    return SimConfig(**base)


def com(p):
    return (p.x * p.mass[:, None]).sum(axis=0) / p.mass.sum()


# --- config validation ----------------------------------------------------

def test_config_defaults_valid():
    SimConfig().validate()


@pytest.mark.parametrize(
    "kw",
    [
        dict(grid_res=4),
        dict(domain_size=-1.0),
        dict(dt=0.0),
        dict(cfl_factor=0.0),
        dict(cfl_factor=1.5),
        dict(ground_friction=-0.1),
        dict(ground_height=5.0),
        dict(wall_cells=0),
        dict(sv_clamp_lo=2.0),
        dict(n_workers=0),
    ],
)
def test_config_rejects(kw):
    with pytest.raises(ConfigError):
        SimConfig(**kw).validate()


def test_fixed_dt_above_cfl_rejected_with_suggestion():
    asset = cube_asset(E=1e9)
    cfg = small_cfg(dt=1e-3)
    p = particles_from_asset(asset, np.array([0.4, 0.5, 0.4]))
    with pytest.raises(ConfigError, match="CFL") as ei:
        MPMSim(cfg, p)
    assert "use dt <=" in str(ei.value)


def test_cfl_limit_formula():
    asset = cube_asset(E=1e6, nu=0.3, rho=1000.0)
    cfg = small_cfg()
    p = particles_from_asset(asset, np.array([0.4, 0.5, 0.4]), velocity=(2.0, 0, 0))
    # wave speed sqrt(E_eff/rho) with E_eff = mu(3 lam + 2 mu)/(mu + lam) = E
    c = math.sqrt(1e6 / 1000.0)
    want = cfg.cfl_factor * cfg.dx / (c + 2.0)
    assert cfl_dt_limit(cfg, p) == pytest.approx(want, rel=1e-6)


def test_ground_plane_tilt():
    point, normal = small_cfg().ground_plane()
    np.testing.assert_allclose(normal, [0, 1, 0])
    assert point[1] == pytest.approx(0.2)
    _, n20 = small_cfg(ground_tilt_deg=20.0).ground_plane()
    th = math.radians(20)
    np.testing.assert_allclose(n20, [-math.sin(th), math.cos(th), 0.0], atol=1e-12)
    assert np.linalg.norm(n20) == pytest.approx(1.0)


# --- particle construction ------------------------------------------------

def test_particles_from_asset_mass_and_volume():
    asset = cube_asset(n_side=8, rho=1234.0, world_scale=0.2)
    p = particles_from_asset(asset, np.array([0.4, 0.4, 0.4]))
    # grid-sampled solid cube: total volume recovered exactly
    cube_vol = 0.2**3
    assert p.vol0.sum() == pytest.approx(cube_vol, rel=1e-6)
    assert p.mass.sum() == pytest.approx(1234.0 * p.vol0.sum(), rel=1e-12)
    assert p.n == 8**3
    np.testing.assert_allclose(p.F, np.tile(np.eye(3), (p.n, 1, 1)))
    np.testing.assert_array_equal(p.v, np.zeros((p.n, 3)))


def test_estimate_particle_volume_random_cloud():
    # random sampling leaves voxel gaps; only the order of magnitude is
    # promised (the absolute scale cancels in the dynamics)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 1, size=(20000, 3))
    v = estimate_particle_volume(pts, world_scale=0.5)
    true_vol = 0.5**3
    assert 0.3 * true_vol < v * 20000 < 1.5 * true_vol


def test_out_of_domain_at_init_names_particle():
    asset = cube_asset()
    p = particles_from_asset(asset, np.array([0.9, 0.5, 0.4]))  # pokes past x wall
    with pytest.raises(SimulationError, match=r"particle \d+"):
        MPMSim(small_cfg(), p)


def test_out_of_domain_during_run_names_particle():
    asset = cube_asset()
    p = particles_from_asset(asset, np.array([0.4, 0.5, 0.4]))
    sim = MPMSim(small_cfg(), p)
    p.x[7] = np.array([0.999, 0.5, 0.5])  # corrupt one particle past the margin
    with pytest.raises(SimulationError, match="particle 7"):
        sim.substep(1e-4)


# --- free fall oracles ----------------------------------------------------

def test_free_fall_matches_discrete_ballistics_exactly():
    # no contact: COM must follow symplectic Euler ballistics to rounding
    asset = cube_asset(E=2e5)
    cfg = small_cfg(dt=5e-4, gravity=(0.0, -9.8, 0.0))
    p = particles_from_asset(asset, np.array([0.4, 0.6, 0.4]))
    sim = MPMSim(cfg, p)
    y0 = com(p)[1]
    n_steps = 100
    for _ in range(n_steps):
        sim.substep(cfg.dt)
    # v_k = -g k dt; y_n = y0 - g dt^2 (1 + ... + n)
    want = y0 - 9.8 * cfg.dt**2 * n_steps * (n_steps + 1) / 2
    assert com(p)[1] == pytest.approx(want, abs=1e-9)
    # lateral drift is pure float roundoff
    assert com(p)[0] == pytest.approx(0.5, abs=1e-8)
    assert com(p)[2] == pytest.approx(0.5, abs=1e-8)


def test_free_fall_keeps_F_identity():
    asset = cube_asset(E=2e5)
    p = particles_from_asset(asset, np.array([0.4, 0.6, 0.4]))
    sim = MPMSim(small_cfg(), p)
    sim.advance(0.05)
    assert np.abs(p.F - np.eye(3)).max() < 1e-12
    # all particles share the same velocity
    assert np.ptp(p.v, axis=0).max() < 1e-12


def test_free_fall_half_g_t_squared():
    asset = cube_asset(E=2e5)
    cfg = small_cfg(dt=1e-4)
    p = particles_from_asset(asset, np.array([0.4, 0.6, 0.4]))
    sim = MPMSim(cfg, p)
    y0 = com(p)[1]
    sim.advance(0.2)
    assert y0 - com(p)[1] == pytest.approx(0.5 * 9.8 * 0.2**2, abs=1e-3)


# --- conservation ---------------------------------------------------------

def test_momentum_conserved_without_external_forces():
    asset = cube_asset(E=2e5)
    cfg = small_cfg(gravity=(0.0, 0.0, 0.0))
    rng = np.random.default_rng(4)
    p = particles_from_asset(asset, np.array([0.4, 0.45, 0.4]))
    p.v[:] = rng.normal(scale=0.05, size=(p.n, 3))
    sim = MPMSim(cfg, p)
    mom0 = (p.mass[:, None] * p.v).sum(axis=0)
    for _ in range(20):
        sim.substep(2e-4)
    mom = (p.mass[:, None] * p.v).sum(axis=0)
    np.testing.assert_allclose(mom, mom0, atol=1e-12 * max(1.0, np.abs(mom0).max() / 1e-3))


def test_mass_conserved_on_grid():
    asset = cube_asset()
    p = particles_from_asset(asset, np.array([0.4, 0.5, 0.4]))
    sim = MPMSim(small_cfg(), p)
    sim.substep(1e-4)
    assert sim.grid_m.sum() == pytest.approx(p.mass.sum(), rel=1e-12)


# --- determinism ----------------------------------------------------------

def run_drop(n_workers):
    asset = cube_asset(E=2e5)
    cfg = small_cfg(n_workers=n_workers)
    p = particles_from_asset(asset, np.array([0.4, 0.5, 0.4]))
    sim = MPMSim(cfg, p)
    sim.advance(0.12)
    return p.x.copy(), p.v.copy(), p.F.copy()


def test_bitwise_deterministic_across_runs_and_workers():
    x1, v1, F1 = run_drop(1)
    x2, v2, F2 = run_drop(1)
    x4, v4, F4 = run_drop(4)
    assert np.array_equal(x1, x2) and np.array_equal(v1, v2) and np.array_equal(F1, F2)
    assert np.array_equal(x1, x4) and np.array_equal(v1, v4) and np.array_equal(F1, F4)


# --- ground contact and friction ------------------------------------------

def test_drop_settles_on_ground():
    asset = cube_asset(E=2e5, nu=0.4)
    cfg = small_cfg()
    p = particles_from_asset(asset, np.array([0.4, 0.35, 0.4]))
    sim = MPMSim(cfg, p)
    sim.advance(0.6)
    # resting on the plane: nothing sinks more than a cell below it and
    # the body is nearly still
    assert p.x[:, 1].min() > cfg.ground_height - 1.5 * cfg.dx
    assert p.max_speed() < 0.15


def test_friction_controls_sliding_on_tilt():
    def slide_distance(friction):
        asset = cube_asset(E=3e4)
        cfg = small_cfg(ground_tilt_deg=20.0, ground_friction=friction)
        point, normal = cfg.ground_plane()
        p = particles_from_asset(asset, np.array([0.4, cfg.ground_height, 0.4]))
        d = (p.x - point) @ normal
        p.x += (0.1 * cfg.dx - d.min()) * normal
        sim = MPMSim(cfg, p)
        x0 = com(p).copy()
        sim.advance(0.5)
        return abs(com(p)[0] - x0[0])

    slippery = slide_distance(0.0)
    grippy = slide_distance(1.2)
    # tan(20 deg) = 0.36: friction 1.2 holds, frictionless slides away
    assert slippery > 10 * max(grippy, 1e-6)
    assert slippery > 0.05


# --- kernel vs reference constitutive maps --------------------------------

def rand_particle_batch(seed, n=40):
    """Random particle states spanning all behaviors and big strains."""
    rng = np.random.default_rng(seed)
    F = np.empty((n, 3, 3))
    for i in range(n):
        A = rng.normal(size=(3, 3)) * 0.4
        F[i] = np.eye(3) + A
        if np.linalg.det(F[i]) < 0.2:  # keep well away from inversion
            F[i] = np.eye(3) + 0.1 * A
    C = rng.normal(size=(n, 3, 3)) * 0.5
    mu = rng.uniform(1e5, 1e6, size=n)
    lam = rng.uniform(1e5, 2e6, size=n)
    behavior = (np.arange(n) % 4).astype(np.int32)
    sigma_y0 = rng.uniform(1e3, 1e5, size=n)
    sigma_y0[behavior == 0] = 0.0
    sigma_y0[behavior == 3] = 0.0
    eps_p = rng.uniform(0.0, 0.05, size=n)
    eps_p[behavior != 1] = 0.0
    sigma_y_cur = sigma_y0 * np.maximum(1 - 5.0 * eps_p, 0.1)
    phi = rng.uniform(0.1, 1.2, size=n)
    alpha = np.sqrt(2 / 3) * 2 * np.sin(phi) / (3 - np.sin(phi))
    alpha[behavior != 3] = 0.0
    return F, C, mu, lam, behavior, sigma_y0, sigma_y_cur, eps_p, alpha


def test_kernel_matches_reference_constitutive():
    F, C, mu, lam, behavior, sy0, sy_cur, eps_p, alpha = rand_particle_batch(0)
    n = F.shape[0]
    dt = 1e-3
    F_k = F.copy()
    eps_p_k = eps_p.copy()
    sy_cur_k = sy_cur.copy()
    stress_k = np.empty((n, 3, 3))
    _kernels.update_f_and_stress(
        F_k, C, mu, lam, behavior, sy0, sy_cur_k, eps_p_k, alpha,
        dt, 0.05, 4.0, 5.0, 0.1, stress_k,
    )
    for i in range(n):
        Ft = (np.eye(3) + dt * C[i]) @ F[i]
        b = behavior[i]
        if b == 0:
            Fr = Ft
        elif b == 1:
            Fr, ep_r, sy_r = return_map_von_mises_softening(
                Ft, mu[i], eps_p[i], sy_cur[i], sy0[i]
            )
            assert eps_p_k[i] == pytest.approx(ep_r, abs=1e-12)
            assert sy_cur_k[i] == pytest.approx(sy_r, rel=1e-12)
        elif b == 2:
            Fr = return_map_von_mises(Ft, mu[i], sy0[i])
        else:
            Fr = return_map_drucker_prager(Ft, mu[i], lam[i], math.asin(
                # invert alpha back to phi for the reference call
                3 * alpha[i] / (2 * math.sqrt(2 / 3) + alpha[i])
            ))
        Fr, _ = clamp_singular_values(Fr, 0.05, 4.0)
        np.testing.assert_allclose(F_k[i], Fr, atol=1e-9)
        tau_ref = kirchhoff_stvk(Fr, mu[i], lam[i]) if b == 3 else kirchhoff_neo_hookean(Fr, mu[i], lam[i])
        np.testing.assert_allclose(stress_k[i], tau_ref, rtol=1e-7, atol=1e-3)


def test_kernel_counts_clamped_particles():
    n = 3
    F = np.tile(np.eye(3), (n, 1, 1))
    F[0] = np.diag([10.0, 1.0, 1.0])  # way outside the band
    C = np.zeros((n, 3, 3))
    stress = np.empty((n, 3, 3))
    n_clamped = _kernels.update_f_and_stress(
        F, C, np.full(n, 1e5), np.full(n, 1e5),
        np.full(n, 2, np.int32), np.full(n, 1e12), np.full(n, 1e12),
        np.zeros(n), np.zeros(n), 1e-4, 0.05, 4.0, 5.0, 0.1, stress,
    )
    assert n_clamped == 1
    assert np.linalg.svd(F[0], compute_uv=False).max() == pytest.approx(4.0)


# --- kinematic drive ------------------------------------------------------

def test_kinematic_particles_follow_drive_exactly():
    asset = cube_asset(E=2e5)
    cfg = small_cfg()
    p = particles_from_asset(asset, np.array([0.3, 0.5, 0.4]))
    p.kinematic[: p.n // 2] = True
    sim = MPMSim(cfg, p)
    x0 = p.x[: p.n // 2].copy()
    vel = (0.25, 0.0, 0.0)
    t = 0.0
    for _ in range(50):
        sim.substep(2e-4, kinematic_velocity=vel)
        t += 2e-4
    np.testing.assert_allclose(p.x[: p.n // 2], x0 + np.array(vel) * t, atol=1e-12)
    np.testing.assert_allclose(p.v[: p.n // 2], np.tile(vel, (p.n // 2, 1)), atol=1e-12)
