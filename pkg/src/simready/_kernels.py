"""Numba-compiled inner loops of the MPM engine.

Everything here runs serially and in a fixed particle/node order, so a
run is reproducible bit for bit no matter how many workers the caller
thinks it has. The math mirrors the reference functions in
`constitutive`; tests pin the two against each other.

Behavior codes: 0 elastic, 1 von Mises with softening, 2 von Mises,
3 Drucker-Prager on StVK.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def _quadratic_weights(fx):
    """Per-axis quadratic B-spline weights for fractional position fx."""
    w = np.empty((3, 3))
    for a in range(3):
        w[0, a] = 0.5 * (1.5 - fx[a]) ** 2
        w[1, a] = 0.75 - (fx[a] - 1.0) ** 2
        w[2, a] = 0.5 * (fx[a] - 0.5) ** 2
    return w


@njit(cache=True)
def update_f_and_stress(
    F,
    C,
    mu_arr,
    lam_arr,
    behavior,
    sigma_y0,
    sigma_y_cur,
    eps_p,
    alpha_dp,
    dt,
    sv_lo,
    sv_hi,
    soft_h,
    soft_r_min,
    stress_out,
):
    """Advance F by the affine velocity field, apply the plastic return
    map and singular value clamp, and write the Kirchhoff stress.

    Returns the number of particles whose singular values were clamped
    this call.
    """
    n = F.shape[0]
    n_clamped = 0
    eye = np.eye(3)
    log_lo = math.log(sv_lo)
    log_hi = math.log(sv_hi)
    c23 = math.sqrt(2.0 / 3.0)
    for p in range(n):
        Fp = (eye + dt * C[p]) @ F[p]
        b = behavior[p]
        mu = mu_arr[p]
        lam = lam_arr[p]

        if b == 0:
            # elastic fast path: small deformations cannot leave the
            # clamp band, so skip the SVD entirely
            d2 = 0.0
            for i in range(3):
                for j in range(3):
                    d = Fp[i, j] - eye[i, j]
                    d2 += d * d
            if d2 < 0.25:
                F[p] = Fp
                J = (
                    Fp[0, 0] * (Fp[1, 1] * Fp[2, 2] - Fp[1, 2] * Fp[2, 1])
                    - Fp[0, 1] * (Fp[1, 0] * Fp[2, 2] - Fp[1, 2] * Fp[2, 0])
                    + Fp[0, 2] * (Fp[1, 0] * Fp[2, 1] - Fp[1, 1] * Fp[2, 0])
                )
                logJ = math.log(J)
                tau = mu * (Fp @ Fp.T)
                for i in range(3):
                    tau[i, i] += lam * logJ - mu
                stress_out[p] = tau
                continue

        U, sig, Vt = np.linalg.svd(Fp)
        eps = np.empty(3)
        for k in range(3):
            eps[k] = math.log(max(sig[k], 1e-12))

        if b == 1 or b == 2:
            tr = eps[0] + eps[1] + eps[2]
            dev = np.empty(3)
            dev_norm2 = 0.0
            for k in range(3):
                dev[k] = eps[k] - tr / 3.0
                dev_norm2 += dev[k] * dev[k]
            dev_norm = math.sqrt(dev_norm2)
            sy = sigma_y_cur[p] if b == 1 else sigma_y0[p]
            t_cur = c23 * sy / (2.0 * mu)
            if dev_norm > t_cur:
                if b == 2:
                    dg = dev_norm - t_cur
                else:
                    # consistent softening solve (see constitutive)
                    s0 = sigma_y0[p]
                    t_floor = c23 * s0 * soft_r_min / (2.0 * mu)
                    K = soft_h * s0 / (3.0 * mu)
                    dg = -1.0
                    if K < 1.0:
                        dg_lin = (dev_norm - t_cur) / (1.0 - K)
                        if 1.0 - soft_h * (eps_p[p] + c23 * dg_lin) >= soft_r_min:
                            dg = dg_lin
                    if dg < 0.0:
                        dg = dev_norm - t_floor
                    e_new = eps_p[p] + c23 * dg
                    s_new = s0 * max(1.0 - soft_h * e_new, soft_r_min)
                    if s_new > sigma_y_cur[p]:
                        s_new = sigma_y_cur[p]
                    eps_p[p] = e_new
                    sigma_y_cur[p] = s_new
                for k in range(3):
                    eps[k] -= dg * dev[k] / dev_norm
        elif b == 3:
            tr = eps[0] + eps[1] + eps[2]
            if tr > 0.0:
                for k in range(3):
                    eps[k] = 0.0
            else:
                dev = np.empty(3)
                dev_norm2 = 0.0
                for k in range(3):
                    dev[k] = eps[k] - tr / 3.0
                    dev_norm2 += dev[k] * dev[k]
                dev_norm = math.sqrt(dev_norm2)
                dg = dev_norm + alpha_dp[p] * (3.0 * lam + 2.0 * mu) / (2.0 * mu) * tr
                if dg > 0.0 and dev_norm > 0.0:
                    for k in range(3):
                        eps[k] -= dg * dev[k] / dev_norm

        clamped = False
        for k in range(3):
            if eps[k] < log_lo:
                eps[k] = log_lo
                clamped = True
            elif eps[k] > log_hi:
                eps[k] = log_hi
                clamped = True
        if clamped:
            n_clamped += 1

        s_new = np.empty(3)
        for k in range(3):
            s_new[k] = math.exp(eps[k])
        Fp = (U * s_new) @ Vt
        F[p] = Fp

        if b == 3:
            # StVK Kirchhoff stress
            G = 0.5 * (Fp.T @ Fp - eye)
            trG = G[0, 0] + G[1, 1] + G[2, 2]
            S = 2.0 * mu * G
            for i in range(3):
                S[i, i] += lam * trG
            stress_out[p] = Fp @ S @ Fp.T
        else:
            # neo-Hookean Kirchhoff stress; J from singular values so an
            # inverted element cannot feed log a negative number
            J = s_new[0] * s_new[1] * s_new[2]
            logJ = math.log(J)
            tau = mu * (Fp @ Fp.T)
            for i in range(3):
                tau[i, i] += lam * logJ - mu
            stress_out[p] = tau
    return n_clamped


@njit(cache=True)
def p2g(x, v, C, stress, mass, vol0, grid_m, grid_mv, n_grid, dx, inv_dx, dt):
    """Scatter mass and momentum to the grid (APIC + stress force).

    Only the node box touched by the particles is zeroed and written;
    later stages stay inside the returned box, so stale values outside
    it are never read. Returns (err, lo0, hi0, lo1, hi1, lo2, hi2) with
    err = -1 on success, else the index of the first particle whose
    spline support leaves the grid. Box bounds are inclusive.
    """
    n = x.shape[0]
    lo = np.empty(3, np.int64)
    hi = np.empty(3, np.int64)
    for a in range(3):
        lo[a] = n_grid
        hi[a] = -1
    for p in range(n):
        for a in range(3):
            b = int(x[p, a] * inv_dx - 0.5)
            if b < lo[a]:
                lo[a] = b
            if b + 2 > hi[a]:
                hi[a] = b + 2
    for a in range(3):
        if lo[a] < 0 or hi[a] >= n_grid:
            # find the offending particle for the error message
            for p in range(n):
                bx = int(x[p, 0] * inv_dx - 0.5)
                by = int(x[p, 1] * inv_dx - 0.5)
                bz = int(x[p, 2] * inv_dx - 0.5)
                if (
                    bx < 0
                    or by < 0
                    or bz < 0
                    or bx + 2 >= n_grid
                    or by + 2 >= n_grid
                    or bz + 2 >= n_grid
                ):
                    return p, 0, 0, 0, 0, 0, 0
    grid_m[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1] = 0.0
    grid_mv[lo[0] : hi[0] + 1, lo[1] : hi[1] + 1, lo[2] : hi[2] + 1, :] = 0.0
    stress_coeff = -dt * 4.0 * inv_dx * inv_dx
    for p in range(n):
        bx = int(x[p, 0] * inv_dx - 0.5)
        by = int(x[p, 1] * inv_dx - 0.5)
        bz = int(x[p, 2] * inv_dx - 0.5)
        fx = np.empty(3)
        fx[0] = x[p, 0] * inv_dx - bx
        fx[1] = x[p, 1] * inv_dx - by
        fx[2] = x[p, 2] * inv_dx - bz
        w = _quadratic_weights(fx)
        m = mass[p]
        affine = stress_coeff * vol0[p] * stress[p] + m * C[p]
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    weight = w[i, 0] * w[j, 1] * w[k, 2]
                    dp0 = (i - fx[0]) * dx
                    dp1 = (j - fx[1]) * dx
                    dp2 = (k - fx[2]) * dx
                    gi = bx + i
                    gj = by + j
                    gk = bz + k
                    grid_m[gi, gj, gk] += weight * m
                    grid_mv[gi, gj, gk, 0] += weight * (
                        m * v[p, 0] + affine[0, 0] * dp0 + affine[0, 1] * dp1 + affine[0, 2] * dp2
                    )
                    grid_mv[gi, gj, gk, 1] += weight * (
                        m * v[p, 1] + affine[1, 0] * dp0 + affine[1, 1] * dp1 + affine[1, 2] * dp2
                    )
                    grid_mv[gi, gj, gk, 2] += weight * (
                        m * v[p, 2] + affine[2, 0] * dp0 + affine[2, 1] * dp1 + affine[2, 2] * dp2
                    )
    return -1, lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]


@njit(cache=True)
def grid_update(
    grid_m,
    grid_mv,
    box,
    n_grid,
    dx,
    dt,
    accel,
    wall_cells,
    ground_point,
    ground_normal,
    ground_friction,
    ground_band,
):
    """Momentum to velocity, external acceleration, then boundaries.

    Only nodes inside box (inclusive bounds from p2g) are touched.
    Domain walls are free-slip. Nodes within ground_band above the
    ground plane (and all below it) lose inward normal velocity and get
    Coulomb friction on the tangential part; the band keeps the full
    spline support of resting bodies constrained, without it they creep
    downslope through the unconstrained nodes just above the plane.
    grid_mv holds velocities afterwards.
    """
    hi = n_grid - 1 - wall_cells
    for i in range(box[0], box[1] + 1):
        for j in range(box[2], box[3] + 1):
            for k in range(box[4], box[5] + 1):
                m = grid_m[i, j, k]
                if m <= 0.0:
                    continue
                v0 = grid_mv[i, j, k, 0] / m + dt * accel[0]
                v1 = grid_mv[i, j, k, 1] / m + dt * accel[1]
                v2 = grid_mv[i, j, k, 2] / m + dt * accel[2]
                if i < wall_cells and v0 < 0.0:
                    v0 = 0.0
                if i > hi and v0 > 0.0:
                    v0 = 0.0
                if j < wall_cells and v1 < 0.0:
                    v1 = 0.0
                if j > hi and v1 > 0.0:
                    v1 = 0.0
                if k < wall_cells and v2 < 0.0:
                    v2 = 0.0
                if k > hi and v2 > 0.0:
                    v2 = 0.0
                d = (
                    (i * dx - ground_point[0]) * ground_normal[0]
                    + (j * dx - ground_point[1]) * ground_normal[1]
                    + (k * dx - ground_point[2]) * ground_normal[2]
                )
                if d < ground_band:
                    vn = v0 * ground_normal[0] + v1 * ground_normal[1] + v2 * ground_normal[2]
                    if vn < 0.0:
                        t0 = v0 - vn * ground_normal[0]
                        t1 = v1 - vn * ground_normal[1]
                        t2 = v2 - vn * ground_normal[2]
                        tn = math.sqrt(t0 * t0 + t1 * t1 + t2 * t2)
                        if tn > 1e-12:
                            scale = 1.0 - ground_friction * (-vn) / tn
                            if scale < 0.0:
                                scale = 0.0
                            v0 = scale * t0
                            v1 = scale * t1
                            v2 = scale * t2
                        else:
                            v0 = 0.0
                            v1 = 0.0
                            v2 = 0.0
                grid_mv[i, j, k, 0] = v0
                grid_mv[i, j, k, 1] = v1
                grid_mv[i, j, k, 2] = v2


@njit(cache=True)
def g2p(x, v, C, grid_v, n_grid, inv_dx, dt, kin_flag, kin_active, kin_vel):
    """Gather velocities and affine field back to particles and advect.

    Kinematically driven particles (kin_flag set, while kin_active) move
    at kin_vel exactly; they still gather C so they stay coupled to the
    deformation of their neighborhood.
    """
    n = x.shape[0]
    for p in range(n):
        bx = int(x[p, 0] * inv_dx - 0.5)
        by = int(x[p, 1] * inv_dx - 0.5)
        bz = int(x[p, 2] * inv_dx - 0.5)
        fx = np.empty(3)
        fx[0] = x[p, 0] * inv_dx - bx
        fx[1] = x[p, 1] * inv_dx - by
        fx[2] = x[p, 2] * inv_dx - bz
        w = _quadratic_weights(fx)
        nv0 = 0.0
        nv1 = 0.0
        nv2 = 0.0
        nC = np.zeros((3, 3))
        for i in range(3):
            for j in range(3):
                for k in range(3):
                    weight = w[i, 0] * w[j, 1] * w[k, 2]
                    gi = bx + i
                    gj = by + j
                    gk = bz + k
                    gv0 = grid_v[gi, gj, gk, 0]
                    gv1 = grid_v[gi, gj, gk, 1]
                    gv2 = grid_v[gi, gj, gk, 2]
                    nv0 += weight * gv0
                    nv1 += weight * gv1
                    nv2 += weight * gv2
                    c = 4.0 * inv_dx * weight
                    dp0 = i - fx[0]
                    dp1 = j - fx[1]
                    dp2 = k - fx[2]
                    nC[0, 0] += c * gv0 * dp0
                    nC[0, 1] += c * gv0 * dp1
                    nC[0, 2] += c * gv0 * dp2
                    nC[1, 0] += c * gv1 * dp0
                    nC[1, 1] += c * gv1 * dp1
                    nC[1, 2] += c * gv1 * dp2
                    nC[2, 0] += c * gv2 * dp0
                    nC[2, 1] += c * gv2 * dp1
                    nC[2, 2] += c * gv2 * dp2
        C[p] = nC
        if kin_active and kin_flag[p]:
            v[p, 0] = kin_vel[0]
            v[p, 1] = kin_vel[1]
            v[p, 2] = kin_vel[2]
        else:
            v[p, 0] = nv0
            v[p, 1] = nv1
            v[p, 2] = nv2
        x[p, 0] += dt * v[p, 0]
        x[p, 1] += dt * v[p, 1]
        x[p, 2] += dt * v[p, 2]
