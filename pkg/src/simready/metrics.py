"""Evaluation metrics for geometry, materials, and simulated motion.

Geometry metrics operate on bare point clouds; material metrics on the
per-point feature encoding; motion metrics on trajectories with
synchronized timestamps. A z-score helper normalizes scores across
methods for cross-metric aggregation.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .assets import FEATURE_DIM, SimReadyAsset
from .trajectory import Trajectory

DEFAULT_VOXEL_RES = 64
DEFAULT_F_SCORE_TAU = 0.02
TIME_MATCH_TOL = 1e-9


class MetricsError(ValueError):
    """Metric inputs are unusable (empty, mismatched, unsynchronized)."""


def _as_cloud(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise MetricsError(f"expected a nonempty (N, 3) point cloud, got shape {pts.shape}")
    return pts


def chamfer_distance(a, b) -> float:
    """Symmetric mean squared nearest-neighbor distance, halved."""
    a = _as_cloud(a)
    b = _as_cloud(b)
    d_ab, _ = cKDTree(b).query(a)
    d_ba, _ = cKDTree(a).query(b)
    return 0.5 * (float(np.mean(d_ab**2)) + float(np.mean(d_ba**2)))


def sim_chamfer(a: Trajectory, b: Trajectory, time_tol: float = TIME_MATCH_TOL) -> float:
    """Mean Chamfer distance over frames with matching timestamps.

    Frames count as synchronized when their stamps agree within
    time_tol. Unmatched frames are ignored; no matches is an error.
    """
    ta = np.asarray(a.timestamps)
    tb = np.asarray(b.timestamps)
    j = np.searchsorted(tb, ta)
    total = 0.0
    count = 0
    for i, t in enumerate(ta):
        for cand in (j[i] - 1, j[i]):
            if 0 <= cand < len(tb) and abs(tb[cand] - t) <= time_tol:
                total += chamfer_distance(a.frames[i], b.frames[cand])
                count += 1
                break
    if count == 0:
        raise MetricsError(
            f"no synchronized frames within {time_tol} s between trajectories "
            f"({a.n_frames} and {b.n_frames} frames)"
        )
    return total / count


def voxelize(points, lo, hi, res: int = DEFAULT_VOXEL_RES) -> np.ndarray:
    """Boolean occupancy grid: a voxel is set if it contains a point."""
    pts = _as_cloud(points)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    extent = np.maximum(hi - lo, 1e-12)
    ijk = ((pts - lo) / extent * res).astype(int)
    grid = np.zeros((res, res, res), dtype=bool)
    inside = np.all((ijk >= 0) & (ijk < res), axis=1)
    # points exactly on the upper bound belong to the last voxel
    on_edge = np.all(ijk >= 0, axis=1) & np.any(ijk == res, axis=1) & np.all(ijk <= res, axis=1)
    ijk_edge = np.minimum(ijk[on_edge], res - 1)
    ijk_in = ijk[inside]
    grid[ijk_in[:, 0], ijk_in[:, 1], ijk_in[:, 2]] = True
    grid[ijk_edge[:, 0], ijk_edge[:, 1], ijk_edge[:, 2]] = True
    return grid


def occupancy_iou(a, b, res: int = DEFAULT_VOXEL_RES) -> float:
    """Intersection over union of voxel occupancies on the joint bounds.

    Two empty grids count as identical (IoU 1).
    """
    a = _as_cloud(a)
    b = _as_cloud(b)
    lo = np.minimum(a.min(axis=0), b.min(axis=0))
    hi = np.maximum(a.max(axis=0), b.max(axis=0))
    ga = voxelize(a, lo, hi, res)
    gb = voxelize(b, lo, hi, res)
    union = np.logical_or(ga, gb).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(ga, gb).sum() / union)


def f_score(pred, gt, tau: float = DEFAULT_F_SCORE_TAU) -> float:
    """Harmonic mean of precision and recall at distance threshold tau."""
    pred = _as_cloud(pred)
    gt = _as_cloud(gt)
    if not tau > 0:
        raise MetricsError(f"tau={tau} must be > 0")
    d_pg, _ = cKDTree(gt).query(pred)
    d_gp, _ = cKDTree(pred).query(gt)
    precision = float(np.mean(d_pg <= tau))
    recall = float(np.mean(d_gp <= tau))
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def zscore_calibrate(values) -> np.ndarray:
    """Normalize per-method scores to zero mean and unit population std.

    Scores that are identical across methods carry no signal and map to
    zeros. Fewer than two methods cannot be calibrated.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise MetricsError(f"z-score calibration needs at least 2 scores, got {v.size}")
    std = float(v.std())  # population std
    if std == 0.0:
        return np.zeros_like(v)
    return (v - v.mean()) / std


@dataclass(frozen=True)
class GeometryMetrics:
    chamfer: float
    iou: float
    f_score: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MaterialMetrics:
    """Mean absolute errors on the feature encoding, plus behavior hit rate.

    E and sigma_y compare on base-10 logs; sentinel slots (sigma_y of
    non-yielding, phi of non-granular) compare as their sentinels.
    """

    mae_log10_E: float
    mae_nu: float
    mae_log10_sigma_y: float
    mae_phi: float
    mae_rho: float
    behavior_accuracy: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsReport:
    geometry: GeometryMetrics | None = None
    material: MaterialMetrics | None = None
    sim_chamfer: float | None = None

    def to_dict(self) -> dict:
        return {
            "geometry": self.geometry.to_dict() if self.geometry else None,
            "material": self.material.to_dict() if self.material else None,
            "sim_chamfer": self.sim_chamfer,
        }


def compare_clouds(pred, gt, res: int = DEFAULT_VOXEL_RES, tau: float = DEFAULT_F_SCORE_TAU) -> GeometryMetrics:
    return GeometryMetrics(
        chamfer=chamfer_distance(pred, gt),
        iou=occupancy_iou(pred, gt, res=res),
        f_score=f_score(pred, gt, tau=tau),
    )


def compare_material_features(pred_features, gt_features) -> MaterialMetrics:
    pf = np.asarray(pred_features, dtype=float)
    gf = np.asarray(gt_features, dtype=float)
    if pf.shape != gf.shape or pf.ndim != 2 or pf.shape[1] != FEATURE_DIM:
        raise MetricsError(
            f"feature matrices must share shape (N, {FEATURE_DIM}); "
            f"got {pf.shape} and {gf.shape}"
        )
    err = np.abs(pf - gf)
    pred_b = np.argmax(pf[:, 5:], axis=1)
    gt_b = np.argmax(gf[:, 5:], axis=1)
    return MaterialMetrics(
        mae_log10_E=float(err[:, 0].mean()),
        mae_nu=float(err[:, 1].mean()),
        mae_log10_sigma_y=float(err[:, 2].mean()),
        mae_phi=float(err[:, 3].mean()),
        mae_rho=float(err[:, 4].mean()),
        behavior_accuracy=float(np.mean(pred_b == gt_b)),
    )


def compare_assets(pred: SimReadyAsset, gt: SimReadyAsset,
                   res: int = DEFAULT_VOXEL_RES, tau: float = DEFAULT_F_SCORE_TAU) -> MetricsReport:
    """Geometry on the point clouds; materials only when the clouds are
    in correspondence (same point count)."""
    geometry = compare_clouds(pred.points, gt.points, res=res, tau=tau)
    material = None
    if pred.n_points == gt.n_points:
        material = compare_material_features(pred.feature_matrix(), gt.feature_matrix())
    return MetricsReport(geometry=geometry, material=material)


def compare_trajectories(a: Trajectory, b: Trajectory, time_tol: float = TIME_MATCH_TOL) -> MetricsReport:
    return MetricsReport(sim_chamfer=sim_chamfer(a, b, time_tol=time_tol))
