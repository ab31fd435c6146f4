#!/usr/bin/env python3
"""Sweep Young's modulus for a dropped cube and report peak distortion.

Peak distortion is the largest per-frame Chamfer distance to the rest
shape after removing rigid translation. Stiffer cubes should deform
strictly less; this prints the sweep as a table for eyeballing.
"""

import argparse
import time

import numpy as np

from simready.assets import (
    AssetMetadata,
    BehaviorType,
    MaterialParams,
    PartInfo,
    SimReadyAsset,
)
from simready.metrics import chamfer_distance
from simready.mpm import SimConfig
from simready.scenarios import DropScenario
from simready.simulate import run_simulation


def cube(E: float, n_side: int = 8) -> SimReadyAsset:
    xs = (np.arange(n_side) + 0.5) / n_side
    pts = np.stack(np.meshgrid(xs, xs, xs, indexing="ij"), axis=-1).reshape(-1, 3)
    n = pts.shape[0]
    m = MaterialParams(E=E, nu=0.3, rho=500.0, behavior=BehaviorType.M0)
    return SimReadyAsset.from_materials(
        pts.astype(np.float32),
        np.full((n, 3), 0.5, np.float32),
        np.zeros(n, np.int32),
        [m] * n,
        AssetMetadata("cube", (PartInfo("body", "plastic"),), world_scale=0.25),
    )


def peak_distortion(E: float, duration: float, grid_res: int) -> tuple[float, float]:
    t0 = time.perf_counter()
    traj = run_simulation(
        cube(E), DropScenario(drop_height=0.5), SimConfig(grid_res=grid_res),
        duration=duration, fps=24,
    )
    rest = traj.frames[0] - traj.frames[0].mean(axis=0)
    peak = max(
        chamfer_distance(traj.frames[f] - traj.frames[f].mean(axis=0), rest)
        for f in range(1, traj.n_frames)
    )
    return peak, time.perf_counter() - t0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--moduli", type=float, nargs="+", default=[1e5, 1e6, 1e7, 1e8, 1e9])
    ap.add_argument("--duration", type=float, default=0.45)
    ap.add_argument("--grid-res", type=int, default=32)
    args = ap.parse_args()

    print(f"{'E [Pa]':>10}  {'peak distortion':>16}  {'wall [s]':>8}")
    prev = None
    for E in args.moduli:
        peak, wall = peak_distortion(E, args.duration, args.grid_res)
        marker = "" if prev is None or peak < prev else "  <- not monotone"
        print(f"{E:>10.1e}  {peak:>16.6e}  {wall:>8.1f}{marker}")
        prev = peak


if __name__ == "__main__":
    main()
