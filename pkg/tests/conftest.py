import numpy as np
import pytest

from simready.assets import (
    AssetMetadata,
    BehaviorType,
    MaterialParams,
    NormalizationTransform,
    PartInfo,
    SimReadyAsset,
)


def make_test_asset(n=64, seed=0, behaviors=(0, 1, 2, 3), n_parts=2):
    """Small mixed-behavior asset with deterministic content."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.05, 0.95, size=(n, 3)).astype(np.float32)
    colors = rng.uniform(0, 1, size=(n, 3)).astype(np.float32)
    labels = rng.integers(0, n_parts, size=n).astype(np.int32)
    materials = []
    for i in range(n):
        b = BehaviorType(int(behaviors[i % len(behaviors)]))
        materials.append(
            MaterialParams(
                E=float(rng.uniform(1e5, 1e8)),
                nu=float(rng.uniform(0.1, 0.45)),
                rho=float(rng.uniform(500, 3000)),
                behavior=b,
                sigma_y=float(rng.uniform(1e3, 1e6)) if b.requires_sigma_y else None,
                phi=float(rng.uniform(0.2, 1.2)) if b.requires_phi else None,
            )
        )
    meta = AssetMetadata(
        category="test",
        parts=tuple(PartInfo(name=f"part{j}", coarse_material="plastic") for j in range(n_parts)),
        normalization=NormalizationTransform.identity(),
        world_scale=1.0,
        asset_id="test-asset",
    )
    return SimReadyAsset.from_materials(pts, colors, labels, materials, meta)


@pytest.fixture
def small_asset():
    return make_test_asset(n=32, seed=7)
