"""Session geometry: placeholder clouds and material application.

Review sessions created without an asset file still need something to
simulate, so a deterministic box cloud is generated with one horizontal band
per part. Real assets keep their stored geometry; in both cases the session's
validated per-part materials are applied point-wise before simulation.
"""

from __future__ import annotations

import numpy as np

from ..assets import AssetMetadata, MaterialParams, SimReadyAsset
from ..annotation.session import ObjectDescription

# Common color words -> albedo; unknown words fall back to a stable palette.
COLOR_WORDS: dict[str, tuple[float, float, float]] = {
    "red": (0.80, 0.18, 0.15),
    "orange": (0.92, 0.55, 0.15),
    "yellow": (0.92, 0.85, 0.25),
    "green": (0.25, 0.62, 0.28),
    "blue": (0.22, 0.42, 0.78),
    "purple": (0.52, 0.30, 0.65),
    "brown": (0.48, 0.32, 0.18),
    "black": (0.12, 0.12, 0.12),
    "white": (0.92, 0.92, 0.90),
    "gray": (0.55, 0.55, 0.55),
    "grey": (0.55, 0.55, 0.55),
    "silver": (0.75, 0.77, 0.80),
    "tan": (0.80, 0.68, 0.50),
    "beige": (0.85, 0.78, 0.64),
    "pink": (0.90, 0.55, 0.65),
}

_PALETTE = (
    (0.35, 0.55, 0.80),
    (0.80, 0.45, 0.30),
    (0.45, 0.70, 0.40),
    (0.70, 0.50, 0.75),
    (0.80, 0.70, 0.35),
    (0.40, 0.70, 0.70),
)


def color_for_part(color_word: str | None, index: int) -> tuple[float, float, float]:
    if color_word:
        rgb = COLOR_WORDS.get(color_word.strip().lower())
        if rgb is not None:
            return rgb
    return _PALETTE[index % len(_PALETTE)]


def placeholder_cloud(
    desc: ObjectDescription, n_side: int = 12
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Grid-sampled unit cube split into one horizontal band per part.

    Returns (points, colors, part_labels) in normalized coordinates with the
    cube spanning [0, 1]^3; bands are stacked bottom-up in part order.
    """
    n_parts = len(desc.parts)
    axis = (np.arange(n_side, dtype=np.float32) + 0.5) / n_side
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    points = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1).astype(np.float32)

    labels = np.minimum((points[:, 1] * n_parts).astype(np.int32), n_parts - 1)
    part_colors = np.array(
        [color_for_part(p.color, i) for i, p in enumerate(desc.parts)], np.float32
    )
    colors = part_colors[labels]
    return points, colors, labels


def apply_materials(
    points: np.ndarray,
    colors: np.ndarray,
    part_labels: np.ndarray,
    desc: ObjectDescription,
    materials: dict[str, MaterialParams],
    asset_id: str,
    world_scale: float = 0.4,
) -> SimReadyAsset:
    """Build a simulation-ready asset from geometry plus per-part materials."""
    missing = [p.name for p in desc.parts if p.name not in materials]
    if missing:
        raise ValueError(f"no materials for parts: {', '.join(missing)}")
    if part_labels.min() < 0 or part_labels.max() >= len(desc.parts):
        raise ValueError("part label out of range for the described parts")
    per_point = [materials[desc.parts[int(l)].name] for l in part_labels]
    metadata = AssetMetadata(
        category=desc.shape_name,
        parts=desc.parts,
        world_scale=world_scale,
        asset_id=asset_id,
    )
    return SimReadyAsset.from_materials(points, colors, part_labels, per_point, metadata)
