"""Reference material proposals used by the mock client and offline demos.

One plausible parameter set per coarse material, kept inside the allowed combo
table and the asset parameter ranges, so a scripted annotation round always
validates. Friction angles are in degrees, matching the response convention.
"""

from __future__ import annotations

import json
from typing import TYPE_CHECKING

from .catalogs import FINE_MATERIAL_CATALOG

if TYPE_CHECKING:
    from .session import ObjectDescription

REFERENCE_PARAMETERS: dict[str, dict] = {
    "ceramic": {"CID": "M1", "E": 7e10, "nu": 0.22, "sigma_y": 1e8, "rho": 2500},
    "fabric": {"CID": "M0", "E": 5e5, "nu": 0.3, "rho": 300},
    "leather": {"CID": "M1", "E": 1e7, "nu": 0.4, "sigma_y": 5e6, "rho": 900},
    "metal": {"CID": "M2", "E": 2e11, "nu": 0.3, "sigma_y": 2.5e8, "rho": 7800},
    "plant": {"CID": "M0", "E": 3e6, "nu": 0.35, "rho": 500},
    "plastic": {"CID": "M1", "E": 2e9, "nu": 0.35, "sigma_y": 5e7, "rho": 1100},
    "soil": {"CID": "M3", "E": 2e7, "nu": 0.3, "phi": 35.0, "rho": 1600},
    "wood": {"CID": "M1", "E": 1e10, "nu": 0.35, "sigma_y": 4e7, "rho": 600},
}


def reference_fine_response(desc: "ObjectDescription") -> str:
    """Round-one answer picking the first catalog entry for each catalog part."""
    answer = {
        p.name: FINE_MATERIAL_CATALOG[p.coarse_material][0]
        for p in desc.parts
        if p.coarse_material in FINE_MATERIAL_CATALOG
    }
    return json.dumps(answer, indent=2)


def reference_parameter_response(desc: "ObjectDescription", scale: float = 1.0) -> str:
    """Round-two answer from the per-material table; scale multiplies E."""
    answer = {}
    for p in desc.parts:
        entry = dict(REFERENCE_PARAMETERS[p.coarse_material])
        entry["E"] = entry["E"] * scale
        answer[p.name] = entry
    return json.dumps(answer, indent=2)


def scripted_responses(desc: "ObjectDescription", n_rounds: int = 1) -> list[str]:
    """Canned response sequence for a full mock annotation flow.

    The fine-material answer is included only when the object has parts with a
    fine-grained catalog; each extra round appends another parameter answer
    (re-queries after feedback reuse the same reference table).
    """
    out: list[str] = []
    if any(p.coarse_material in FINE_MATERIAL_CATALOG for p in desc.parts):
        out.append(reference_fine_response(desc))
    out.extend(reference_parameter_response(desc) for _ in range(max(1, n_rounds)))
    return out
