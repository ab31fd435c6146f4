"""Material vocabularies: coarse classes, fine-grained types, allowed model combos."""

from __future__ import annotations

from ..assets import BehaviorType

COARSE_MATERIALS: tuple[str, ...] = (
    "ceramic",
    "fabric",
    "leather",
    "metal",
    "plant",
    "plastic",
    "soil",
    "wood",
)

# Coarse classes whose appearance varies enough to warrant a sub-type question.
# Lists are ordered; prompts and reference answers preserve this order.
FINE_MATERIAL_CATALOG: dict[str, tuple[str, ...]] = {
    "fabric": (
        "cotton",
        "wool",
        "polyester",
        "silk",
        "denim",
        "spandex",
        "linen",
        "rayon",
    ),
    "leather": (
        "full-grain leather",
        "top-grain leather",
        "genuine leather",
        "nubuck leather",
        "suede",
        "patent leather",
        "bonded leather",
        "faux leather",
    ),
    "plastic": (
        "low-density polyethylene",
        "high-density polyethylene",
        "polyethylene terephthalate",
        "polypropylene",
        "rigid polyvinyl chloride",
        "flexible polyvinyl chloride",
        "polystyrene",
        "polycarbonate",
        "acrylonitrile butadiene styrene",
        "polyamide",
        "polyurethane",
        "thermoplastic elastomers",
    ),
}

# Which behavior combos a coarse material may use. Ordered (prompt table order).
ALLOWED_COMBOS: dict[str, tuple[BehaviorType, ...]] = {
    "ceramic": (BehaviorType.M1,),
    "fabric": (BehaviorType.M0, BehaviorType.M1),
    "leather": (BehaviorType.M0, BehaviorType.M1),
    "metal": (BehaviorType.M2,),
    "plant": (BehaviorType.M0,),
    "plastic": (BehaviorType.M1,),
    "soil": (BehaviorType.M3,),
    "wood": (BehaviorType.M1,),
}

# Human-readable combo descriptions used verbatim in the parameter prompt.
COMBO_DESCRIPTIONS: dict[BehaviorType, str] = {
    BehaviorType.M0: "Neo-Hookean elasticity, Identity plasticity;",
    BehaviorType.M1: "Neo-Hookean elasticity, von Mises plasticity with damage;",
    BehaviorType.M2: "Neo-Hookean elasticity, von Mises plasticity;",
    BehaviorType.M3: "StVK elasticity, Drucker-Prager plasticity;",
}


def allowed_combo_names(coarse: str) -> tuple[str, ...]:
    """Combo IDs permitted for a coarse material, e.g. ('M0', 'M1')."""
    return tuple(b.name for b in ALLOWED_COMBOS[coarse])


def required_parameters(behavior: BehaviorType) -> tuple[str, ...]:
    """Parameter keys a proposal must supply for this behavior type."""
    keys = ["E", "nu", "rho"]
    if behavior.requires_sigma_y:
        keys.append("sigma_y")
    if behavior.requires_phi:
        keys.append("phi")
    return tuple(keys)


def combination_table() -> str:
    """The per-material combo listing embedded in the parameter prompt."""
    lines: list[str] = []
    for coarse in COARSE_MATERIALS:
        lines.append(f"# {coarse}")
        for b in ALLOWED_COMBOS[coarse]:
            lines.append(f"{b.name}. {COMBO_DESCRIPTIONS[b]}")
    return "\n".join(lines)
