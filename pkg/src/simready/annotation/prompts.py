"""Prompt builders for the two-round material query and the feedback re-query.

The templates are fixed text; builders only fill the bracketed slots. Several
template lines intentionally carry a trailing space, so they are assembled from
explicit line tuples rather than triple-quoted literals where an editor could
silently strip whitespace. Do not "fix" wording or spacing here: downstream
consumers and the golden tests expect these bytes exactly.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Iterable, Sequence

from .catalogs import FINE_MATERIAL_CATALOG, combination_table
from .client import ChatMessage

if TYPE_CHECKING:
    from ..assets import PartInfo
    from .session import AnnotationSession, ObjectDescription

_PREAMBLE_LINES = (
    "You are an intelligent AI assistant for computer graphics, physical simulation, and material science. ",
    "",
    "Follow the user's requirements carefully and make sure you understand them. ",
    "",
    "Keep your answers short and to the point. ",
    "",
    "Do not provide any information that is not required. ",
    "",
)

_OPTIONS_SENTENCE = (
    "The available options for the [COARSE-GRAINED MATERIAL NAME] material type"
    " are: [A LIST OF AVAILABLE FINE-GRAINED MATERIAL NAMES]."
)

FINE_MATERIAL_TEMPLATE = "\n".join(
    _PREAMBLE_LINES
    + (
        "You are going to identify the most likely fine-grained material type for one or more parts of the object in the attached image(s).",
        "",
        "The attached images describe a [SHAPE NAME] made of [N_P] parts: [PART-MATERIAL DESCRIPTION].",
        "",
        "Given the appearance and your knowledge on material composition, please choose the most suitable fine-grained material type for the part(s): [A LIST OF PART NAMES].",
        "",
        _OPTIONS_SENTENCE,
        "",
        "Please provide your answer in the following JSON format:",
        "```",
        "{",
        '  "part_name": "most_suitable_material_type",',
        "  ...: ...  # other parts",
        "}",
        "'''",
        "The output should **only** contain the dictionary.",
    )
)

PARAMETER_TEMPLATE = "\n".join(
    _PREAMBLE_LINES
    + (
        "You are going to use the Material Point Method to simulate the motion of the object shown in the attached image(s). ",
        "",
        "To simulate the effect, you need to specify an elastic and a plastic material model, along with material parameters such as Young's modulus, Poisson's ratio, and yield stress. ",
        "",
        "Note that the material parameters should be reasonable for the object shown in the image(s). ",
        "",
        "More specifically, when the material parameters are used to simulate dropping, throwing, or tilting the object, the object should behave according to physical common sense.",
        "",
        "",
        "The available material models are list below. ",
        "# Available elastic material models (with parameters required) ",
        "1. Neo-Hookean elasticity (Young's modulus, Poisson's ratio); ",
        "2. StVK elasticity (Young's modulus, Poisson's ratio). ",
        "# Available plastic material models (with parameters required) ",
        "1. Identity plasticity; ",
        "2. von Mises plasticity (Young's modulus, Poisson's ratio, yield stress); ",
        "3. Drucker-Prager plasticity (Young's modulus, Poisson's ratio, friction angle); ",
        "",
        "The available combinations of material models for each material category are listed below. The leading number is the **Combination ID**.",
    )
    + tuple(combination_table().split("\n"))
    + (
        "",
        "The attached image(s) describe the object you are going to simulate.",
        "",
        "It is a [SHAPE NAME] made of [N_P] parts: [PART-MATERIAL DESCRIPTION].",
        "",
        "For each part, you need to specify **both the elastic and the plastic** material model and the material parameters, such as Young's modulus, Poisson's ratio, density, etc. ",
        "",
        "Please provide your answer in the following JSON format (For Young's modulus and yield stress, the unit is Pa. For density, the unit is kg/m^3.): ",
        "```",
        "{",
        '"part_name": {',
        '    "CID": "Mx",  // Combination ID',
        '    "E": youngs_modulus,',
        '    "nu": poissons_ratio,',
        '    "...": ...,  // other parameters, e.g., yield stress ("sigma_y"), friction angle ("phi"), density ("rho")',
        "}",
        "..., // other parts",
        "}",
        "'''",
        "The output should **only** contain the dictionary. ",
    )
)

FEEDBACK_TEMPLATE = "\n".join(
    (
        "The original output creates unrealistic dynamics when the object [TEST CASE DESCRIPTION] in the simulator.",
        "",
        "Specifically, [USER COMMENT].",
        "",
        "Given this information, please update the material parameters to make the object behave more realistically.",
        "",
        "The output should be formatted as the original version.",
    )
)

# Clause inserted for "when the object ... in the simulator", keyed by scenario.
TEST_CASE_DESCRIPTIONS: dict[str, str] = {
    "drop": "is dropped from a height",
    "throw": "is thrown",
    "tilt": "is tilted",
    "drag": "is dragged",
    "wind": "is hit by a gust of wind",
}


def prose_list(items: Sequence[str]) -> str:
    """Running-text list: 'a', 'a and b', or 'a, b, and c'."""
    items = list(items)
    if not items:
        raise ValueError("empty list")
    if len(items) == 1:
        return items[0]
    if len(items) == 2:
        return f"{items[0]} and {items[1]}"
    return ", ".join(items[:-1]) + f", and {items[-1]}"


def _article(phrase: str) -> str:
    return "an" if phrase[:1].lower() in "aeiou" else "a"


def _part_phrase(part: "PartInfo") -> str:
    material = part.fine_material or part.coarse_material
    words = [w for w in (part.color, material) if w]
    words.append(part.name)
    text = " ".join(words)
    return f"{_article(text)} {text}"


def part_material_description(parts: Iterable["PartInfo"]) -> str:
    """Comma-joined noun phrases, one per part: 'a red fabric seat, a wood leg'.

    Uses the fine-grained material name when one has been established,
    otherwise the coarse label, and prepends the color word when present.
    """
    return ", ".join(_part_phrase(p) for p in parts)


def _fill_common(template: str, desc: "ObjectDescription") -> str:
    text = template.replace("[SHAPE NAME]", desc.shape_name)
    text = text.replace("[N_P]", str(len(desc.parts)))
    return text.replace("[PART-MATERIAL DESCRIPTION]", part_material_description(desc.parts))


def build_fine_material_prompt(desc: "ObjectDescription", target_parts: Sequence[str]) -> str:
    """Round-one prompt asking for a fine-grained type per target part.

    Raises ValueError when no targets are given or a target's coarse material
    has no fine-grained catalog. With targets spanning several coarse
    materials, one options sentence is emitted per material, in order of first
    appearance.
    """
    if not target_parts:
        raise ValueError("no target parts given")
    by_name = {p.name: p for p in desc.parts}
    coarse_order: list[str] = []
    for name in target_parts:
        if name not in by_name:
            raise ValueError(f"unknown part {name!r}")
        coarse = by_name[name].coarse_material
        if coarse not in FINE_MATERIAL_CATALOG:
            raise ValueError(f"no fine-grained catalog for {coarse!r} (part {name!r})")
        if coarse not in coarse_order:
            coarse_order.append(coarse)

    options = "\n\n".join(
        f"The available options for the {coarse} material type are: "
        f"{prose_list(FINE_MATERIAL_CATALOG[coarse])}."
        for coarse in coarse_order
    )
    text = _fill_common(FINE_MATERIAL_TEMPLATE, desc)
    text = text.replace("[A LIST OF PART NAMES]", ", ".join(target_parts))
    return text.replace(_OPTIONS_SENTENCE, options)


def build_parameter_prompt(desc: "ObjectDescription") -> str:
    """Round-two prompt asking for behavior combos and parameters per part."""
    return _fill_common(PARAMETER_TEMPLATE, desc)


def build_feedback_prompt(
    session: "AnnotationSession", test_case: str, comment: str
) -> tuple[ChatMessage, ChatMessage, ChatMessage]:
    """Re-query thread: original prompt, prior answer, and the update request.

    ``test_case`` is a scenario name (mapped to a fixed clause) or a free-form
    clause used verbatim. The comment's trailing period, if any, is dropped
    because the template supplies its own.
    """
    if not session.iterations:
        raise ValueError("session has no completed iteration to give feedback on")
    first = session.iterations[0]
    last = session.iterations[-1]
    if last.raw_response is None:
        raise ValueError("latest iteration has no response to revise")

    clause = TEST_CASE_DESCRIPTIONS.get(test_case.strip().lower(), test_case)
    comment = comment.strip().rstrip(".")
    text = FEEDBACK_TEMPLATE.replace("[TEST CASE DESCRIPTION]", clause)
    text = text.replace("[USER COMMENT]", comment)
    images = session.description.images
    return (
        ChatMessage("user", first.parameter_prompt(), images),
        ChatMessage("assistant", last.raw_response),
        ChatMessage("user", text),
    )
