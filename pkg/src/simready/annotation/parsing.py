"""Response parsing and proposal validation.

Model outputs are asked to contain only a JSON dictionary but routinely arrive
wrapped in code fences, prose, or with // comments copied from the format
example. Extraction therefore scans for the outermost brace block and cleans
it up before parsing. Validation checks proposals against the allowed combo
table and the asset parameter ranges; strict mode rejects range violations,
lenient mode clamps them and records each clamp.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

from ..assets import E_MAX, E_MIN, NU_MAX, NU_MIN, BehaviorType, MaterialParams
from .catalogs import ALLOWED_COMBOS, required_parameters

if TYPE_CHECKING:
    from .session import ObjectDescription

KNOWN_KEYS = ("CID", "E", "nu", "sigma_y", "phi", "rho")

# Clamp floors for lenient mode; values at or below zero are meaningless.
RHO_FLOOR = 0.1
SIGMA_Y_FLOOR = 1.0
PHI_DEG_MAX = 90.0


class ResponseParseError(Exception):
    """No usable JSON dictionary could be extracted from a response."""

    def __init__(self, message: str, text: str = ""):
        excerpt = text.strip()
        if len(excerpt) > 200:
            excerpt = excerpt[:200] + "..."
        if excerpt:
            message = f"{message}; got: {excerpt!r}"
        super().__init__(message)
        self.excerpt = excerpt


def extract_json_block(text: str) -> str:
    """Return the outermost {...} block, tolerating fences and prose around it."""
    start = text.find("{")
    if start < 0:
        raise ResponseParseError("no JSON dictionary found in response", text)
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(text)):
        ch = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    raise ResponseParseError("unbalanced braces in response", text)


def _strip_comments(block: str) -> str:
    """Drop // and # line comments outside strings."""
    out: list[str] = []
    in_string = False
    escaped = False
    i = 0
    n = len(block)
    while i < n:
        ch = block[i]
        if in_string:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            i += 1
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
            i += 1
        elif ch == "/" and i + 1 < n and block[i + 1] == "/":
            while i < n and block[i] != "\n":
                i += 1
        elif ch == "#":
            while i < n and block[i] != "\n":
                i += 1
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _strip_trailing_commas(block: str) -> str:
    out: list[str] = []
    in_string = False
    escaped = False
    for ch in block:
        if in_string:
            out.append(ch)
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
            out.append(ch)
        elif ch in "}]":
            j = len(out) - 1
            while j >= 0 and out[j] in " \t\r\n":
                j -= 1
            if j >= 0 and out[j] == ",":
                del out[j]
            out.append(ch)
        else:
            out.append(ch)
    return "".join(out)


def _loads_lenient(block: str, source: str) -> dict:
    for candidate in (block, _strip_trailing_commas(_strip_comments(block))):
        try:
            data = json.loads(candidate)
        except json.JSONDecodeError:
            continue
        if not isinstance(data, dict):
            raise ResponseParseError("top-level JSON value is not a dictionary", source)
        return data
    raise ResponseParseError("response block is not valid JSON", source)


@dataclass(frozen=True)
class ParsedPart:
    """Raw per-part proposal straight from a response: combo id + numbers."""

    cid: str
    params: dict[str, float]


@dataclass(frozen=True)
class ParsedProposal:
    parts: dict[str, ParsedPart]
    warnings: tuple[str, ...] = ()


def _normalize_cid(value, part: str, source: str) -> str:
    if isinstance(value, int) and 0 <= value <= 3:
        return f"M{value}"
    if isinstance(value, str):
        cid = value.strip().upper()
        if len(cid) == 2 and cid[0] == "M" and cid[1] in "0123":
            return cid
    raise ResponseParseError(f"part {part!r}: unrecognized combination id {value!r}", source)


def parse_parameter_response(text: str) -> ParsedProposal:
    """Extract the per-part {CID, parameters} map from a model response.

    Unknown keys are kept out of the numeric parameters but reported as
    warnings; a part entry without a CID is a parse error.
    """
    data = _loads_lenient(extract_json_block(text), text)
    parts: dict[str, ParsedPart] = {}
    warnings: list[str] = []
    for name, entry in data.items():
        if not isinstance(entry, dict):
            raise ResponseParseError(f"part {name!r}: entry is not a dictionary", text)
        if "CID" not in entry:
            raise ResponseParseError(f"part {name!r}: missing combination id 'CID'", text)
        cid = _normalize_cid(entry["CID"], name, text)
        params: dict[str, float] = {}
        for key, value in entry.items():
            if key == "CID":
                continue
            if key not in KNOWN_KEYS:
                warnings.append(f"part {name!r}: ignored unknown key {key!r}")
                continue
            try:
                params[key] = float(value)
            except (TypeError, ValueError):
                raise ResponseParseError(
                    f"part {name!r}: parameter {key!r} is not a number ({value!r})", text
                ) from None
        parts[str(name)] = ParsedPart(cid=cid, params=params)
    if not parts:
        raise ResponseParseError("response dictionary contains no parts", text)
    return ParsedProposal(parts=parts, warnings=tuple(warnings))


def parse_fine_response(text: str) -> tuple[dict[str, str], tuple[str, ...]]:
    """Extract the part -> fine-material-name map from a round-one response."""
    data = _loads_lenient(extract_json_block(text), text)
    out: dict[str, str] = {}
    warnings: list[str] = []
    for name, value in data.items():
        if isinstance(value, str):
            out[str(name)] = value.strip()
        else:
            warnings.append(f"part {name!r}: expected a material name, got {value!r}")
    if not out:
        raise ResponseParseError("response dictionary names no parts", text)
    return out, tuple(warnings)


@dataclass(frozen=True)
class ValidationResult:
    """Outcome of checking a proposal: validated materials plus diagnostics."""

    materials: dict[str, MaterialParams] = field(default_factory=dict)
    errors: tuple[str, ...] = ()
    clamps: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def _check_range(
    part: str,
    key: str,
    value: float,
    lo: float,
    hi: float,
    unit: str,
    strict: bool,
    errors: list[str],
    clamps: list[str],
) -> float:
    if not math.isfinite(value):
        errors.append(f"part {part!r}: {key}={value!r} is not finite")
        return value
    if lo <= value <= hi:
        return value
    if strict:
        errors.append(f"part {part!r}: {key}={value:g} outside [{lo:g}, {hi:g}]{unit}")
        return value
    clamped = min(max(value, lo), hi)
    clamps.append(f"part {part!r}: {key} clamped from {value:g} to {clamped:g}{unit}")
    return clamped


def validate_proposal(
    desc: "ObjectDescription",
    proposal: ParsedProposal,
    combos: dict[str, tuple[BehaviorType, ...]] | None = None,
    strict: bool = True,
) -> ValidationResult:
    """Check a parsed proposal against the combo table and parameter ranges.

    Every violation is reported (part name, rule, value); the error list is
    exhaustive rather than first-failure. Friction angles arrive in degrees
    (the colloquial convention; responses carry no unit) and are converted to
    radians. Materials are produced only for parts that pass all checks.
    """
    combos = ALLOWED_COMBOS if combos is None else combos
    errors: list[str] = []
    clamps: list[str] = []
    materials: dict[str, MaterialParams] = {}

    by_name = {p.name: p for p in desc.parts}
    for name in by_name:
        if name not in proposal.parts:
            errors.append(f"part {name!r}: no proposal given")
    for name in proposal.parts:
        if name not in by_name:
            errors.append(f"part {name!r} is not a part of the described object")

    for name, parsed in proposal.parts.items():
        part = by_name.get(name)
        if part is None:
            continue
        part_errors: list[str] = []
        behavior = BehaviorType.from_name(parsed.cid)
        allowed = combos.get(part.coarse_material, ())
        if behavior not in allowed:
            allowed_names = ", ".join(b.name for b in allowed) or "none"
            part_errors.append(
                f"part {name!r}: combination {parsed.cid} is not allowed for "
                f"{part.coarse_material!r} (allowed: {allowed_names})"
            )
        missing = [k for k in required_parameters(behavior) if k not in parsed.params]
        for k in missing:
            part_errors.append(
                f"part {name!r}: missing required parameter {k!r} for {parsed.cid}"
            )
        if part_errors:
            errors.extend(part_errors)
            continue

        p = parsed.params
        n_before = len(errors)
        E = _check_range(name, "E", p["E"], E_MIN, E_MAX, " Pa", strict, errors, clamps)
        nu = _check_range(name, "nu", p["nu"], NU_MIN, NU_MAX, "", strict, errors, clamps)
        rho = _check_range(
            name, "rho", p["rho"], RHO_FLOOR, math.inf, " kg/m^3", strict, errors, clamps
        )
        sigma_y = None
        if behavior.requires_sigma_y:
            sigma_y = _check_range(
                name, "sigma_y", p["sigma_y"], SIGMA_Y_FLOOR, math.inf, " Pa",
                strict, errors, clamps,
            )
        phi = None
        if behavior.requires_phi:
            phi_deg = _check_range(
                name, "phi", p["phi"], 0.0, PHI_DEG_MAX, " deg", strict, errors, clamps
            )
            phi = math.radians(phi_deg)
        if len(errors) > n_before:
            continue
        materials[name] = MaterialParams(
            E=E, nu=nu, rho=rho, behavior=behavior, sigma_y=sigma_y, phi=phi
        ).canonical()

    return ValidationResult(
        materials=materials, errors=tuple(errors), clamps=tuple(clamps)
    )
