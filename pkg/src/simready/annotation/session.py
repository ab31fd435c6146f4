"""Annotation sessions: the query / verify / re-query loop around one object.

A session owns an object description and an append-only list of parameter
iterations. The first round optionally asks for fine-grained material types
and folds the answer back into the description before the parameter query;
every later round threads the expert's feedback as a user/assistant/user
exchange. The rectification count is the number of re-queries, i.e.
iterations minus one.
"""

from __future__ import annotations

import datetime as _dt
import json
import uuid
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..assets import BehaviorType, MaterialParams, PartInfo
from .catalogs import COARSE_MATERIALS, FINE_MATERIAL_CATALOG
from .client import ChatClient, ChatClientError, ChatMessage
from .parsing import (
    ParsedPart,
    ParsedProposal,
    ResponseParseError,
    ValidationResult,
    parse_fine_response,
    parse_parameter_response,
    validate_proposal,
)
from .prompts import build_feedback_prompt, build_fine_material_prompt, build_parameter_prompt

VERDICT_PENDING = "pending"
VERDICT_PLAUSIBLE = "plausible"
VERDICT_IMPLAUSIBLE = "implausible"
VERDICTS = (VERDICT_PENDING, VERDICT_PLAUSIBLE, VERDICT_IMPLAUSIBLE)


class AnnotationError(Exception):
    """Session-level misuse or an unrecoverable annotation failure."""


@dataclass(frozen=True)
class ObjectDescription:
    """What the annotator is told about an object besides its renderings."""

    shape_name: str
    parts: tuple[PartInfo, ...]
    images: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))
        object.__setattr__(self, "images", tuple(self.images))

    def validation_failures(self) -> list[str]:
        fails = []
        if not self.shape_name.strip():
            fails.append("shape_name must be non-empty")
        if not self.parts:
            fails.append("at least one part is required")
        seen = set()
        for p in self.parts:
            if p.coarse_material not in COARSE_MATERIALS:
                fails.append(
                    f"part {p.name!r}: unknown coarse material {p.coarse_material!r}"
                )
            if p.name in seen:
                fails.append(f"duplicate part name {p.name!r}")
            seen.add(p.name)
        return fails

    def validate(self) -> "ObjectDescription":
        fails = self.validation_failures()
        if fails:
            raise AnnotationError("; ".join(fails))
        return self

    def with_fine_materials(self, assignments: dict[str, str]) -> "ObjectDescription":
        parts = tuple(
            replace(p, fine_material=assignments.get(p.name, p.fine_material))
            for p in self.parts
        )
        return replace(self, parts=parts)

    def to_dict(self) -> dict:
        return {
            "shape_name": self.shape_name,
            "parts": [p.to_dict() for p in self.parts],
            "images": list(self.images),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObjectDescription":
        return cls(
            shape_name=d["shape_name"],
            parts=tuple(PartInfo.from_dict(p) for p in d["parts"]),
            images=tuple(d.get("images", ())),
        )


def _material_to_dict(m: MaterialParams) -> dict:
    return {
        "E": m.E,
        "nu": m.nu,
        "rho": m.rho,
        "behavior": m.behavior.name,
        "sigma_y": m.sigma_y,
        "phi": m.phi,
    }


def _material_from_dict(d: dict) -> MaterialParams:
    return MaterialParams(
        E=d["E"],
        nu=d["nu"],
        rho=d["rho"],
        behavior=BehaviorType.from_name(d["behavior"]),
        sigma_y=d.get("sigma_y"),
        phi=d.get("phi"),
    )


@dataclass
class IterationRecord:
    """One parameter exchange: what was sent, what came back, how it checked out."""

    messages: tuple[ChatMessage, ...]
    raw_response: str | None = None
    proposal: ParsedProposal | None = None
    parse_error: str | None = None
    validation: ValidationResult | None = None
    verdict: str = VERDICT_PENDING
    test_case: str = ""
    expert_comment: str = ""

    def parameter_prompt(self) -> str:
        # The thread always opens with the original parameter prompt.
        return self.messages[0].text

    def to_dict(self) -> dict:
        proposal = None
        if self.proposal is not None:
            proposal = {
                "parts": {
                    name: {"CID": part.cid, **part.params}
                    for name, part in self.proposal.parts.items()
                },
                "warnings": list(self.proposal.warnings),
            }
        validation = None
        if self.validation is not None:
            validation = {
                "materials": {
                    name: _material_to_dict(m)
                    for name, m in self.validation.materials.items()
                },
                "errors": list(self.validation.errors),
                "clamps": list(self.validation.clamps),
            }
        return {
            "messages": [m.to_dict() for m in self.messages],
            "raw_response": self.raw_response,
            "proposal": proposal,
            "parse_error": self.parse_error,
            "validation": validation,
            "verdict": self.verdict,
            "test_case": self.test_case,
            "expert_comment": self.expert_comment,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        proposal = None
        if d.get("proposal") is not None:
            proposal = ParsedProposal(
                parts={
                    name: ParsedPart(
                        cid=entry["CID"],
                        params={k: v for k, v in entry.items() if k != "CID"},
                    )
                    for name, entry in d["proposal"]["parts"].items()
                },
                warnings=tuple(d["proposal"].get("warnings", ())),
            )
        validation = None
        if d.get("validation") is not None:
            validation = ValidationResult(
                materials={
                    name: _material_from_dict(m)
                    for name, m in d["validation"]["materials"].items()
                },
                errors=tuple(d["validation"].get("errors", ())),
                clamps=tuple(d["validation"].get("clamps", ())),
            )
        return cls(
            messages=tuple(ChatMessage.from_dict(m) for m in d["messages"]),
            raw_response=d.get("raw_response"),
            proposal=proposal,
            parse_error=d.get("parse_error"),
            validation=validation,
            verdict=d.get("verdict", VERDICT_PENDING),
            test_case=d.get("test_case", ""),
            expert_comment=d.get("expert_comment", ""),
        )


def new_session_id() -> str:
    return uuid.uuid4().hex[:12]


@dataclass
class AnnotationSession:
    """Append-only record of the annotation loop for one object."""

    session_id: str
    description: ObjectDescription
    fine_prompt: str | None = None
    fine_response: str | None = None
    fine_assignments: dict[str, str] = field(default_factory=dict)
    fine_warnings: tuple[str, ...] = ()
    fine_parse_error: str | None = None
    iterations: list[IterationRecord] = field(default_factory=list)
    transport_error: str | None = None
    created_at: str = ""

    def __post_init__(self):
        if not self.created_at:
            self.created_at = (
                _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
            )

    @property
    def rectification_count(self) -> int:
        return max(0, len(self.iterations) - 1)

    @property
    def latest_iteration(self) -> IterationRecord | None:
        return self.iterations[-1] if self.iterations else None

    @property
    def latest_materials(self) -> dict[str, MaterialParams] | None:
        last = self.latest_iteration
        if last is None or last.validation is None or not last.validation.ok:
            return None
        return dict(last.validation.materials)

    @classmethod
    def new(
        cls, description: ObjectDescription, session_id: str | None = None
    ) -> "AnnotationSession":
        return cls(
            session_id=session_id or new_session_id(),
            description=description.validate(),
        )

    def record_verdict(self, verdict: str, test_case: str = "", comment: str = "") -> None:
        """Attach the expert's plausibility call to the latest iteration."""
        if verdict not in (VERDICT_PLAUSIBLE, VERDICT_IMPLAUSIBLE):
            raise AnnotationError(f"unknown verdict {verdict!r}")
        last = self.latest_iteration
        if last is None:
            raise AnnotationError("no iteration to attach a verdict to")
        if last.verdict != VERDICT_PENDING:
            raise AnnotationError(f"verdict already recorded ({last.verdict})")
        if verdict == VERDICT_IMPLAUSIBLE and not comment.strip():
            raise AnnotationError("an implausible verdict requires an expert comment")
        last.verdict = verdict
        last.test_case = test_case
        last.expert_comment = comment.strip()

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "description": self.description.to_dict(),
            "fine_prompt": self.fine_prompt,
            "fine_response": self.fine_response,
            "fine_assignments": dict(self.fine_assignments),
            "fine_warnings": list(self.fine_warnings),
            "fine_parse_error": self.fine_parse_error,
            "iterations": [it.to_dict() for it in self.iterations],
            "transport_error": self.transport_error,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnnotationSession":
        return cls(
            session_id=d["session_id"],
            description=ObjectDescription.from_dict(d["description"]),
            fine_prompt=d.get("fine_prompt"),
            fine_response=d.get("fine_response"),
            fine_assignments=dict(d.get("fine_assignments", {})),
            fine_warnings=tuple(d.get("fine_warnings", ())),
            fine_parse_error=d.get("fine_parse_error"),
            iterations=[IterationRecord.from_dict(it) for it in d.get("iterations", [])],
            transport_error=d.get("transport_error"),
            created_at=d.get("created_at", ""),
        )

    def save(self, directory: str | Path) -> Path:
        """Write the session record as one JSON file named by its id."""
        path = Path(directory) / f"{self.session_id}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2))
        return path

    @classmethod
    def load(cls, path: str | Path) -> "AnnotationSession":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _match_catalog_name(name: str, coarse: str) -> str | None:
    wanted = name.strip().lower()
    for option in FINE_MATERIAL_CATALOG[coarse]:
        if option.lower() == wanted:
            return option
    return None


def _run_fine_round(session: AnnotationSession, client: ChatClient) -> None:
    desc = session.description
    targets = [p.name for p in desc.parts if p.coarse_material in FINE_MATERIAL_CATALOG]
    if not targets:
        return
    prompt = build_fine_material_prompt(desc, targets)
    session.fine_prompt = prompt
    response = client.complete([ChatMessage("user", prompt, desc.images)])
    session.fine_response = response

    try:
        raw, warnings = parse_fine_response(response)
    except ResponseParseError as e:
        session.fine_parse_error = str(e)
        return

    warnings = list(warnings)
    accepted: dict[str, str] = {}
    target_set = set(targets)
    by_name = {p.name: p for p in desc.parts}
    for name, value in raw.items():
        if name not in target_set:
            warnings.append(f"part {name!r}: not asked about, answer ignored")
            continue
        matched = _match_catalog_name(value, by_name[name].coarse_material)
        if matched is None:
            warnings.append(
                f"part {name!r}: {value!r} is not in the "
                f"{by_name[name].coarse_material} catalog, answer ignored"
            )
            continue
        accepted[name] = matched
    session.fine_assignments = accepted
    session.fine_warnings = tuple(warnings)
    session.description = desc.with_fine_materials(accepted)


def run_annotation_round(
    session: AnnotationSession,
    client: ChatClient,
    strict: bool = False,
) -> AnnotationSession:
    """Execute one annotation round and append the resulting iteration.

    The first round runs the fine-material query (when any part has a
    fine-grained catalog) and then the parameter query; later rounds require
    an implausible verdict on the latest iteration and send the feedback
    thread. Parse and validation failures are recorded in the iteration and
    leave the session re-queryable; transport failures mark the session and
    re-raise.
    """
    session.description.validate()
    last = session.latest_iteration
    if last is None:
        try:
            _run_fine_round(session, client)
        except ChatClientError as e:
            session.transport_error = str(e)
            raise
        messages = (
            ChatMessage("user", build_parameter_prompt(session.description),
                        session.description.images),
        )
    else:
        if last.verdict == VERDICT_PENDING:
            raise AnnotationError("latest iteration is still awaiting a verdict")
        if last.verdict == VERDICT_PLAUSIBLE:
            raise AnnotationError("annotation already judged plausible; nothing to revise")
        messages = build_feedback_prompt(session, last.test_case or "drop", last.expert_comment)

    try:
        response = client.complete(messages)
    except ChatClientError as e:
        session.transport_error = str(e)
        raise

    record = IterationRecord(messages=messages, raw_response=response)
    try:
        record.proposal = parse_parameter_response(response)
    except ResponseParseError as e:
        record.parse_error = str(e)
    else:
        record.validation = validate_proposal(
            session.description, record.proposal, strict=strict
        )
    session.iterations.append(record)
    session.transport_error = None
    return session
