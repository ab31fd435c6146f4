"""VLM-guided material annotation: prompts, parsing, sessions, clients."""

from .catalogs import (
    ALLOWED_COMBOS,
    COARSE_MATERIALS,
    FINE_MATERIAL_CATALOG,
    allowed_combo_names,
    required_parameters,
)
from .client import (
    ChatClientError,
    ChatMessage,
    HttpChatClient,
    MockChatClient,
    RetryPolicy,
    client_from_env,
)
from .defaults import reference_fine_response, reference_parameter_response, scripted_responses
from .parsing import (
    ParsedPart,
    ParsedProposal,
    ResponseParseError,
    ValidationResult,
    extract_json_block,
    parse_fine_response,
    parse_parameter_response,
    validate_proposal,
)
from .prompts import (
    build_feedback_prompt,
    build_fine_material_prompt,
    build_parameter_prompt,
    part_material_description,
    prose_list,
)
from .session import (
    VERDICT_IMPLAUSIBLE,
    VERDICT_PENDING,
    VERDICT_PLAUSIBLE,
    AnnotationError,
    AnnotationSession,
    IterationRecord,
    ObjectDescription,
    run_annotation_round,
)

__all__ = [
    "ALLOWED_COMBOS",
    "COARSE_MATERIALS",
    "FINE_MATERIAL_CATALOG",
    "allowed_combo_names",
    "required_parameters",
    "ChatClientError",
    "ChatMessage",
    "HttpChatClient",
    "MockChatClient",
    "RetryPolicy",
    "client_from_env",
    "reference_fine_response",
    "reference_parameter_response",
    "scripted_responses",
    "ParsedPart",
    "ParsedProposal",
    "ResponseParseError",
    "ValidationResult",
    "extract_json_block",
    "parse_fine_response",
    "parse_parameter_response",
    "validate_proposal",
    "build_feedback_prompt",
    "build_fine_material_prompt",
    "build_parameter_prompt",
    "part_material_description",
    "prose_list",
    "VERDICT_IMPLAUSIBLE",
    "VERDICT_PENDING",
    "VERDICT_PLAUSIBLE",
    "AnnotationError",
    "AnnotationSession",
    "IterationRecord",
    "ObjectDescription",
    "run_annotation_round",
]
