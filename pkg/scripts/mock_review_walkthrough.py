#!/usr/bin/env python3
"""Walk the annotation and review loop against the scripted mock client.

Shows the whole arc in one terminal page: fine materials, the first
parameter proposal, an expert rejection with a comment, and the softened
re-proposal. No network, no service process.
"""

from simready.annotation import (
    AnnotationSession,
    MockChatClient,
    ObjectDescription,
    run_annotation_round,
    scripted_responses,
)
from simready.annotation.defaults import reference_parameter_response
from simready.assets import PartInfo


def show_proposal(session: AnnotationSession) -> None:
    it = session.iterations[-1]
    for name, m in it.validation.materials.items():
        extra = ""
        if m.sigma_y is not None:
            extra += f" sigma_y={m.sigma_y:.3g}"
        if m.phi is not None:
            extra += f" phi={m.phi:.3g}"
        print(f"  {name}: {m.behavior.name} E={m.E:.3g} nu={m.nu} rho={m.rho}{extra}")


def main() -> None:
    desc = ObjectDescription(
        "armchair",
        (
            PartInfo("cushion", "fabric", color="green"),
            PartInfo("frame", "wood", color="brown"),
        ),
    )
    session = AnnotationSession.new(desc)
    run_annotation_round(session, MockChatClient(responses=scripted_responses(desc)))
    print(f"session {session.session_id}")
    print(f"fine materials: {dict(session.fine_assignments)}")
    print("proposal 1:")
    show_proposal(session)

    print('\nexpert: implausible, "the cushion is too stiff" (drop test)')
    session.record_verdict("implausible", test_case="drop", comment="the cushion is too stiff")
    # the mock answers a re-query with a softened table (E halved per
    # rectification), mirroring what a model would do with the feedback
    softened = MockChatClient(responses=[reference_parameter_response(desc, scale=0.5)])
    run_annotation_round(session, softened)
    print(f"proposal 2 (rectification {session.rectification_count}):")
    show_proposal(session)

    assert session.rectification_count == len(session.iterations) - 1


if __name__ == "__main__":
    main()
