/**
 * Verdict form logic: comment cleanup and the client-side gate that blocks
 * an implausible verdict with no usable comment before any request is made.
 */

import type { Decision, VerdictComment, VerdictRequest } from "./types.js";

export interface CommentDraft {
  part: string;
  text: string;
}

/** Trims drafts and drops the ones with no text; blank parts are allowed. */
export function cleanComments(
  drafts: readonly CommentDraft[],
): VerdictComment[] {
  return drafts
    .map((d) => ({ part: d.part.trim(), text: d.text.trim() }))
    .filter((c) => c.text.length > 0);
}

/**
 * Returns the message to show instead of submitting, or null when the
 * verdict may be sent. Mirrors the server rule so the round trip is never
 * wasted on an empty complaint.
 */
export function verdictBlocker(
  decision: Decision,
  drafts: readonly CommentDraft[],
): string | null {
  if (decision === "implausible" && cleanComments(drafts).length === 0) {
    return "an implausible verdict needs at least one comment";
  }
  return null;
}

export function buildVerdictRequest(
  decision: Decision,
  jobId: string,
  drafts: readonly CommentDraft[],
  reviewer = "",
): VerdictRequest {
  const blocked = verdictBlocker(decision, drafts);
  if (blocked !== null) {
    throw new Error(blocked);
  }
  return {
    decision,
    job_id: jobId,
    comments: cleanComments(drafts),
    reviewer,
  };
}
