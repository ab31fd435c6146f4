/**
 * Verdict form logic: comment cleanup and the client-side gate that blocks
 * an implausible verdict with no usable comment before any request is made.
 */
/** Trims drafts and drops the ones with no text; blank parts are allowed. */
export function cleanComments(drafts) {
    return drafts
        .map((d) => ({ part: d.part.trim(), text: d.text.trim() }))
        .filter((c) => c.text.length > 0);
}
/**
 * Returns the message to show instead of submitting, or null when the
 * verdict may be sent. Mirrors the server rule so the round trip is never
 * wasted on an empty complaint.
 */
export function verdictBlocker(decision, drafts) {
    if (decision === "implausible" && cleanComments(drafts).length === 0) {
        return "an implausible verdict needs at least one comment";
    }
    return null;
}
export function buildVerdictRequest(decision, jobId, drafts, reviewer = "") {
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
