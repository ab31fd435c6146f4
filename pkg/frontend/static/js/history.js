/**
 * Iteration timeline view model.
 *
 * Maps a fetched session onto the rows the history panel renders: one entry
 * per annotation round with prompt/response excerpts, the validation
 * outcome, and the expert verdict, plus the overall rectification count.
 */
const EXCERPT_LEN = 160;
export function excerpt(text, max = EXCERPT_LEN) {
    const flat = text.replace(/\s+/g, " ").trim();
    if (flat.length <= max)
        return flat;
    return flat.slice(0, max - 3).trimEnd() + "...";
}
function lastUserMessage(it) {
    for (let i = it.messages.length - 1; i >= 0; i--) {
        if (it.messages[i].role === "user")
            return it.messages[i].text;
    }
    return "";
}
export function iterationEntry(it) {
    let status;
    let statusDetail;
    if (it.parse_error !== null) {
        status = "parse-error";
        statusDetail = excerpt(it.parse_error);
    }
    else if (it.validation !== null && it.validation.ok) {
        status = "ok";
        statusDetail = "";
    }
    else {
        status = "invalid";
        statusDetail = it.validation ? it.validation.errors.join("; ") : "no validated proposal";
    }
    return {
        index: it.index,
        promptExcerpt: excerpt(lastUserMessage(it)),
        responseExcerpt: excerpt(it.response),
        status,
        statusDetail,
        warnings: [...it.warnings],
        verdict: it.verdict,
        testCase: it.test_case,
        expertComment: it.expert_comment,
        materials: it.validation !== null && it.validation.ok ? it.validation.materials : null,
    };
}
export function buildTimeline(session) {
    return {
        entries: session.iterations.map(iterationEntry),
        rectificationCount: session.rectification_count,
    };
}
