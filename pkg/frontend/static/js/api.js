/**
 * Thin fetch client for the review service.
 *
 * Every mutation goes through these methods; the UI holds no state the
 * server does not. Errors carry the server's structured {code, message,
 * details} body so callers can surface it verbatim.
 */
export class ApiError extends Error {
    constructor(status, code, message, details = {}) {
        super(message);
        this.name = "ApiError";
        this.status = status;
        this.code = code;
        this.details = details;
    }
}
export class ReviewApi {
    /**
     * baseUrl is "" when the bundle is served by the service itself and an
     * absolute origin when talking to a remote server (tests do this).
     */
    constructor(baseUrl = "", fetchFn) {
        this.base = baseUrl.replace(/\/+$/, "");
        // wrap the global so the call is not made through a bare class property
        // (browsers reject an unbound window.fetch)
        this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    }
    url(path) {
        return `${this.base}${path}`;
    }
    async request(path, init) {
        let resp;
        try {
            resp = await this.fetchFn(this.url(path), init);
        }
        catch (e) {
            throw new ApiError(0, "network_error", String(e));
        }
        if (!resp.ok) {
            throw await this.errorFrom(resp);
        }
        return (await resp.json());
    }
    async errorFrom(resp) {
        let code = "error";
        let message = `${resp.status} ${resp.statusText}`;
        let details = {};
        try {
            const body = (await resp.json());
            if (typeof body.code === "string")
                code = body.code;
            if (typeof body.message === "string")
                message = body.message;
            if (body.details && typeof body.details === "object") {
                details = body.details;
            }
        }
        catch {
            // non-JSON error body: keep the HTTP status line
        }
        return new ApiError(resp.status, code, message, details);
    }
    post(path, body) {
        return this.request(path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: body === undefined ? "{}" : JSON.stringify(body),
        });
    }
    listSessions() {
        return this.request("/api/sessions");
    }
    createSession(description, assetPath) {
        const body = { description };
        if (assetPath)
            body.asset_path = assetPath;
        return this.post("/api/sessions", body);
    }
    getSession(sessionId) {
        return this.request(`/api/sessions/${encodeURIComponent(sessionId)}`);
    }
    annotate(sessionId) {
        return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/annotate`);
    }
    /** Accepted with 202; the returned job is queued, poll getJob until done. */
    simulate(sessionId, req = {}) {
        return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/simulate`, req);
    }
    getJob(jobId) {
        return this.request(`/api/jobs/${encodeURIComponent(jobId)}`);
    }
    frameUrl(jobId, k) {
        return this.url(`/api/jobs/${encodeURIComponent(jobId)}/frames/${k}`);
    }
    trajectoryUrl(jobId) {
        return this.url(`/api/jobs/${encodeURIComponent(jobId)}/trajectory`);
    }
    /** Raw PNG bytes of one rendered frame. */
    async fetchFrame(jobId, k) {
        const resp = await this.fetchFn(this.frameUrl(jobId, k));
        if (!resp.ok)
            throw await this.errorFrom(resp);
        return resp.arrayBuffer();
    }
    submitVerdict(sessionId, req) {
        return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/verdict`, req);
    }
    requery(sessionId) {
        return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/requery`);
    }
    /** Direct parameter edit; bypasses the annotation model. */
    overrideParameters(sessionId, materials) {
        return this.post(`/api/sessions/${encodeURIComponent(sessionId)}/override`, {
            materials,
        });
    }
}
