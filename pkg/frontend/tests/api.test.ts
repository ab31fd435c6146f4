import { describe, expect, it } from "vitest";

import { ApiError, ReviewApi } from "../src/api.js";

interface Recorded {
  url: string;
  init?: RequestInit;
}

function fakeFetch(
  status: number,
  body: unknown,
  log: Recorded[] = [],
): (url: string, init?: RequestInit) => Promise<Response> {
  return async (url, init) => {
    log.push({ url, init });
    return new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    });
  };
}

describe("ReviewApi", () => {
  it("prefixes every path with the base URL and strips trailing slashes", async () => {
    const log: Recorded[] = [];
    const api = new ReviewApi("http://localhost:9999/", fakeFetch(200, { sessions: [] }, log));
    await api.listSessions();
    expect(log[0].url).toBe("http://localhost:9999/api/sessions");
  });

  it("POSTs JSON bodies with a content-type header", async () => {
    const log: Recorded[] = [];
    const api = new ReviewApi("", fakeFetch(201, { session_id: "s" }, log));
    await api.createSession({ shape_name: "bag", parts: [] });
    expect(log[0].init?.method).toBe("POST");
    expect((log[0].init?.headers as Record<string, string>)["content-type"]).toBe(
      "application/json",
    );
    expect(JSON.parse(String(log[0].init?.body))).toEqual({
      description: { shape_name: "bag", parts: [] },
    });
  });

  it("sends an empty JSON object for body-less POSTs", async () => {
    const log: Recorded[] = [];
    const api = new ReviewApi("", fakeFetch(200, {}, log));
    await api.requery("s1");
    expect(String(log[0].init?.body)).toBe("{}");
  });

  it("raises the server's structured error verbatim", async () => {
    const api = new ReviewApi(
      "",
      fakeFetch(409, {
        code: "conflict",
        message: "cannot record a verdict in state accepted",
        details: { state: "accepted" },
      }),
    );
    const err = await api.annotate("s1").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    const apiErr = err as ApiError;
    expect(apiErr.status).toBe(409);
    expect(apiErr.code).toBe("conflict");
    expect(apiErr.message).toBe("cannot record a verdict in state accepted");
    expect(apiErr.details).toEqual({ state: "accepted" });
  });

  it("falls back to the HTTP status line on a non-JSON error body", async () => {
    const api = new ReviewApi("", async () =>
      new Response("<html>boom</html>", { status: 502, statusText: "Bad Gateway" }),
    );
    const err = (await api.getSession("s1").catch((e: unknown) => e)) as ApiError;
    expect(err.status).toBe(502);
    expect(err.code).toBe("error");
    expect(err.message).toMatch(/502/);
  });

  it("builds frame URLs the server's frame route understands", () => {
    const api = new ReviewApi("http://h:1");
    expect(api.frameUrl("job-3", 12)).toBe("http://h:1/api/jobs/job-3/frames/12");
  });
});
