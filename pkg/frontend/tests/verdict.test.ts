import { describe, expect, it } from "vitest";

import {
  buildVerdictRequest,
  cleanComments,
  verdictBlocker,
} from "../src/verdict.js";

describe("cleanComments", () => {
  it("trims text and part and drops blank comments", () => {
    const cleaned = cleanComments([
      { part: " body ", text: "  too stiff  " },
      { part: "strap", text: "   " },
      { part: "", text: "" },
    ]);
    expect(cleaned).toEqual([{ part: "body", text: "too stiff" }]);
  });

  it("keeps whole-object comments with no part", () => {
    expect(cleanComments([{ part: "", text: "sinks through the floor" }])).toEqual([
      { part: "", text: "sinks through the floor" },
    ]);
  });
});

describe("verdictBlocker", () => {
  it("blocks an implausible verdict with no comments before any request", () => {
    expect(verdictBlocker("implausible", [])).toMatch(/at least one comment/);
  });

  it("blocks when every comment is whitespace", () => {
    expect(
      verdictBlocker("implausible", [{ part: "body", text: "   " }]),
    ).not.toBeNull();
  });

  it("lets an implausible verdict with one real comment through", () => {
    expect(
      verdictBlocker("implausible", [{ part: "", text: "backrest oscillates forever" }]),
    ).toBeNull();
  });

  it("never blocks a plausible verdict", () => {
    expect(verdictBlocker("plausible", [])).toBeNull();
  });
});

describe("buildVerdictRequest", () => {
  it("assembles the wire payload with cleaned comments", () => {
    const req = buildVerdictRequest(
      "implausible",
      "job-7",
      [
        { part: "body", text: " too stiff " },
        { part: "", text: "" },
      ],
      "reviewer-a",
    );
    expect(req).toEqual({
      decision: "implausible",
      job_id: "job-7",
      comments: [{ part: "body", text: "too stiff" }],
      reviewer: "reviewer-a",
    });
  });

  it("refuses to build a blocked request", () => {
    expect(() => buildVerdictRequest("implausible", "job-7", [])).toThrow(
      /at least one comment/,
    );
  });

  it("allows a plausible verdict with no comments", () => {
    const req = buildVerdictRequest("plausible", "job-7", []);
    expect(req.comments).toEqual([]);
    expect(req.reviewer).toBe("");
  });
});
