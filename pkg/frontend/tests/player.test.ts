import { describe, expect, it } from "vitest";

import { FramePlayer, playbackState } from "../src/player.js";
import type { JobView } from "../src/types.js";

function job(overrides: Partial<JobView> = {}): JobView {
  return {
    job_id: "job-1",
    session_id: "sess-1",
    scenario: { type: "drop" },
    status: "done",
    error: null,
    n_frames: 24,
    duration: 1.0,
    fps: 24,
    created_at: "2026-01-01T00:00:00+00:00",
    finished_at: "2026-01-01T00:00:30+00:00",
    ...overrides,
  };
}

describe("playbackState", () => {
  it("maps a done job with 24 frames to a ready player source", () => {
    const state = playbackState(job());
    expect(state).toEqual({
      kind: "ready",
      source: { jobId: "job-1", nFrames: 24, fps: 24 },
    });
  });

  it("maps a failed job to an error with the stored diagnostic", () => {
    const state = playbackState(
      job({ status: "failed", error: "dt clamp exhausted", n_frames: null }),
    );
    expect(state).toEqual({ kind: "error", message: "dt clamp exhausted" });
  });

  it("maps a failed job without a message to a generic diagnostic", () => {
    const state = playbackState(job({ status: "failed", error: null }));
    expect(state.kind).toBe("error");
    if (state.kind === "error") expect(state.message).toBe("simulation failed");
  });

  it("keeps queued and running jobs pending", () => {
    for (const status of ["queued", "running"] as const) {
      const state = playbackState(job({ status, n_frames: null }));
      expect(state).toEqual({ kind: "pending", status });
    }
  });
});

describe("FramePlayer", () => {
  const source = { jobId: "job-1", nFrames: 24, fps: 24 };

  it("gives a 24-frame job the scrubber range [0, 23]", () => {
    const p = new FramePlayer(source);
    expect(p.frame).toBe(0);
    expect(p.lastFrame).toBe(23);
  });

  it("rejects empty and fractional frame counts", () => {
    expect(() => new FramePlayer({ ...source, nFrames: 0 })).toThrow(RangeError);
    expect(() => new FramePlayer({ ...source, nFrames: 3.5 })).toThrow(RangeError);
    expect(() => new FramePlayer({ ...source, fps: 0 })).toThrow(RangeError);
  });

  it("steps from a paused frame k to k+1", () => {
    const p = new FramePlayer(source);
    p.scrub(5);
    p.step();
    expect(p.frame).toBe(6);
    expect(p.playing).toBe(false);
  });

  it("clamps steps and scrubs to the frame range", () => {
    const p = new FramePlayer(source);
    p.step(-1);
    expect(p.frame).toBe(0);
    p.scrub(999);
    expect(p.frame).toBe(23);
    p.step(1);
    expect(p.frame).toBe(23);
    p.scrub(-4);
    expect(p.frame).toBe(0);
  });

  it("stepping pauses playback", () => {
    const p = new FramePlayer(source);
    p.play();
    p.step();
    expect(p.playing).toBe(false);
  });

  it("advances one frame per 1/fps seconds while playing", () => {
    const p = new FramePlayer(source);
    p.play();
    expect(p.advance(1 / 24)).toBe(1);
    expect(p.frame).toBe(1);
    expect(p.advance(3 / 24)).toBe(3);
    expect(p.frame).toBe(4);
  });

  it("ignores time while paused", () => {
    const p = new FramePlayer(source);
    expect(p.advance(10)).toBe(0);
    expect(p.frame).toBe(0);
  });

  it("visits every frame and pauses on the last one", () => {
    const p = new FramePlayer(source);
    p.play();
    const visited = [p.frame];
    for (let i = 0; i < 200 && p.playing; i++) {
      if (p.advance(1 / 24) > 0) visited.push(p.frame);
    }
    expect(visited).toEqual([...Array(24).keys()]);
    expect(p.playing).toBe(false);
    expect(p.frame).toBe(23);
  });

  it("accumulates sub-frame ticks instead of dropping them", () => {
    const p = new FramePlayer(source);
    p.play();
    let crossed = 0;
    // 60 Hz wall clock against 24 fps playback
    for (let i = 0; i < 60; i++) crossed += p.advance(1 / 60);
    expect(crossed).toBe(23);
    expect(p.frame).toBe(23);
  });

  it("replays from the start when played at the end", () => {
    const p = new FramePlayer(source);
    p.scrub(23);
    p.play();
    expect(p.frame).toBe(0);
    expect(p.playing).toBe(true);
  });
});
