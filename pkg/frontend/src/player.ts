/**
 * Frame-sequence playback model.
 *
 * The player is a pure clock over integer frame indices; it owns no DOM and
 * does no fetching. The page drives it from requestAnimationFrame and swaps
 * the displayed PNG whenever `frame` changes, so the same logic runs
 * unchanged under node for tests.
 */

import type { JobView } from "./types.js";

export interface PlayerSource {
  jobId: string;
  nFrames: number;
  fps: number;
}

/** What the playback panel should show for a job in its current status. */
export type PlaybackState =
  | { kind: "pending"; status: string }
  | { kind: "error"; message: string }
  | { kind: "ready"; source: PlayerSource };

export function playbackState(job: JobView): PlaybackState {
  if (job.status === "failed") {
    return { kind: "error", message: job.error ?? "simulation failed" };
  }
  if (job.status !== "done" || job.n_frames === null || job.n_frames < 1) {
    return { kind: "pending", status: job.status };
  }
  return {
    kind: "ready",
    source: { jobId: job.job_id, nFrames: job.n_frames, fps: job.fps },
  };
}

export class FramePlayer {
  readonly jobId: string;
  readonly nFrames: number;
  readonly fps: number;

  private current = 0;
  private running = false;
  private accum = 0;

  constructor(source: PlayerSource) {
    if (!Number.isInteger(source.nFrames) || source.nFrames < 1) {
      throw new RangeError(`player needs at least one frame, got ${source.nFrames}`);
    }
    if (!(source.fps > 0)) {
      throw new RangeError(`fps must be positive, got ${source.fps}`);
    }
    this.jobId = source.jobId;
    this.nFrames = source.nFrames;
    this.fps = source.fps;
  }

  get frame(): number {
    return this.current;
  }

  get playing(): boolean {
    return this.running;
  }

  /** Upper bound of the scrubber: frames are indexed 0..nFrames-1. */
  get lastFrame(): number {
    return this.nFrames - 1;
  }

  get secondsPerFrame(): number {
    return 1 / this.fps;
  }

  /** Starts playback; pressing play on the last frame replays from 0. */
  play(): void {
    if (this.current >= this.lastFrame) {
      this.current = 0;
    }
    this.accum = 0;
    this.running = true;
  }

  pause(): void {
    this.running = false;
    this.accum = 0;
  }

  toggle(): void {
    if (this.running) this.pause();
    else this.play();
  }

  /** Manual frame step; pauses playback and clamps to the valid range. */
  step(delta = 1): void {
    this.pause();
    this.current = this.clamp(this.current + delta);
  }

  /** Scrubber drag; clamps but keeps the current play/pause state. */
  scrub(k: number): void {
    this.current = this.clamp(Math.round(k));
  }

  /**
   * Advances the clock by dt seconds of wall time and returns how many
   * frames were crossed. Playback holds on the final frame and pauses.
   */
  advance(dt: number): number {
    if (!this.running || !(dt > 0)) return 0;
    this.accum += dt;
    let crossed = 0;
    const spf = this.secondsPerFrame;
    while (this.accum >= spf && this.current < this.lastFrame) {
      this.accum -= spf;
      this.current += 1;
      crossed += 1;
    }
    if (this.current >= this.lastFrame) {
      this.pause();
    }
    return crossed;
  }

  private clamp(k: number): number {
    return Math.min(this.lastFrame, Math.max(0, k));
  }
}
