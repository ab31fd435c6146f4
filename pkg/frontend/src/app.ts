/**
 * Page controller for the review workbench.
 *
 * One live SessionView is the single source of truth: every action POSTs,
 * re-fetches, and re-renders. Nothing here mutates review state except
 * through the service API, and API failures leave the last fetched state
 * on screen with the server's message in the banner.
 */

import { ApiError, ReviewApi } from "./api.js";
import { buildTimeline } from "./history.js";
import { FramePlayer, playbackState } from "./player.js";
import { buildVerdictRequest, verdictBlocker, type CommentDraft } from "./verdict.js";
import type {
  Decision,
  JobView,
  SessionView,
  SimulateRequest,
} from "./types.js";

const SCENARIOS = ["drop", "throw", "tilt", "drag", "wind"] as const;
const JOB_POLL_MS = 750;
const DEFAULT_RUN: SimulateRequest = {
  config: { grid_res: 32 },
  duration: 1.0,
  fps: 24,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

class Workbench {
  private readonly api = new ReviewApi("");
  private session: SessionView | null = null;
  private player: FramePlayer | null = null;
  private selectedJobId: string | null = null;
  private pollTimer: number | null = null;
  private rafHandle: number | null = null;
  private lastTick = 0;
  private commentRows: CommentDraft[] = [{ part: "", text: "" }];

  async start(): Promise<void> {
    this.bindStatic();
    await this.refreshSessions();
  }

  // ---------------------------------------------------------- wiring

  private bindStatic(): void {
    el<HTMLFormElement>("create-form").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.createSession();
    });
    el<HTMLButtonElement>("annotate-btn").addEventListener("click", () => {
      void this.withSession((id) => this.api.annotate(id));
    });
    el<HTMLButtonElement>("simulate-btn").addEventListener("click", () => {
      void this.simulate();
    });
    el<HTMLButtonElement>("requery-btn").addEventListener("click", () => {
      void this.withSession((id) => this.api.requery(id));
    });
    el<HTMLButtonElement>("play-btn").addEventListener("click", () => {
      this.player?.toggle();
      this.renderPlayerControls();
    });
    el<HTMLButtonElement>("step-back-btn").addEventListener("click", () => {
      this.player?.step(-1);
      this.renderPlayerControls();
    });
    el<HTMLButtonElement>("step-fwd-btn").addEventListener("click", () => {
      this.player?.step(1);
      this.renderPlayerControls();
    });
    el<HTMLInputElement>("scrubber").addEventListener("input", (e) => {
      const k = Number((e.target as HTMLInputElement).value);
      this.player?.scrub(k);
      this.renderPlayerControls();
    });
    el<HTMLButtonElement>("add-comment-btn").addEventListener("click", () => {
      this.commentRows.push({ part: "", text: "" });
      this.renderVerdictForm();
    });
    el<HTMLFormElement>("verdict-form").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.submitVerdict();
    });

    const scenarioSelect = el<HTMLSelectElement>("scenario-select");
    for (const name of SCENARIOS) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      scenarioSelect.appendChild(opt);
    }
  }

  private setBanner(text: string | null): void {
    const banner = el<HTMLDivElement>("error-banner");
    banner.hidden = text === null;
    banner.textContent = text ?? "";
  }

  private surface(err: unknown): void {
    if (err instanceof ApiError) {
      this.setBanner(`${err.code}: ${err.message}`);
    } else {
      this.setBanner(String(err));
    }
  }

  /** Runs one API action against the open session and re-renders. */
  private async withSession(
    action: (id: string) => Promise<SessionView>,
  ): Promise<void> {
    if (!this.session) return;
    this.setBanner(null);
    try {
      this.renderSession(await action(this.session.session_id));
    } catch (err) {
      this.surface(err);
    }
  }

  // ---------------------------------------------------------- sessions

  private async refreshSessions(): Promise<void> {
    try {
      const { sessions } = await this.api.listSessions();
      const list = el<HTMLUListElement>("session-list");
      list.replaceChildren();
      for (const s of sessions) {
        const li = document.createElement("li");
        const button = document.createElement("button");
        button.type = "button";
        button.className = "session-link";
        button.textContent = `${s.shape_name} (${s.state})`;
        button.addEventListener("click", () => void this.openSession(s.session_id));
        li.appendChild(button);
        list.appendChild(li);
      }
    } catch (err) {
      this.surface(err);
    }
  }

  private async createSession(): Promise<void> {
    const shape = el<HTMLInputElement>("shape-name").value.trim();
    const partLines = el<HTMLTextAreaElement>("parts-input").value;
    const parts = partLines
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line.length > 0)
      .map((line) => {
        const [name, coarse] = line.split(":", 2);
        return {
          name: (name ?? "").trim(),
          coarse_material: (coarse ?? "").trim(),
        };
      });
    this.setBanner(null);
    try {
      const session = await this.api.createSession({ shape_name: shape, parts });
      await this.refreshSessions();
      this.renderSession(session);
    } catch (err) {
      this.surface(err);
    }
  }

  private async openSession(sessionId: string): Promise<void> {
    this.setBanner(null);
    try {
      this.renderSession(await this.api.getSession(sessionId));
    } catch (err) {
      this.surface(err);
    }
  }

  // ---------------------------------------------------------- simulate

  private async simulate(): Promise<void> {
    if (!this.session) return;
    const scenario = el<HTMLSelectElement>("scenario-select").value;
    this.setBanner(null);
    try {
      const job = await this.api.simulate(this.session.session_id, {
        ...DEFAULT_RUN,
        scenario: { type: scenario },
      });
      this.selectedJobId = job.job_id;
      this.renderSession(await this.api.getSession(this.session.session_id));
      this.pollJob(job.job_id);
    } catch (err) {
      this.surface(err);
    }
  }

  private pollJob(jobId: string): void {
    this.stopPolling();
    this.pollTimer = window.setInterval(() => {
      void (async () => {
        try {
          const job = await this.api.getJob(jobId);
          if (job.status === "done" || job.status === "failed") {
            this.stopPolling();
            if (this.session) {
              this.renderSession(await this.api.getSession(this.session.session_id));
            }
          } else {
            this.renderJobList();
          }
        } catch (err) {
          this.stopPolling();
          this.surface(err);
        }
      })();
    }, JOB_POLL_MS);
  }

  private stopPolling(): void {
    if (this.pollTimer !== null) {
      window.clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  // ---------------------------------------------------------- verdicts

  private async submitVerdict(): Promise<void> {
    if (!this.session || !this.selectedJobId) return;
    const decision = (
      document.querySelector<HTMLInputElement>('input[name="decision"]:checked')
        ?.value ?? "plausible"
    ) as Decision;
    this.readCommentRows();

    const blocked = verdictBlocker(decision, this.commentRows);
    const note = el<HTMLDivElement>("verdict-note");
    if (blocked !== null) {
      // stop before any request leaves the page
      note.hidden = false;
      note.textContent = blocked;
      return;
    }
    note.hidden = true;
    const request = buildVerdictRequest(
      decision,
      this.selectedJobId,
      this.commentRows,
      el<HTMLInputElement>("reviewer-input").value.trim(),
    );
    await this.withSession((id) => this.api.submitVerdict(id, request));
  }

  private readCommentRows(): void {
    const rows = Array.from(
      document.querySelectorAll<HTMLDivElement>("#comment-rows .comment-row"),
    );
    this.commentRows = rows.map((row) => ({
      part: row.querySelector<HTMLSelectElement>("select")?.value ?? "",
      text: row.querySelector<HTMLInputElement>("input")?.value ?? "",
    }));
  }

  private renderVerdictForm(): void {
    const container = el<HTMLDivElement>("comment-rows");
    container.replaceChildren();
    const parts = this.session?.description.parts ?? [];
    for (const draft of this.commentRows) {
      const row = document.createElement("div");
      row.className = "comment-row";

      const select = document.createElement("select");
      const anyOpt = document.createElement("option");
      anyOpt.value = "";
      anyOpt.textContent = "(whole object)";
      select.appendChild(anyOpt);
      for (const part of parts) {
        const opt = document.createElement("option");
        opt.value = part.name;
        opt.textContent = part.name;
        select.appendChild(opt);
      }
      select.value = draft.part;

      const input = document.createElement("input");
      input.type = "text";
      input.placeholder = "what looks wrong";
      input.value = draft.text;

      row.appendChild(select);
      row.appendChild(input);
      container.appendChild(row);
    }
  }

  // ---------------------------------------------------------- playback

  private selectJob(job: JobView): void {
    this.selectedJobId = job.job_id;
    this.player = null;
    this.stopRaf();

    const panel = el<HTMLElement>("player-panel");
    const state = playbackState(job);
    if (state.kind === "error") {
      panel.hidden = true;
      this.setBanner(`simulation failed: ${state.message}`);
    } else if (state.kind === "pending") {
      panel.hidden = true;
      this.pollJob(job.job_id);
    } else {
      panel.hidden = false;
      this.setBanner(null);
      this.player = new FramePlayer(state.source);
      const scrubber = el<HTMLInputElement>("scrubber");
      scrubber.min = "0";
      scrubber.max = String(this.player.lastFrame);
      this.renderPlayerControls();
      this.startRaf();
    }
    this.renderJobList();
    el<HTMLElement>("verdict-panel").hidden = state.kind !== "ready";
  }

  private renderPlayerControls(): void {
    if (!this.player) return;
    const k = this.player.frame;
    el<HTMLImageElement>("frame-img").src = this.api.frameUrl(this.player.jobId, k);
    el<HTMLInputElement>("scrubber").value = String(k);
    el<HTMLSpanElement>("frame-label").textContent =
      `${k} / ${this.player.lastFrame}`;
    el<HTMLButtonElement>("play-btn").textContent = this.player.playing
      ? "Pause"
      : "Play";
  }

  private startRaf(): void {
    this.lastTick = performance.now();
    const tick = (now: number): void => {
      if (!this.player) return;
      const dt = (now - this.lastTick) / 1000;
      this.lastTick = now;
      if (this.player.advance(dt) > 0 || !this.player.playing) {
        this.renderPlayerControls();
      }
      this.rafHandle = window.requestAnimationFrame(tick);
    };
    this.rafHandle = window.requestAnimationFrame(tick);
  }

  private stopRaf(): void {
    if (this.rafHandle !== null) {
      window.cancelAnimationFrame(this.rafHandle);
      this.rafHandle = null;
    }
  }

  // ---------------------------------------------------------- rendering

  private renderSession(session: SessionView): void {
    this.session = session;
    el<HTMLElement>("session-panel").hidden = false;
    el<HTMLHeadingElement>("session-title").textContent =
      `${session.shape_name} (${session.session_id})`;

    const badge = el<HTMLSpanElement>("state-badge");
    badge.textContent = session.state;
    badge.dataset.state = session.state;
    el<HTMLSpanElement>("rect-count").textContent =
      `rectifications: ${session.rectification_count}`;

    el<HTMLButtonElement>("annotate-btn").disabled = session.state !== "created";
    el<HTMLButtonElement>("simulate-btn").disabled =
      session.state !== "proposed" && session.state !== "simulated";
    el<HTMLButtonElement>("requery-btn").disabled =
      session.state !== "awaiting_requery";

    this.renderJobList();
    this.renderVerdictForm();
    this.renderHistory();

    const selected = session.jobs.find((j) => j.job_id === this.selectedJobId);
    if (selected) {
      this.selectJob(selected);
    } else {
      el<HTMLElement>("player-panel").hidden = true;
      el<HTMLElement>("verdict-panel").hidden = true;
    }
  }

  private renderJobList(): void {
    const list = el<HTMLUListElement>("job-list");
    list.replaceChildren();
    for (const job of this.session?.jobs ?? []) {
      const li = document.createElement("li");
      const button = document.createElement("button");
      button.type = "button";
      button.className = "job-link";
      button.dataset.status = job.status;
      const scenario = typeof job.scenario.type === "string" ? job.scenario.type : "?";
      button.textContent = `${scenario} [${job.status}]`;
      if (job.job_id === this.selectedJobId) button.classList.add("selected");
      button.addEventListener("click", () => this.selectJob(job));
      li.appendChild(button);
      list.appendChild(li);
    }
  }

  private renderHistory(): void {
    if (!this.session) return;
    const timeline = buildTimeline(this.session);
    el<HTMLSpanElement>("history-count").textContent =
      `${timeline.entries.length} iteration(s), ` +
      `${timeline.rectificationCount} rectification(s)`;

    const list = el<HTMLOListElement>("history-list");
    list.replaceChildren();
    for (const entry of timeline.entries) {
      const li = document.createElement("li");
      li.className = `iteration status-${entry.status}`;

      const head = document.createElement("div");
      head.className = "iteration-head";
      const statusText =
        entry.status === "ok" ? "valid" : `${entry.status}: ${entry.statusDetail}`;
      head.textContent = `#${entry.index} [${statusText}]` +
        (entry.verdict ? ` verdict: ${entry.verdict}` : "");
      li.appendChild(head);

      const prompt = document.createElement("div");
      prompt.className = "excerpt";
      prompt.textContent = `prompt: ${entry.promptExcerpt}`;
      li.appendChild(prompt);

      const response = document.createElement("div");
      response.className = "excerpt";
      response.textContent = `response: ${entry.responseExcerpt}`;
      li.appendChild(response);

      if (entry.expertComment) {
        const comment = document.createElement("div");
        comment.className = "excerpt";
        comment.textContent = `feedback: ${entry.expertComment}`;
        li.appendChild(comment);
      }
      list.appendChild(li);
    }
  }
}

window.addEventListener("DOMContentLoaded", () => {
  void new Workbench().start();
});
