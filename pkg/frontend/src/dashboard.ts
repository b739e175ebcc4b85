/** Session dashboard controller: owns the poll loop and turns user actions
 * into single endpoint calls. Rendering goes through a sink so tests can
 * observe markup without a DOM. */

import { ApiError, Client, type FeedbackBody, type SessionState } from "./api.js";
import { isActive, viewModel } from "./state.js";
import { renderDashboard, type Tab } from "./view.js";

export interface Sink {
  html(markup: string): void;
  login(message: string): void;
  notice(message: string): void;
  save(name: string, bytes: ArrayBuffer): void;
}

export const POLL_MS = 1000;

export class Dashboard {
  state: SessionState | null = null;
  private tab: Tab | undefined;
  private timer: ReturnType<typeof setInterval> | null = null;
  private busy = false;

  constructor(
    private client: Client,
    private sink: Sink,
    readonly sessionId: string,
    private intervalMs: number = POLL_MS,
  ) {}

  polling(): boolean {
    return this.timer !== null;
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Render a fetched state and keep the poll loop consistent with it:
   * ticking through agent phases, silent at gates and at the end. */
  private show(state: SessionState): void {
    this.state = state;
    this.sink.html(renderDashboard(viewModel(state), this.tab));
    if (isActive(state.phase)) {
      if (this.timer === null) {
        this.timer = setInterval(() => void this.tick(), this.intervalMs);
      }
    } else {
      this.stop();
    }
  }

  async refresh(): Promise<void> {
    try {
      this.show(await this.client.getState(this.sessionId));
    } catch (err) {
      this.fault(err);
    }
  }

  /** One poll: nudge the workflow forward, then re-render whatever is true
   * now. A 409 means a gate or the end arrived between polls; the refetch
   * will show it. */
  private async tick(): Promise<void> {
    if (this.busy) return;
    this.busy = true;
    try {
      try {
        await this.client.step(this.sessionId);
      } catch (err) {
        if (!(err instanceof ApiError)) throw err;
        if (err.status === 401) {
          this.fault(err);
          return;
        }
        // 409 (gate / finished) and 5xx (agent fault) both show up in state
      }
      await this.refresh();
    } finally {
      this.busy = false;
    }
  }

  setTab(tab: Tab): void {
    this.tab = tab;
    if (this.state) this.sink.html(renderDashboard(viewModel(this.state), tab));
  }

  approve(gate: "graph" | "sensor"): Promise<void> {
    return this.decision({ gate, action: "approve" });
  }

  revise(feedback: string): Promise<void> {
    return this.decision({ gate: "graph", action: "revise", feedback });
  }

  edit(code: string): Promise<void> {
    return this.decision({ gate: "sensor", action: "edit", code });
  }

  private async decision(body: FeedbackBody): Promise<void> {
    try {
      this.show(await this.client.feedback(this.sessionId, body));
    } catch (err) {
      await this.absorb(err);
    }
  }

  async mapping(text: string): Promise<void> {
    try {
      this.show(await this.client.mapping(this.sessionId, text));
    } catch (err) {
      await this.absorb(err);
    }
  }

  async download(): Promise<void> {
    let bytes: ArrayBuffer;
    try {
      bytes = await this.client.exportNotebook(this.sessionId);
    } catch (err) {
      await this.absorb(err);
      return;
    }
    this.sink.save(`${this.sessionId}.ipynb`, bytes);
  }

  /** Stale-gate conflicts refetch silently; bad input gets a notice. */
  private async absorb(err: unknown): Promise<void> {
    if (!(err instanceof ApiError)) throw err;
    if (err.status === 401) {
      this.fault(err);
      return;
    }
    if (err.status === 409) {
      await this.refresh();
      return;
    }
    this.sink.notice(err.message);
  }

  private fault(err: unknown): void {
    this.stop();
    if (err instanceof ApiError && err.status === 401) {
      this.sink.login(err.message);
      return;
    }
    throw err;
  }
}
