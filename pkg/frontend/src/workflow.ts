/** Step-by-step review flow: inspect, optionally edit, approve, repeat. */

import { ApiError, ApprovalEdit, PicflowClient } from "./api.js";
import { RunStore } from "./state.js";
import { GateStage, RunSnapshot } from "./types.js";

export type ApprovalResult =
  | { ok: true; snapshot: RunSnapshot }
  | { ok: false; message: string };

export class WorkflowTimeout extends Error {}

export class RunWorkflow {
  readonly store: RunStore;

  constructor(
    private readonly client: PicflowClient,
    snapshot: RunSnapshot,
  ) {
    this.store = new RunStore(snapshot);
  }

  static async start(
    client: PicflowClient,
    prompt: string,
    mode: "automated" | "step",
  ): Promise<RunWorkflow> {
    return new RunWorkflow(client, await client.createRun(prompt, mode));
  }

  /** Pull new journal entries and fold them into the view. */
  async sync(): Promise<void> {
    const fresh = await this.client.fetchEvents(this.store.id, this.store.log.lastSeq);
    this.store.applyAll(fresh);
  }

  /** Poll until the run reaches a gate or a terminal state. */
  async waitForPause(timeoutMs = 10_000, pollMs = 10): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      await this.sync();
      if (this.store.openGate !== null || this.store.isTerminal) return;
      if (Date.now() > deadline) {
        throw new WorkflowTimeout(`run ${this.store.id} still ${this.store.state}`);
      }
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }

  /**
   * Approve the currently open gate, optionally with an edit.  A server
   * rejection (validation failure) leaves the run untouched and is
   * returned with the server's message verbatim for display.
   */
  async approve(edit?: ApprovalEdit): Promise<ApprovalResult> {
    const gate = this.store.openGate;
    if (gate === null) {
      return { ok: false, message: `run is ${this.store.state}, nothing to approve` };
    }
    return this.approveStage(gate, edit);
  }

  private async approveStage(
    stage: GateStage,
    edit?: ApprovalEdit,
  ): Promise<ApprovalResult> {
    try {
      const snapshot = await this.client.approveStage(this.store.id, stage, edit);
      this.store.reconcile(snapshot);
      return { ok: true, snapshot };
    } catch (err) {
      if (err instanceof ApiError && (err.status === 422 || err.status === 409)) {
        return { ok: false, message: err.detail };
      }
      throw err;
    }
  }

  /** Drive a paused run to completion, approving every gate untouched. */
  async approveThrough(timeoutMs = 30_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      await this.waitForPause(Math.max(deadline - Date.now(), 1));
      if (this.store.isTerminal) return;
      const result = await this.approve();
      if (!result.ok) throw new Error(result.message);
    }
  }

  async fetchArtifactJson(name: string): Promise<unknown> {
    return this.client.fetchArtifactJson(this.store.id, name);
  }

  async fetchArtifactText(name: string): Promise<string> {
    return this.client.fetchArtifactText(this.store.id, name);
  }

  /** The raw GDSII bytes, for the download link. */
  async downloadLayout(): Promise<Uint8Array> {
    return this.client.fetchArtifactBytes(this.store.id, "layout.gds");
  }

  layoutDownloadUrl(): string {
    return this.client.artifactUrl(this.store.id, "layout.gds");
  }
}
