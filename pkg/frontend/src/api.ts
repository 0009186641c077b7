/** Thin typed client over the run service; every response is validated. */

import {
  GateStage,
  RunEvent,
  RunSnapshot,
  runSnapshotSchema,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  /** Server-side validation message, shown to the user verbatim. */
  readonly detail: string;

  constructor(status: number, detail: string) {
    super(`HTTP ${status}: ${detail}`);
    this.status = status;
    this.detail = detail;
  }
}

export type ApprovalEdit =
  | { template_yaml: string }
  | { selection: Record<string, string> }
  | { schematic_dot: string };

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  status: number;
  ok: boolean;
  text(): Promise<string>;
  arrayBuffer(): Promise<ArrayBuffer>;
}>;

async function raiseForStatus(res: Awaited<ReturnType<FetchLike>>): Promise<void> {
  if (res.ok) return;
  let detail = "";
  try {
    const body = JSON.parse(await res.text());
    detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body);
  } catch {
    detail = "request failed";
  }
  throw new ApiError(res.status, detail);
}

/** Parse an `id:`/`event:`/`data:` server-sent-event stream into events. */
export function parseSseText(text: string): RunEvent[] {
  const events: RunEvent[] = [];
  for (const block of text.split("\n\n")) {
    let seq: number | null = null;
    let kind = "message";
    const dataLines: string[] = [];
    for (const line of block.split("\n")) {
      if (line.startsWith("id:")) seq = Number(line.slice(3).trim());
      else if (line.startsWith("event:")) kind = line.slice(6).trim();
      else if (line.startsWith("data:")) dataLines.push(line.slice(5).trim());
    }
    if (seq === null || dataLines.length === 0) continue;
    events.push({ seq, event: kind, data: JSON.parse(dataLines.join("\n")) });
  }
  return events;
}

export class PicflowClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl: string, fetchFn?: FetchLike) {
    this.base = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? (globalThis.fetch as unknown as FetchLike);
  }

  private async json(url: string, init?: Parameters<FetchLike>[1]): Promise<unknown> {
    const res = await this.fetchFn(this.base + url, init);
    await raiseForStatus(res);
    return JSON.parse(await res.text());
  }

  async createRun(prompt: string, mode: "automated" | "step"): Promise<RunSnapshot> {
    const body = await this.json("/runs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ prompt, mode }),
    });
    return runSnapshotSchema.parse(body);
  }

  async getRun(id: string): Promise<RunSnapshot> {
    return runSnapshotSchema.parse(await this.json(`/runs/${id}`));
  }

  async approveStage(
    id: string,
    stage: GateStage,
    edit?: ApprovalEdit,
  ): Promise<RunSnapshot> {
    const body = await this.json(`/runs/${id}/stages/${stage}/approve`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: edit ? JSON.stringify(edit) : "",
    });
    return runSnapshotSchema.parse(body);
  }

  artifactUrl(id: string, name: string): string {
    return `${this.base}/runs/${id}/artifacts/${name}`;
  }

  async fetchArtifactText(id: string, name: string): Promise<string> {
    const res = await this.fetchFn(this.artifactUrl(id, name));
    await raiseForStatus(res);
    return res.text();
  }

  async fetchArtifactJson(id: string, name: string): Promise<unknown> {
    return JSON.parse(await this.fetchArtifactText(id, name));
  }

  async fetchArtifactBytes(id: string, name: string): Promise<Uint8Array> {
    const res = await this.fetchFn(this.artifactUrl(id, name));
    await raiseForStatus(res);
    return new Uint8Array(await res.arrayBuffer());
  }

  /** Non-blocking catch-up read of the event journal after `afterSeq`. */
  async fetchEvents(id: string, afterSeq = 0): Promise<RunEvent[]> {
    const url = `/runs/${id}/events?follow=false&last_event_id=${afterSeq}`;
    const res = await this.fetchFn(this.base + url);
    await raiseForStatus(res);
    return parseSseText(await res.text());
  }
}
