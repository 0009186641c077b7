/** Client-side event journal with the same ordering guarantees as the server. */

import { PicflowClient } from "./api.js";
import { RunEvent } from "./types.js";

export class EventGapError extends Error {
  constructor(expected: number, got: number) {
    super(`event gap: expected seq ${expected}, got ${got}`);
  }
}

/**
 * An append-only mirror of one run's journal.  Sequence numbers are
 * contiguous from 1; duplicates (redelivery after reconnect) are ignored
 * and gaps are rejected so the caller can re-sync instead of rendering an
 * inconsistent view.
 */
export class EventLog {
  private readonly entries: RunEvent[] = [];

  get lastSeq(): number {
    const last = this.entries[this.entries.length - 1];
    return last ? last.seq : 0;
  }

  get all(): readonly RunEvent[] {
    return this.entries;
  }

  append(event: RunEvent): boolean {
    if (event.seq <= this.lastSeq) return false; // replayed duplicate
    if (event.seq !== this.lastSeq + 1) {
      throw new EventGapError(this.lastSeq + 1, event.seq);
    }
    this.entries.push(event);
    return true;
  }

  appendAll(events: Iterable<RunEvent>): number {
    let added = 0;
    for (const e of events) if (this.append(e)) added += 1;
    return added;
  }

  /** State-change events only, in order. */
  states(): string[] {
    return this.entries
      .filter((e) => e.event === "state")
      .map((e) => String(e.data["state"]));
  }
}

/** Pull any journal entries newer than what the log already holds. */
export async function syncEvents(
  client: PicflowClient,
  runId: string,
  log: EventLog,
): Promise<number> {
  const fresh = await client.fetchEvents(runId, log.lastSeq);
  return log.appendAll(fresh);
}

export interface EventSourceLike {
  onmessage: ((e: { lastEventId: string; type: string; data: string }) => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

/**
 * Live subscription that survives reconnects: the resume point is always
 * the log's own last sequence number, so redelivered events are dropped
 * and nothing is skipped.
 */
export class EventSubscription {
  private source: EventSourceLike | null = null;
  private closed = false;

  constructor(
    private readonly makeSource: EventSourceFactory,
    private readonly baseUrl: string,
    private readonly runId: string,
    private readonly log: EventLog,
    private readonly onEvent: (e: RunEvent) => void,
  ) {}

  open(): void {
    if (this.closed) return;
    const url =
      `${this.baseUrl}/runs/${this.runId}/events` +
      `?last_event_id=${this.log.lastSeq}`;
    const source = this.makeSource(url);
    source.onmessage = (msg) => {
      const event: RunEvent = {
        seq: Number(msg.lastEventId),
        event: msg.type,
        data: JSON.parse(msg.data),
      };
      if (this.log.append(event)) this.onEvent(event);
    };
    source.onerror = () => {
      source.close();
      if (!this.closed) this.open(); // resume from lastSeq
    };
    this.source = source;
  }

  close(): void {
    this.closed = true;
    this.source?.close();
  }
}
