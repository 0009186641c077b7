import { describe, expect, it } from "vitest";

import { PicflowClient } from "../src/api.js";
import {
  EventGapError,
  EventLog,
  EventSourceLike,
  EventSubscription,
  syncEvents,
} from "../src/events.js";
import { RunEvent } from "../src/types.js";
import { MockService } from "./mock-service.js";

const ev = (seq: number, state = "x"): RunEvent => ({
  seq,
  event: "state",
  data: { state },
});

describe("event log", () => {
  it("keeps contiguous sequence numbers", () => {
    const log = new EventLog();
    expect(log.append(ev(1))).toBe(true);
    expect(log.append(ev(2))).toBe(true);
    expect(log.lastSeq).toBe(2);
  });

  it("drops redelivered duplicates silently", () => {
    const log = new EventLog();
    log.appendAll([ev(1), ev(2)]);
    expect(log.append(ev(2))).toBe(false);
    expect(log.append(ev(1))).toBe(false);
    expect(log.all).toHaveLength(2);
  });

  it("refuses gaps so the caller can re-sync", () => {
    const log = new EventLog();
    log.append(ev(1));
    expect(() => log.append(ev(3))).toThrow(EventGapError);
  });

  it("extracts the state trail", () => {
    const log = new EventLog();
    log.appendAll([
      ev(1, "created"),
      { seq: 2, event: "stage", data: { stage: "EE" } },
      ev(3, "interpreting"),
    ]);
    expect(log.states()).toEqual(["created", "interpreting"]);
  });
});

describe("journal sync", () => {
  it("is idempotent and only pulls the tail", async () => {
    const service = new MockService();
    const client = new PicflowClient("", service.fetch);
    const run = await client.createRun("x", "step");
    const log = new EventLog();
    const first = await syncEvents(client, run.id, log);
    expect(first).toBeGreaterThan(0);
    expect(await syncEvents(client, run.id, log)).toBe(0);
    expect(log.all.map((e) => e.seq)).toEqual(
      service.journal(run.id).map((e) => e.seq),
    );
  });
});

describe("live subscription", () => {
  class FakeSource implements EventSourceLike {
    onmessage: EventSourceLike["onmessage"] = null;
    onerror: EventSourceLike["onerror"] = null;
    closed = false;
    constructor(readonly url: string) {}
    close(): void {
      this.closed = true;
    }
    deliver(e: RunEvent): void {
      this.onmessage?.({
        lastEventId: String(e.seq),
        type: e.event,
        data: JSON.stringify(e.data),
      });
    }
  }

  it("resumes from its own last sequence after a drop, with no dup or skip", () => {
    const sources: FakeSource[] = [];
    const log = new EventLog();
    const seen: number[] = [];
    const sub = new EventSubscription(
      (url) => {
        const s = new FakeSource(url);
        sources.push(s);
        return s;
      },
      "",
      "r1",
      log,
      (e) => seen.push(e.seq),
    );
    sub.open();
    sources[0]!.deliver(ev(1));
    sources[0]!.deliver(ev(2));
    sources[0]!.onerror?.(); // connection drops; auto-reconnect
    expect(sources).toHaveLength(2);
    expect(sources[1]!.url).toContain("last_event_id=2");
    sources[1]!.deliver(ev(2)); // server replays the boundary event
    sources[1]!.deliver(ev(3));
    expect(seen).toEqual([1, 2, 3]);
    sub.close();
    expect(sources[1]!.closed).toBe(true);
  });
});
