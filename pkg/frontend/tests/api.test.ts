import { describe, expect, it } from "vitest";

import { ApiError, PicflowClient, parseSseText } from "../src/api.js";
import { MockService } from "./mock-service.js";

describe("server-sent event text parsing", () => {
  it("splits id/event/data blocks in order", () => {
    const body =
      'id: 1\nevent: state\ndata: {"state": "created"}\n\n' +
      'id: 2\nevent: stage\ndata: {"stage": "EE", "artifacts": []}\n\n';
    const events = parseSseText(body);
    expect(events).toEqual([
      { seq: 1, event: "state", data: { state: "created" } },
      { seq: 2, event: "stage", data: { stage: "EE", artifacts: [] } },
    ]);
  });

  it("ignores incomplete blocks", () => {
    expect(parseSseText("event: noise\n\n")).toEqual([]);
    expect(parseSseText("")).toEqual([]);
  });
});

describe("client", () => {
  it("creates and fetches a run with a validated snapshot", async () => {
    const service = new MockService();
    const client = new PicflowClient("", service.fetch);
    const created = await client.createRun("a small splitter", "step");
    expect(created.mode).toBe("step");
    expect(created.state).toBe("awaiting_template_approval");
    const fetched = await client.getRun(created.id);
    expect(fetched.id).toBe(created.id);
    expect(fetched.artifacts).toContain("template.yaml");
  });

  it("surfaces the server's validation detail verbatim", async () => {
    const service = new MockService();
    const client = new PicflowClient("", service.fetch);
    const err = await client.createRun("", "step").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(400);
    expect((err as ApiError).detail).toBe("prompt must not be empty");
  });

  it("reports missing runs and artifacts as 404", async () => {
    const service = new MockService();
    const client = new PicflowClient("", service.fetch);
    await expect(client.getRun("nope")).rejects.toMatchObject({ status: 404 });
    const run = await client.createRun("x", "step");
    await expect(client.fetchArtifactText(run.id, "layout.gds")).rejects.toMatchObject({
      status: 404,
    });
  });

  it("builds stable artifact URLs", () => {
    const client = new PicflowClient("http://localhost:8000/");
    expect(client.artifactUrl("r7", "layout.gds")).toBe(
      "http://localhost:8000/runs/r7/artifacts/layout.gds",
    );
  });

  it("fetches journal entries after a given sequence number", async () => {
    const service = new MockService();
    const client = new PicflowClient("", service.fetch);
    const run = await client.createRun("x", "step");
    const all = await client.fetchEvents(run.id);
    const tail = await client.fetchEvents(run.id, 2);
    expect(tail).toEqual(all.slice(2));
    expect(all[0]!.seq).toBe(1);
  });
});
