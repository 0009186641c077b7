import { describe, expect, it } from "vitest";

import { PicflowClient } from "../src/api.js";
import { CandidatePicker, parseCandidateTable } from "../src/candidates.js";
import { RunWorkflow } from "../src/workflow.js";
import { MockService } from "./mock-service.js";

function setup() {
  const service = new MockService();
  const client = new PicflowClient("", service.fetch);
  return { service, client };
}

describe("scripted step-by-step review", () => {
  it(
    "approves template, picks candidate #2, survives a rejected edit, and " +
      "ends with downloadable layout bytes and an exact journal mirror",
    async () => {
      const { service, client } = setup();
      const wf = await RunWorkflow.start(client, "splitter feeding an interferometer", "step");

      // --- template gate: approve as-is
      await wf.waitForPause();
      expect(wf.store.openGate).toBe("template");
      const templateResult = await wf.approve();
      expect(templateResult.ok).toBe(true);

      // --- component gate: choose candidate #2 for block B1
      await wf.waitForPause();
      expect(wf.store.openGate).toBe("components");
      const picker = new CandidatePicker(
        parseCandidateTable(await wf.fetchArtifactJson("candidates.json")),
      );
      picker.select("B1", 1);

      // an invalid edit first: the server rejects it with a field-level
      // message and the run state must not move
      const rejected = await wf.approve({ selection: { B1: "not_a_cell" } });
      expect(rejected).toEqual({
        ok: false,
        message: "'not_a_cell' is not a graded candidate for 'B1'",
      });
      expect(service.state(wf.store.id)).toBe("awaiting_component_choice");
      expect(wf.store.openGate).toBe("components");

      const accepted = await wf.approve({ selection: picker.toSelectionPayload() });
      expect(accepted.ok).toBe(true);
      const design = await wf.fetchArtifactText("design.yaml");
      expect(design).toContain("cell: mmi2x2");

      // --- schematic gate, then run to completion
      await wf.waitForPause();
      expect(wf.store.openGate).toBe("schematic");
      expect((await wf.approve()).ok).toBe(true);
      await wf.waitForPause();

      expect(wf.store.isTerminal).toBe(true);
      expect(wf.store.outcome).toBe("S");

      // downloadable GDSII artifact
      const bytes = await wf.downloadLayout();
      expect(bytes.length).toBeGreaterThan(0);
      expect([...bytes]).toEqual([...service.layoutBytes]);
      expect(wf.layoutDownloadUrl()).toBe(`/runs/${wf.store.id}/artifacts/layout.gds`);

      // the UI's event log mirrors the service journal exactly
      expect([...wf.store.log.all]).toEqual(service.journal(wf.store.id));
    },
  );

  it("walks every gate in order with no edits", async () => {
    const { service, client } = setup();
    const wf = await RunWorkflow.start(client, "plain run", "step");
    await wf.approveThrough();
    expect(wf.store.outcome).toBe("S");
    const gates = wf.store.log
      .states()
      .filter((s) => s.startsWith("awaiting_"));
    expect(gates).toEqual([
      "awaiting_template_approval",
      "awaiting_component_choice",
      "awaiting_schematic_approval",
    ]);
    expect([...wf.store.log.all]).toEqual(service.journal(wf.store.id));
  });

  it("rejects an invalid template edit verbatim and accepts a fixed one", async () => {
    const { service, client } = setup();
    const wf = await RunWorkflow.start(client, "run", "step");
    await wf.waitForPause();
    const bad = await wf.approve({ template_yaml: "name: demo\n" });
    expect(bad.ok).toBe(false);
    if (!bad.ok) {
      expect(bad.message).toBe("template_yaml: missing required 'blocks' section");
    }
    expect(service.state(wf.store.id)).toBe("awaiting_template_approval");
    const good = await wf.approve({ template_yaml: "name: demo\nblocks:\n- id: B1\n" });
    expect(good.ok).toBe(true);
  });

  it("reports approval out of turn without advancing anything", async () => {
    const { service, client } = setup();
    const wf = await RunWorkflow.start(client, "run", "step");
    await wf.waitForPause(); // template gate
    const result = await (wf as unknown as {
      approve(edit?: unknown): Promise<{ ok: boolean; message?: string }>;
    }).approve();
    expect(result.ok).toBe(true);
    // second approval of the same gate hits a 409 conflict
    const client2 = new PicflowClient("", service.fetch);
    const err = await client2
      .approveStage(wf.store.id, "template")
      .catch((e) => e as { status: number; detail: string });
    expect((err as { status: number }).status).toBe(409);
    expect((err as { detail: string }).detail).toContain("awaiting_template_approval");
  });

  it("an automated run never pauses at a gate", async () => {
    const { service, client } = setup();
    const wf = await RunWorkflow.start(client, "run", "automated");
    await wf.waitForPause();
    expect(wf.store.isTerminal).toBe(true);
    expect(wf.store.log.states().some((s) => s.startsWith("awaiting_"))).toBe(false);
    expect([...wf.store.log.all]).toEqual(service.journal(wf.store.id));
  });
});
