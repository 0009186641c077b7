/** In-memory stand-in for the run service, mirroring its HTTP contract:
 * sequential journal, step-mode approval gates, 422 on invalid edits with
 * the state left untouched, and typed artifact downloads.
 */

import { FetchLike } from "../src/api.js";
import { RunEvent } from "../src/types.js";

interface MockRun {
  id: string;
  prompt: string;
  mode: "automated" | "step";
  state: string;
  outcome: string | null;
  error: string | null;
  journal: RunEvent[];
  artifacts: Map<string, Uint8Array>;
  design: Record<string, string>; // block id -> chosen cell
}

const CANDIDATES = {
  B1: [
    { name: "mmi1x2", grade: "exact", rationale: "matches the 1x2 splitter request", score: 0.96 },
    { name: "mmi2x2", grade: "partial", rationale: "2x2 split, one extra input", score: 0.71 },
    { name: "directional_coupler", grade: "poor", rationale: "tunable ratio, not a fixed split", score: 0.42 },
  ],
  B2: [
    { name: "mzi_2x2", grade: "exact", rationale: "balanced interferometer", score: 0.94 },
    { name: "mzi_2x2_heater_tin_cband", grade: "partial", rationale: "adds a heater", score: 0.66 },
  ],
} as const;

const TEMPLATE_YAML = "schema_version: 1\nname: demo\nblocks:\n- id: B1\n- id: B2\n";
const SCHEMATIC_DOT =
  'graph demo {\n  B1 [label="{{<o1> o1} | B1: mmi1x2 | {<o2> o2|<o3> o3}}"];\n  B1:o2 -- B2:o1;\n}\n';
const GDS_BYTES = new Uint8Array([0, 6, 0, 2, 0, 7, 0, 28, 1, 2, 3, 4, 5, 6]);
const GEOMETRY = {
  bbox: [0, 0, 50, 20],
  instances: [],
  routes: [],
  ports: {},
};
const SPECTRUM = {
  wavelengths_um: [1.53, 1.55, 1.57],
  ports: ["B1:o1"],
  responses: { "B1:o1->B1:o1": { real: [0, 0, 0], imag: [0, 0, 0] } },
};

const text = (s: string) => new TextEncoder().encode(s);

function response(status: number, body: string | Uint8Array) {
  const bytes = typeof body === "string" ? text(body) : body;
  return {
    status,
    ok: status < 400,
    text: async () => new TextDecoder().decode(bytes),
    arrayBuffer: async () =>
      bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.byteLength),
  };
}

const error = (status: number, detail: string) =>
  response(status, JSON.stringify({ detail }));

export class MockService {
  private readonly runs = new Map<string, MockRun>();
  private nextId = 1;
  readonly layoutBytes = GDS_BYTES;

  journal(id: string): RunEvent[] {
    return [...this.run(id).journal];
  }

  state(id: string): string {
    return this.run(id).state;
  }

  private run(id: string): MockRun {
    const run = this.runs.get(id);
    if (!run) throw new Error(`no mock run ${id}`);
    return run;
  }

  private emit(run: MockRun, event: string, data: Record<string, unknown>): void {
    run.journal.push({ seq: run.journal.length + 1, event, data });
  }

  private setState(run: MockRun, state: string, extra: Record<string, unknown> = {}): void {
    run.state = state;
    this.emit(run, "state", { state, ...extra });
  }

  private snapshot(run: MockRun): string {
    return JSON.stringify({
      id: run.id,
      prompt: run.prompt,
      mode: run.mode,
      state: run.state,
      outcome: run.outcome,
      error: run.error,
      artifacts: [...run.artifacts.keys()].sort(),
      stage_usage: { EE: { input_tokens: 120, output_tokens: 40, total_tokens: 160 } },
      stage_seconds: { EE: 0.01 },
    });
  }

  readonly fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const [path, query = ""] = url.split("?");
    const parts = path!.split("/").filter(Boolean);

    if (method === "POST" && path === "/runs") {
      return this.createRun(JSON.parse(init?.body ?? "{}"));
    }
    if (parts[0] !== "runs" || !parts[1]) return error(404, "not found");
    const run = this.runs.get(parts[1]);
    if (!run) return error(404, `no run '${parts[1]}'`);

    if (method === "GET" && parts.length === 2) {
      return response(200, this.snapshot(run));
    }
    if (method === "GET" && parts[2] === "events") {
      const after = Number(new URLSearchParams(query).get("last_event_id") ?? 0);
      const body = run.journal
        .filter((e) => e.seq > after)
        .map((e) => `id: ${e.seq}\nevent: ${e.event}\ndata: ${JSON.stringify(e.data)}\n\n`)
        .join("");
      return response(200, body);
    }
    if (method === "GET" && parts[2] === "artifacts" && parts[3]) {
      const payload = run.artifacts.get(parts[3]);
      if (!payload) return error(404, `run ${run.id} has no artifact '${parts[3]}'`);
      return response(200, payload);
    }
    if (method === "POST" && parts[2] === "stages" && parts[4] === "approve") {
      return this.approve(run, parts[3]!, init?.body ? JSON.parse(init.body) : null);
    }
    return error(404, "not found");
  };

  private createRun(body: { prompt?: string; mode?: string }) {
    if (!body.prompt?.trim()) return error(400, "prompt must not be empty");
    const mode = body.mode === "step" ? "step" : "automated";
    const run: MockRun = {
      id: `r${this.nextId++}`,
      prompt: body.prompt,
      mode,
      state: "created",
      outcome: null,
      error: null,
      journal: [],
      artifacts: new Map(),
      design: { B1: "mmi1x2", B2: "mzi_2x2" },
    };
    this.runs.set(run.id, run);
    this.emit(run, "state", { state: "created" });
    // interpret runs immediately; step mode pauses at the first gate
    this.setState(run, "interpreting");
    run.artifacts.set("entities.json", text("{}"));
    run.artifacts.set("template.yaml", text(TEMPLATE_YAML));
    this.emit(run, "stage", { stage: "EE", artifacts: ["entities.json", "template.yaml"] });
    if (mode === "step") {
      this.setState(run, "awaiting_template_approval");
    } else {
      this.finishAutomated(run);
    }
    return response(201, this.snapshot(run));
  }

  private finishAutomated(run: MockRun): void {
    this.runComponents(run);
    this.runSchematic(run);
    this.runLayout(run);
  }

  private runComponents(run: MockRun): void {
    this.setState(run, "designing");
    run.artifacts.set("candidates.json", text(JSON.stringify(CANDIDATES)));
    this.emit(run, "stage", { stage: "CS", artifacts: ["candidates.json"] });
  }

  private runSchematic(run: MockRun): void {
    this.emit(run, "refinement", {
      iteration: 1,
      syntax_ok: true,
      violations: [],
      crossings: 0,
    });
    run.artifacts.set("schematic.dot", text(SCHEMATIC_DOT));
    this.emit(run, "stage", { stage: "SG", artifacts: ["schematic.dot"] });
  }

  private runLayout(run: MockRun): void {
    this.setState(run, "laying_out");
    run.artifacts.set("design.yaml", text(this.designYaml(run)));
    this.emit(run, "stage", { stage: "PC", artifacts: ["design.yaml"] });
    run.artifacts.set("layout.gds", GDS_BYTES);
    run.artifacts.set("geometry.json", text(JSON.stringify(GEOMETRY)));
    this.emit(run, "stage", { stage: "L", artifacts: ["layout.gds", "geometry.json"] });
    this.setState(run, "verifying");
    run.artifacts.set("spectrum.json", text(JSON.stringify(SPECTRUM)));
    this.emit(run, "stage", { stage: "verify", artifacts: ["spectrum.json"] });
    run.outcome = "S";
    this.setState(run, "done", { outcome: "S" });
  }

  private designYaml(run: MockRun): string {
    const lines = Object.entries(run.design).map(
      ([id, cell]) => `- id: ${id}\n  cell: ${cell}`,
    );
    return `schema_version: 1\nname: demo\ninstances:\n${lines.join("\n")}\n`;
  }

  private approve(run: MockRun, stage: string, payload: Record<string, unknown> | null) {
    const gates: Record<string, string> = {
      template: "awaiting_template_approval",
      components: "awaiting_component_choice",
      schematic: "awaiting_schematic_approval",
    };
    const wanted = gates[stage];
    if (!wanted) return error(404, `unknown stage '${stage}'`);
    if (run.state !== wanted) {
      return error(409, `run is in state '${run.state}', not '${wanted}'`);
    }

    if (payload && stage === "template") {
      const yaml = payload["template_yaml"];
      if (typeof yaml !== "string") return error(422, "payload must carry 'template_yaml'");
      if (!yaml.includes("blocks:")) {
        return error(422, "template_yaml: missing required 'blocks' section");
      }
      run.artifacts.set("template.yaml", text(yaml));
      this.emit(run, "edit", { stage: "template" });
    }
    if (payload && stage === "components") {
      const selection = payload["selection"];
      if (typeof selection !== "object" || selection === null) {
        return error(422, "payload must carry a 'selection' mapping");
      }
      for (const [blockId, cell] of Object.entries(selection as Record<string, string>)) {
        const row = (CANDIDATES as Record<string, readonly { name: string }[]>)[blockId];
        if (!row) return error(422, `unknown block '${blockId}'`);
        if (!row.some((c) => c.name === cell)) {
          return error(422, `'${cell}' is not a graded candidate for '${blockId}'`);
        }
      }
      Object.assign(run.design, selection);
      run.artifacts.set("design.yaml", text(this.designYaml(run)));
      this.emit(run, "edit", { stage: "components", selection });
    }
    if (payload && stage === "schematic") {
      const dot = payload["schematic_dot"];
      if (typeof dot !== "string") return error(422, "payload must carry 'schematic_dot'");
      if (!dot.trimStart().startsWith("graph ")) {
        return error(422, "invalid schematic: expected 'graph <name> {' header");
      }
      run.artifacts.set("schematic.dot", text(dot));
      this.emit(run, "edit", { stage: "schematic" });
    }

    if (stage === "template") {
      this.runComponents(run);
      this.setState(run, "awaiting_component_choice");
    } else if (stage === "components") {
      this.setState(run, "designing");
      this.runSchematic(run);
      this.setState(run, "awaiting_schematic_approval");
    } else {
      this.runLayout(run);
    }
    return response(200, this.snapshot(run));
  }
}
