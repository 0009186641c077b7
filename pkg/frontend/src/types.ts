/** Wire types mirrored from the run service; the UI never invents state. */

import { z } from "zod";

export const RUN_STATES = [
  "created",
  "interpreting",
  "awaiting_template_approval",
  "designing",
  "awaiting_component_choice",
  "awaiting_schematic_approval",
  "laying_out",
  "verifying",
  "done",
  "failed",
] as const;

export type RunState = (typeof RUN_STATES)[number];

export const OUTCOME_CODES = ["EE", "CS", "SG", "PC", "L", "S"] as const;
export type OutcomeCode = (typeof OUTCOME_CODES)[number];

export type GateStage = "template" | "components" | "schematic";

/** awaiting_* state -> the stage name its approval endpoint expects. */
export const GATE_FOR_STATE: Partial<Record<RunState, GateStage>> = {
  awaiting_template_approval: "template",
  awaiting_component_choice: "components",
  awaiting_schematic_approval: "schematic",
};

export const runSnapshotSchema = z.object({
  id: z.string(),
  prompt: z.string(),
  mode: z.enum(["automated", "step"]),
  state: z.enum(RUN_STATES),
  outcome: z.enum(OUTCOME_CODES).nullable(),
  error: z.string().nullable(),
  artifacts: z.array(z.string()),
  stage_usage: z.record(z.record(z.number())),
  stage_seconds: z.record(z.number()),
});

export type RunSnapshot = z.infer<typeof runSnapshotSchema>;

export interface RunEvent {
  seq: number;
  event: string;
  data: Record<string, unknown>;
}

export const candidateSchema = z.object({
  name: z.string(),
  grade: z.enum(["exact", "partial", "poor"]),
  rationale: z.string(),
  score: z.number(),
});

export type Candidate = z.infer<typeof candidateSchema>;

/** candidates.json: block id -> graded candidate list, best first. */
export const candidateTableSchema = z.record(z.array(candidateSchema));
export type CandidateTable = z.infer<typeof candidateTableSchema>;

export const refinementTraceSchema = z.object({
  iterations: z.array(
    z.object({
      syntax_ok: z.boolean(),
      violations: z.array(z.string()),
      crossings: z.number(),
      feedback: z.string().nullable(),
    }),
  ),
  crossings_remaining: z.number(),
});

export type RefinementTrace = z.infer<typeof refinementTraceSchema>;

export const geometrySchema = z.object({
  bbox: z.tuple([z.number(), z.number(), z.number(), z.number()]),
  instances: z.array(
    z.object({
      id: z.string(),
      cell: z.string(),
      origin: z.tuple([z.number(), z.number()]),
      orientation: z.string(),
      bbox: z.tuple([z.number(), z.number(), z.number(), z.number()]),
      polygons: z.array(
        z.object({
          layer: z.number(),
          points: z.array(z.tuple([z.number(), z.number()])),
        }),
      ),
      paths: z.array(
        z.object({
          layer: z.number(),
          width: z.number(),
          points: z.array(z.tuple([z.number(), z.number()])),
        }),
      ),
    }),
  ),
  routes: z.array(
    z.object({
      layer: z.number(),
      width: z.number(),
      points: z.array(z.tuple([z.number(), z.number()])),
    }),
  ),
  ports: z.record(z.tuple([z.number(), z.number(), z.string()])),
});

export type LayoutGeometry = z.infer<typeof geometrySchema>;

export const spectrumSchema = z.object({
  wavelengths_um: z.array(z.number()),
  ports: z.array(z.string()),
  responses: z.record(
    z.object({ real: z.array(z.number()), imag: z.array(z.number()) }),
  ),
});

export type SpectrumDoc = z.infer<typeof spectrumSchema>;
