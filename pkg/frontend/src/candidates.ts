/** Candidate picker model built from the candidates.json artifact. */

import { Candidate, CandidateTable, candidateTableSchema } from "./types.js";

export interface CandidateRow {
  blockId: string;
  candidates: Candidate[];
  /** Index into `candidates` the user currently has selected. */
  selected: number;
}

export function parseCandidateTable(doc: unknown): CandidateTable {
  return candidateTableSchema.parse(doc);
}

export class CandidatePicker {
  readonly rows: CandidateRow[];

  constructor(table: CandidateTable) {
    this.rows = Object.entries(table)
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([blockId, candidates]) => ({ blockId, candidates, selected: 0 }));
  }

  row(blockId: string): CandidateRow {
    const row = this.rows.find((r) => r.blockId === blockId);
    if (!row) throw new Error(`no candidate block ${blockId}`);
    return row;
  }

  /** Pick the nth ranked candidate (0 = the server's default choice). */
  select(blockId: string, index: number): Candidate {
    const row = this.row(blockId);
    const candidate = row.candidates[index];
    if (!candidate) {
      throw new Error(
        `block ${blockId} has ${row.candidates.length} candidates, not ${index + 1}`,
      );
    }
    row.selected = index;
    return candidate;
  }

  /** Only blocks where the user diverged from the default are submitted. */
  toSelectionPayload(): Record<string, string> {
    const selection: Record<string, string> = {};
    for (const row of this.rows) {
      if (row.selected !== 0) {
        selection[row.blockId] = row.candidates[row.selected]!.name;
      }
    }
    return selection;
  }
}

const GRADE_BADGES: Record<Candidate["grade"], string> = {
  exact: "✓ exact",
  partial: "~ partial",
  poor: "✗ poor",
};

export function gradeBadge(grade: Candidate["grade"]): string {
  return GRADE_BADGES[grade];
}
