import { describe, expect, it } from "vitest";

import { CandidatePicker, gradeBadge, parseCandidateTable } from "../src/candidates.js";

const table = parseCandidateTable({
  B2: [
    { name: "mzi_2x2", grade: "exact", rationale: "balanced", score: 0.9 },
  ],
  B1: [
    { name: "mmi1x2", grade: "exact", rationale: "fixed 50/50 split", score: 0.95 },
    { name: "mmi2x2", grade: "partial", rationale: "extra input", score: 0.7 },
    { name: "directional_coupler", grade: "poor", rationale: "tunable", score: 0.4 },
  ],
});

describe("candidate picker", () => {
  it("orders blocks deterministically and defaults to the top candidate", () => {
    const picker = new CandidatePicker(table);
    expect(picker.rows.map((r) => r.blockId)).toEqual(["B1", "B2"]);
    expect(picker.rows.every((r) => r.selected === 0)).toBe(true);
    expect(picker.toSelectionPayload()).toEqual({});
  });

  it("submits only blocks where the user diverged from the default", () => {
    const picker = new CandidatePicker(table);
    const chosen = picker.select("B1", 1); // candidate #2
    expect(chosen.name).toBe("mmi2x2");
    expect(picker.toSelectionPayload()).toEqual({ B1: "mmi2x2" });
    picker.select("B1", 0);
    expect(picker.toSelectionPayload()).toEqual({});
  });

  it("rejects out-of-range picks and unknown blocks", () => {
    const picker = new CandidatePicker(table);
    expect(() => picker.select("B2", 5)).toThrow(/has 1 candidates, not 6/);
    expect(() => picker.select("B9", 0)).toThrow(/no candidate block/);
  });

  it("badges every grade distinctly", () => {
    const badges = new Set([gradeBadge("exact"), gradeBadge("partial"), gradeBadge("poor")]);
    expect(badges.size).toBe(3);
  });

  it("rejects an unknown grade at parse time", () => {
    expect(() =>
      parseCandidateTable({
        B1: [{ name: "x", grade: "excellent", rationale: "", score: 1 }],
      }),
    ).toThrow();
  });
});
