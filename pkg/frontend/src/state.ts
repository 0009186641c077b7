/** Derived view state for one run; the server is always the authority. */

import { EventLog } from "./events.js";
import {
  GATE_FOR_STATE,
  GateStage,
  OutcomeCode,
  RunEvent,
  RunSnapshot,
  RunState,
} from "./types.js";

export interface StageNote {
  stage: string;
  artifacts: string[];
}

export interface RefinementNote {
  iteration: number;
  syntaxOk: boolean;
  crossings: number;
  violations: string[];
}

export class StateMismatchError extends Error {}

/**
 * Holds the latest snapshot plus the event journal and answers the
 * questions the page needs: which gate (if any) is open, what stages have
 * produced artifacts, and whether the run is finished.
 */
export class RunStore {
  snapshot: RunSnapshot;
  readonly log = new EventLog();
  readonly stageNotes: StageNote[] = [];
  readonly refinements: RefinementNote[] = [];

  constructor(snapshot: RunSnapshot) {
    this.snapshot = snapshot;
  }

  get id(): string {
    return this.snapshot.id;
  }

  get state(): RunState {
    return this.snapshot.state;
  }

  get isTerminal(): boolean {
    return this.state === "done" || this.state === "failed";
  }

  get outcome(): OutcomeCode | null {
    return this.snapshot.outcome;
  }

  get failureReason(): string | null {
    return this.snapshot.error;
  }

  /** The approval stage currently blocking the run, if any. */
  get openGate(): GateStage | null {
    return GATE_FOR_STATE[this.state] ?? null;
  }

  /** Fold a journal event into the derived view. */
  apply(event: RunEvent): void {
    if (!this.log.append(event)) return;
    switch (event.event) {
      case "state": {
        const state = String(event.data["state"]) as RunState;
        this.snapshot = { ...this.snapshot, state };
        if (event.data["outcome"] !== undefined) {
          this.snapshot = {
            ...this.snapshot,
            outcome: event.data["outcome"] as OutcomeCode,
          };
        }
        if (event.data["error"] !== undefined) {
          this.snapshot = {
            ...this.snapshot,
            error: String(event.data["error"]),
          };
        }
        break;
      }
      case "stage":
        this.stageNotes.push({
          stage: String(event.data["stage"]),
          artifacts: (event.data["artifacts"] as string[] | undefined) ?? [],
        });
        break;
      case "refinement":
        this.refinements.push({
          iteration: Number(event.data["iteration"]),
          syntaxOk: Boolean(event.data["syntax_ok"]),
          crossings: Number(event.data["crossings"]),
          violations: (event.data["violations"] as string[] | undefined) ?? [],
        });
        break;
      default:
        break; // created / edit events carry no derived view state
    }
  }

  applyAll(events: Iterable<RunEvent>): void {
    for (const e of events) this.apply(e);
  }

  /**
   * Adopt a fresh GET /runs/{id} snapshot.  A snapshot the journal has
   * already moved past is stale: its metadata is taken but the newer
   * journal state wins.  A snapshot in a state the journal has never seen
   * and cannot be ahead of means stream and resource views diverged, and
   * rendering either would be a guess.
   */
  reconcile(snapshot: RunSnapshot): void {
    const seen = this.log.states();
    const journalState = seen[seen.length - 1];
    if (
      journalState !== undefined &&
      journalState !== snapshot.state &&
      seen.includes(snapshot.state)
    ) {
      // stale snapshot: journal is further along
      this.snapshot = { ...snapshot, state: this.snapshot.state };
      return;
    }
    this.snapshot = snapshot;
  }

  /** True when the snapshot and the journal tell the same story. */
  isConsistentWith(snapshot: RunSnapshot): boolean {
    const seen = this.log.states();
    const journalState = seen[seen.length - 1];
    if (journalState === undefined) return true; // journal not synced yet
    return journalState === snapshot.state || !seen.includes(snapshot.state);
  }
}
