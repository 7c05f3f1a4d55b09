/** Append-only probe history with line-delimited export/import. Field names
 * follow the experiment sample-log conventions (payload, seed, in_focus
 * derived stats); re-rendering history never re-issues requests. */

import type { ProbeRecord } from "./types.js";

const FIELDS = ["payload", "c_g", "n", "seed", "goal_accuracy",
  "zero_reward_fraction", "ts"] as const;

export class ProbeHistory {
  private records: ProbeRecord[] = [];

  get length(): number {
    return this.records.length;
  }

  all(): readonly ProbeRecord[] {
    return this.records;
  }

  append(record: ProbeRecord): void {
    this.records.push(record);
  }

  /** One JSON object per line, stable key order. */
  exportLines(): string {
    return this.records
      .map((rec) => {
        const ordered: Record<string, unknown> = {};
        for (const f of FIELDS) ordered[f] = rec[f];
        return JSON.stringify(ordered);
      })
      .join("\n") + (this.records.length ? "\n" : "");
  }

  /** Replace the history with the parsed file; throws on malformed lines. */
  importLines(text: string): void {
    const records: ProbeRecord[] = [];
    for (const line of text.split("\n")) {
      if (!line.trim()) continue;
      const obj = JSON.parse(line);
      for (const f of FIELDS) {
        if (!(f in obj)) throw new Error(`history line missing field ${f}`);
      }
      records.push(obj as ProbeRecord);
    }
    this.records = records;
  }
}

/** Feasibility badge rule: a probe looks infeasible when almost nothing
 * lands in its cone. Purely a UI affordance. */
export const INFEASIBLE_ACCURACY_THRESHOLD = 0.1;

export function feasibilityBadge(goalAccuracy: number | null): "ok" | "likely infeasible" | "n/a" {
  if (goalAccuracy === null) return "n/a";
  return goalAccuracy < INFEASIBLE_ACCURACY_THRESHOLD ? "likely infeasible" : "ok";
}
