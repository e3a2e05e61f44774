/** Review session log: at most one decision per classification, exported
 *  client-side as JSON. Nothing is persisted on the server. */

import type { ClassifyResponse } from "./api.js";

export interface UploadMeta {
  name: string;
  size: number;
}

export type Decision = "accept" | "override";

export interface ReviewRecord {
  id: number;
  timestamp: string;
  source: UploadMeta;
  model_id: string;
  predicted_label: string;
  probabilities: number[];
  attention_weights: number[];
  decision: Decision;
  final_label: string;
}

export class SessionLog {
  private records: ReviewRecord[] = [];
  private active: { meta: UploadMeta; result: ClassifyResponse } | null = null;
  private decided = false;

  constructor(readonly labels: readonly string[]) {
    if (labels.length === 0) throw new Error("label set must not be empty");
  }

  setClassification(meta: UploadMeta, result: ClassifyResponse): void {
    this.active = { meta, result };
    this.decided = false;
  }

  get current(): ClassifyResponse | null {
    return this.active?.result ?? null;
  }

  get canDecide(): boolean {
    return this.active !== null && !this.decided;
  }

  get size(): number {
    return this.records.length;
  }

  record(decision: Decision, overrideLabel?: string): ReviewRecord {
    if (!this.active) throw new Error("no active classification");
    if (this.decided) {
      throw new Error("this classification is already decided; upload a new sequence");
    }
    let finalLabel = this.active.result.predicted_label;
    if (decision === "override") {
      if (overrideLabel === undefined || !this.labels.includes(overrideLabel)) {
        throw new Error(`override label must be one of: ${this.labels.join(", ")}`);
      }
      finalLabel = overrideLabel;
    }
    const rec: ReviewRecord = {
      id: this.records.length + 1,
      timestamp: new Date().toISOString(),
      source: { ...this.active.meta },
      model_id: this.active.result.model_id,
      predicted_label: this.active.result.predicted_label,
      probabilities: [...this.active.result.probabilities],
      attention_weights: [...this.active.result.attention_weights],
      decision,
      final_label: finalLabel,
    };
    this.records.push(rec);
    this.decided = true;
    return rec;
  }

  exportJson(): string {
    return JSON.stringify({
      exported_at: new Date().toISOString(),
      record_count: this.records.length,
      records: this.records,
    }, null, 2);
  }
}
