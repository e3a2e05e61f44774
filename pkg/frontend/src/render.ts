/** DOM rendering: probability bars, attention timeline, banners. */

import type { ClassifyResponse } from "./api.js";

const esc = (s: string) =>
  s.replace(/[&<>"]/g, (c) => ({ "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;" }[c]!));

/** Percentages exactly as displayed (one decimal place). */
export function displayPercents(probabilities: number[]): number[] {
  return probabilities.map((p) => Math.round(p * 1000) / 10);
}

/** Displayed percentages must total 100 within one point. */
export function displaySumOk(probabilities: number[]): boolean {
  const total = displayPercents(probabilities).reduce((a, b) => a + b, 0);
  return Math.abs(total - 100) <= 1.0;
}

export function renderBars(root: HTMLElement, labels: readonly string[],
                           probabilities: number[]): void {
  const pcts = displayPercents(probabilities);
  root.innerHTML = labels.map((label, i) => `
    <div class="prob-row">
      <span class="prob-label">${esc(label)}</span>
      <div class="prob-track"><div class="prob-bar" style="width:${pcts[i]}%"></div></div>
      <span class="prob-pct">${pcts[i].toFixed(1)}%</span>
    </div>`).join("");
}

/** One segment per timestep, height proportional to its weight. */
export function renderTimeline(root: HTMLElement, weights: number[]): void {
  const peak = Math.max(...weights, Number.MIN_VALUE);
  root.innerHTML = weights.map((w, i) => `
    <div class="attn-seg" style="height:${(100 * w / peak).toFixed(2)}%"
         title="step ${i + 1}: ${w.toFixed(4)}"></div>`).join("");
}

export function showBanner(root: HTMLElement, kind: "error" | "warning",
                           message: string): void {
  root.innerHTML = `<div class="banner banner-${kind}">${esc(message)}</div>`;
}

export function clearBanner(root: HTMLElement): void {
  root.innerHTML = "";
}

export interface ResultElements {
  verdict: HTMLElement;
  bars: HTMLElement;
  timeline: HTMLElement;
  banner: HTMLElement;
}

/** Renders a classification, unless the displayed probabilities would not
 *  total 100%: then the result stays hidden behind a warning banner. */
export function renderResult(els: ResultElements, labels: readonly string[],
                             result: ClassifyResponse): boolean {
  if (!displaySumOk(result.probabilities)) {
    els.verdict.textContent = "";
    els.bars.innerHTML = "";
    els.timeline.innerHTML = "";
    showBanner(els.banner, "warning",
      "service returned probabilities that do not sum to 100% after rounding; result hidden");
    return false;
  }
  els.verdict.textContent = result.predicted_label;
  renderBars(els.bars, labels, result.probabilities);
  renderTimeline(els.timeline, result.attention_weights);
  return true;
}
