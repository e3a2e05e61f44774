/** Page wiring: connect to a service, upload, classify, decide, export.
 *  Everything shown is derived from /model and /classify responses. */

import { classifyBlob, fetchModelInfo, type ModelInfo } from "./api.js";
import { clearBanner, renderResult, showBanner } from "./render.js";
import { SessionLog } from "./state.js";

const PAGE = `
  <header>
    <h1>sequence review</h1>
    <p class="dim" id="model-line">not connected</p>
  </header>
  <section class="row">
    <input id="service-url" type="text" value="http://127.0.0.1:8000" spellcheck="false">
    <button id="connect">connect</button>
  </section>
  <section class="row">
    <input id="file" type="file" accept=".fsq,.zip" disabled>
    <button id="classify" disabled>classify</button>
  </section>
  <div id="banner"></div>
  <section id="result" hidden>
    <p>predicted rating: <strong id="verdict"></strong></p>
    <div id="bars"></div>
    <p class="dim">attention over time</p>
    <div id="timeline"></div>
  </section>
  <section class="row" id="decision-row" hidden>
    <button id="accept">accept rating</button>
    <label class="dim">or override to
      <select id="override-label"></select>
    </label>
    <button id="override">override</button>
  </section>
  <section class="row">
    <button id="export" disabled>export decisions</button>
    <span class="dim" id="count">0 decisions</span>
  </section>
`;

export interface AppRefs {
  serviceUrl: HTMLInputElement;
  connect: HTMLButtonElement;
  file: HTMLInputElement;
  classify: HTMLButtonElement;
  banner: HTMLElement;
  result: HTMLElement;
  verdict: HTMLElement;
  bars: HTMLElement;
  timeline: HTMLElement;
  decisionRow: HTMLElement;
  accept: HTMLButtonElement;
  overrideLabel: HTMLSelectElement;
  override: HTMLButtonElement;
  exportBtn: HTMLButtonElement;
  count: HTMLElement;
  modelLine: HTMLElement;
}

export interface App {
  refs: AppRefs;
  log: SessionLog | null;
  info: ModelInfo | null;
  busy: boolean;
  /** Last in-flight connect/classify, so tests can await completion. */
  pending: Promise<void> | null;
}

export function download(doc: Document, filename: string, text: string): void {
  const url = URL.createObjectURL(new Blob([text], { type: "application/json" }));
  const a = doc.createElement("a");
  a.href = url;
  a.download = filename;
  doc.body.appendChild(a);
  a.click();
  a.remove();
  URL.revokeObjectURL(url);
}

function grab(doc: Document): AppRefs {
  const get = <T extends HTMLElement>(id: string) => doc.getElementById(id) as T;
  return {
    serviceUrl: get<HTMLInputElement>("service-url"),
    connect: get<HTMLButtonElement>("connect"),
    file: get<HTMLInputElement>("file"),
    classify: get<HTMLButtonElement>("classify"),
    banner: get<HTMLElement>("banner"),
    result: get<HTMLElement>("result"),
    verdict: get<HTMLElement>("verdict"),
    bars: get<HTMLElement>("bars"),
    timeline: get<HTMLElement>("timeline"),
    decisionRow: get<HTMLElement>("decision-row"),
    accept: get<HTMLButtonElement>("accept"),
    overrideLabel: get<HTMLSelectElement>("override-label"),
    override: get<HTMLButtonElement>("override"),
    exportBtn: get<HTMLButtonElement>("export"),
    count: get<HTMLElement>("count"),
    modelLine: get<HTMLElement>("model-line"),
  };
}

function refreshDecisionUi(app: App): void {
  const can = app.log?.canDecide ?? false;
  app.refs.accept.disabled = !can;
  app.refs.override.disabled = !can;
  const n = app.log?.size ?? 0;
  app.refs.exportBtn.disabled = n === 0;
  app.refs.count.textContent = `${n} decision${n === 1 ? "" : "s"}`;
}

async function connect(app: App): Promise<void> {
  const base = app.refs.serviceUrl.value.replace(/\/+$/, "");
  clearBanner(app.refs.banner);
  try {
    const info = await fetchModelInfo(base);
    app.info = info;
    app.log ??= new SessionLog(info.labels);
    app.refs.modelLine.textContent =
      `model ${info.model_id} | ${info.parameter_count.toLocaleString()} parameters | ` +
      `labels: ${info.labels.join(", ")}`;
    app.refs.overrideLabel.innerHTML =
      info.labels.map((l) => `<option value="${l}">${l}</option>`).join("");
    app.refs.file.disabled = false;
    app.refs.classify.disabled = false;
  } catch (e) {
    showBanner(app.refs.banner, "error", e instanceof Error ? e.message : String(e));
  }
}

async function classify(app: App): Promise<void> {
  const file = app.refs.file.files?.[0];
  if (!file || !app.info || !app.log) {
    showBanner(app.refs.banner, "error", "choose a .fsq file or frame archive first");
    return;
  }
  const base = app.refs.serviceUrl.value.replace(/\/+$/, "");
  clearBanner(app.refs.banner);
  app.refs.classify.disabled = true;
  try {
    const result = await classifyBlob(base, file);
    app.log.setClassification({ name: file.name, size: file.size }, result);
    const shown = renderResult(app.refs, app.info.labels, result);
    app.refs.result.hidden = !shown;
    app.refs.decisionRow.hidden = !shown;
  } catch (e) {
    app.refs.result.hidden = true;
    app.refs.decisionRow.hidden = true;
    showBanner(app.refs.banner, "error", e instanceof Error ? e.message : String(e));
  } finally {
    app.refs.classify.disabled = false;
    refreshDecisionUi(app);
  }
}

function decide(app: App, decision: "accept" | "override"): void {
  if (!app.log) return;
  try {
    app.log.record(decision, decision === "override"
      ? app.refs.overrideLabel.value : undefined);
    clearBanner(app.refs.banner);
  } catch (e) {
    showBanner(app.refs.banner, "error", e instanceof Error ? e.message : String(e));
  }
  refreshDecisionUi(app);
}

export function setupApp(doc: Document): App {
  const container = doc.getElementById("app");
  if (!container) throw new Error("missing #app container");
  container.innerHTML = PAGE;
  const app: App = { refs: grab(doc), log: null, info: null, busy: false, pending: null };

  const guarded = (fn: () => Promise<void>) => () => {
    if (app.busy) return;  // at most one in-flight request
    app.busy = true;
    app.pending = fn().finally(() => {
      app.busy = false;
      app.pending = null;
    });
  };

  app.refs.connect.addEventListener("click", guarded(() => connect(app)));
  app.refs.classify.addEventListener("click", guarded(() => classify(app)));
  app.refs.accept.addEventListener("click", () => decide(app, "accept"));
  app.refs.override.addEventListener("click", () => decide(app, "override"));
  app.refs.exportBtn.addEventListener("click", () => {
    if (!app.log || app.log.size === 0) {
      showBanner(app.refs.banner, "error", "no decisions recorded yet");
      return;
    }
    const stamp = new Date().toISOString().replace(/[:.]/g, "-");
    download(doc, `review-session-${stamp}.json`, app.log.exportJson());
  });
  refreshDecisionUi(app);
  return app;
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  setupApp(document);
}
