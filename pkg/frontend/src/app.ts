import { ApiClient, ServiceError, newRequestId } from "./api";
import { parseBatch, ParsedBatch } from "./csv";
import { MapView, renderLegend } from "./mapview";
import type { ImputeRequest, ModelInfo, ResultRow } from "./types";
import { validateForm, outsideRegion, FormInput } from "./validate";

const APP_HTML = `
  <div class="banner" id="banner" hidden>
    <span id="banner-text"></span>
    <button id="banner-retry" type="button">retry</button>
  </div>
  <section class="query">
    <h2>Point query</h2>
    <label>timestamp <input id="ts" placeholder="2016-06-16T12:00:00Z"></label>
    <label>lat <input id="lat"></label>
    <label>lon <input id="lon"></label>
    <label>tide override (m) <input id="tide"></label>
    <button id="submit" type="button" disabled>impute</button>
    <div id="form-errors" class="form-errors"></div>
    <div id="region-hint" class="region-hint"></div>
  </section>
  <section class="batch">
    <h2>Batch CSV</h2>
    <input id="file" type="file" accept=".csv,text/csv">
    <div id="preview"></div>
    <button id="send-batch" type="button" disabled>send batch</button>
  </section>
  <section class="results">
    <h2>Results</h2>
    <table>
      <thead><tr>
        <th>timestamp</th><th>lat</th><th>lon</th><th>tide (m)</th>
        <th>salinity (psu)</th><th>model</th><th>status</th>
      </tr></thead>
      <tbody id="rows"></tbody>
    </table>
  </section>
  <section class="geo">
    <h2>Map</h2>
    <div id="map" style="width:480px;height:360px"></div>
    <div id="legend"></div>
    <div id="model-line" class="model-line"></div>
  </section>
`;

export class App {
  rows: ResultRow[] = [];
  info: ModelInfo | null = null;
  map: MapView | null = null;
  private pendingBatch: ParsedBatch | null = null;
  private lastFailed: (() => void) | null = null;

  constructor(readonly root: HTMLElement, readonly api: ApiClient) {}

  async init(): Promise<void> {
    this.root.innerHTML = APP_HTML;
    this.info = await this.api.modelInfo();
    this.map = new MapView(this.el("map"), this.info.region);
    this.el("model-line").textContent =
      `model ${this.info.model_version} ` +
      `(tide-aware: ${this.info.uses_tide ? "yes" : "no"})`;

    for (const id of ["ts", "lat", "lon", "tide"]) {
      this.el(id).addEventListener("input", () => this.refreshFormState());
    }
    this.el("submit").addEventListener("click", () => { void this.submitPoint(); });
    this.el("file").addEventListener("change", () => { void this.fileChosen(); });
    this.el("send-batch").addEventListener("click", () => { void this.sendBatch(); });
    this.refreshFormState();
  }

  el(id: string): HTMLElement {
    const node = this.root.querySelector(`#${id}`);
    if (!node) throw new Error(`missing element #${id}`);
    return node as HTMLElement;
  }

  private input(id: string): HTMLInputElement {
    return this.el(id) as HTMLInputElement;
  }

  formInput(): FormInput {
    return {
      timestamp: this.input("ts").value,
      lat: this.input("lat").value,
      lon: this.input("lon").value,
      tide: this.input("tide").value
    };
  }

  refreshFormState(): void {
    const v = validateForm(this.formInput());
    (this.el("submit") as HTMLButtonElement).disabled = !v.ok;
    this.el("form-errors").textContent = v.errors.join("; ");
    const hint = this.el("region-hint");
    if (v.ok && v.request &&
        outsideRegion(v.request.lat, v.request.lon, this.info)) {
      hint.textContent = "note: point lies outside the model region";
    } else {
      hint.textContent = "";
    }
  }

  async submitPoint(): Promise<void> {
    const v = validateForm(this.formInput());
    if (!v.ok || !v.request) return;
    const req = v.request;
    const row: ResultRow = {
      requestId: newRequestId(), request: req, status: "pending"
    };
    this.rows.push(row);
    this.renderAll();
    try {
      const result = await this.api.imputePoint(req);
      this.settle(row.requestId, { status: "ok", result });
    } catch (err) {
      this.handleFailure(err, row.requestId, () => { void this.submitPoint(); });
    }
    this.renderAll();
  }

  async fileChosen(): Promise<void> {
    const files = this.input("file").files;
    if (!files || files.length === 0) return;
    const text = await files[0].text();
    this.previewBatch(text);
  }

  // split from the change handler so tests and drag-drop can feed text
  previewBatch(text: string): ParsedBatch {
    const parsed = parseBatch(text);
    this.pendingBatch = parsed.ok ? parsed : null;
    (this.el("send-batch") as HTMLButtonElement).disabled = !parsed.ok;
    const box = this.el("preview");
    if (!parsed.ok) {
      box.innerHTML = `<div class="csv-errors">rejected: ${
        parsed.diagnostics.join("; ")}</div>`;
      return parsed;
    }
    const lines = parsed.preview.map(r =>
      `<li>${r.timestamp} (${r.lat}, ${r.lon})${
        r.tide !== undefined ? ` tide ${r.tide}` : ""}</li>`).join("");
    box.innerHTML = `<div>${parsed.rows.length} rows, first ${
      parsed.preview.length}:</div><ul class="preview-rows">${lines}</ul>`;
    return parsed;
  }

  async sendBatch(): Promise<void> {
    const batch = this.pendingBatch;
    if (!batch) return;
    const ids = batch.rows.map(req => {
      const row: ResultRow = {
        requestId: newRequestId(), request: req, status: "pending"
      };
      this.rows.push(row);
      return row.requestId;
    });
    this.renderAll();
    try {
      const res = await this.api.imputeBatch(batch.rows);
      for (const item of res.results) {
        const id = ids[item.index];
        if (item.ok && item.result) {
          this.settle(id, { status: "ok", result: item.result });
        } else {
          this.settle(id, { status: "error", error: item.error });
        }
      }
    } catch (err) {
      for (const id of ids) this.settle(id, { status: "error" });
      this.handleFailure(err, null, () => {
        this.pendingBatch = batch;
        void this.sendBatch();
      });
    }
    this.renderAll();
  }

  // responses are matched back to their table row by request id, so
  // overlapping in-flight queries cannot mix rows up
  private settle(requestId: number, patch: Partial<ResultRow>): void {
    const row = this.rows.find(r => r.requestId === requestId);
    if (row) Object.assign(row, patch);
  }

  private handleFailure(err: unknown, requestId: number | null,
                        retry: () => void): void {
    if (err instanceof ServiceError) {
      if (requestId !== null) {
        this.settle(requestId, {
          status: "error", error: { code: err.code, message: err.message }
        });
      }
      return;
    }
    // transport-level failure: banner with retry
    if (requestId !== null) {
      this.settle(requestId, {
        status: "error",
        error: { code: "NetworkError", message: String(err) }
      });
    }
    this.lastFailed = retry;
    this.el("banner-text").textContent = `network failure: ${String(err)}`;
    const banner = this.el("banner");
    banner.hidden = false;
    const btn = this.el("banner-retry");
    btn.onclick = () => {
      banner.hidden = true;
      const f = this.lastFailed;
      this.lastFailed = null;
      if (f) f();
    };
  }

  okRows(): ResultRow[] {
    return this.rows.filter(r => r.status === "ok" && r.result);
  }

  renderAll(): void {
    this.renderTable();
    this.renderGeo();
  }

  private renderTable(): void {
    const body = this.el("rows");
    body.innerHTML = "";
    for (const row of this.rows) {
      const tr = document.createElement("tr");
      tr.dataset.requestId = String(row.requestId);
      tr.className = `row-${row.status}`;
      const cells = [
        row.request.timestamp,
        String(row.request.lat),
        String(row.request.lon),
        row.result ? String(row.result.tide_used)
                   : row.request.tide !== undefined ? String(row.request.tide) : "",
        // rendered values come straight from the response; the client
        // never recomputes or rounds them
        row.result ? String(row.result.salinity) : "",
        row.result ? row.result.model_version : "",
        row.status === "pending" ? "..."
          : row.status === "ok" ? "ok"
          : `${row.error?.code ?? "Error"}: ${row.error?.message ?? ""}`
      ];
      for (const [i, text] of cells.entries()) {
        const td = document.createElement("td");
        td.className = ["c-ts", "c-lat", "c-lon", "c-tide", "c-salinity",
                        "c-model", "c-status"][i];
        td.textContent = text;
        tr.appendChild(td);
      }
      body.appendChild(tr);
    }
  }

  private renderGeo(): void {
    const ok = this.okRows();
    const legend = this.el("legend");
    if (ok.length === 0 || !this.map) {
      legend.innerHTML = "";
      this.map?.render([], { min: 0, max: 0 });
      return;
    }
    const vals = ok.map(r => r.result!.salinity);
    const domain = { min: Math.min(...vals), max: Math.max(...vals) };
    this.map.render(ok.map(r => ({
      lat: r.request.lat,
      lon: r.request.lon,
      salinity: r.result!.salinity,
      label: `${r.result!.salinity} psu @ (${r.request.lat}, ${r.request.lon})`
    })), domain);
    renderLegend(legend, domain);
  }
}

export async function initApp(root: HTMLElement, baseUrl: string): Promise<App> {
  const app = new App(root, new ApiClient(baseUrl));
  await app.init();
  return app;
}
