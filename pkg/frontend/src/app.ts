/** Page wiring: the only module that touches the DOM directly. */

import { ApiError, PicflowClient } from "./api.js";
import { CandidatePicker, gradeBadge, parseCandidateTable } from "./candidates.js";
import { EventSourceLike, EventSubscription } from "./events.js";
import { Viewport, parseGeometry } from "./geometry.js";
import { LayoutGeometry } from "./types.js";
import { Canvas2DLike, renderLayout } from "./layout-view.js";
import { buildSchematicView } from "./schematic-view.js";
import { niceTicks, parseSpectrum, seriesToPolyline, toSeries } from "./spectrum.js";
import { RunWorkflow } from "./workflow.js";

const EVENT_KINDS = ["state", "stage", "refinement", "edit"] as const;

/** Adapt a native EventSource (named events) to the onmessage interface. */
function makeEventSource(url: string): EventSourceLike {
  const native = new EventSource(url);
  const adapter: EventSourceLike = {
    onmessage: null,
    onerror: null,
    close: () => native.close(),
  };
  for (const kind of EVENT_KINDS) {
    native.addEventListener(kind, (raw) => {
      const msg = raw as MessageEvent<string>;
      adapter.onmessage?.({
        lastEventId: msg.lastEventId,
        type: kind,
        data: msg.data,
      });
    });
  }
  native.onerror = () => adapter.onerror?.();
  return adapter;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setText(id: string, text: string): void {
  el(id).textContent = text;
}

class Page {
  private readonly client = new PicflowClient("");
  private workflow: RunWorkflow | null = null;
  private picker: CandidatePicker | null = null;
  private subscription: EventSubscription | null = null;
  private geometry: LayoutGeometry | null = null;
  private readonly viewport = new Viewport(900, 420);

  bind(): void {
    el<HTMLButtonElement>("start").addEventListener("click", () => {
      void this.startRun();
    });
    el<HTMLButtonElement>("approve").addEventListener("click", () => {
      void this.approveGate();
    });
    const canvas = el<HTMLCanvasElement>("layout-canvas");
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.viewport.zoomAt([e.offsetX, e.offsetY], e.deltaY < 0 ? 1.2 : 1 / 1.2);
      void this.drawLayout();
    });
    let dragging: [number, number] | null = null;
    canvas.addEventListener("mousedown", (e) => (dragging = [e.offsetX, e.offsetY]));
    canvas.addEventListener("mouseup", () => (dragging = null));
    canvas.addEventListener("mousemove", (e) => {
      if (!dragging) return;
      this.viewport.pan(e.offsetX - dragging[0], e.offsetY - dragging[1]);
      dragging = [e.offsetX, e.offsetY];
      void this.drawLayout();
    });
  }

  private async startRun(): Promise<void> {
    const prompt = el<HTMLTextAreaElement>("prompt").value;
    const step = el<HTMLInputElement>("step-mode").checked;
    try {
      this.workflow = await RunWorkflow.start(
        this.client,
        prompt,
        step ? "step" : "automated",
      );
    } catch (err) {
      setText("status", err instanceof ApiError ? err.detail : String(err));
      return;
    }
    this.subscribe();
    await this.refresh();
  }

  private subscribe(): void {
    if (!this.workflow) return;
    this.subscription?.close();
    this.subscription = new EventSubscription(
      makeEventSource,
      "",
      this.workflow.store.id,
      this.workflow.store.log,
      (event) => {
        this.workflow?.store.apply(event);
        void this.refresh();
      },
    );
    this.subscription.open();
  }

  private async refresh(): Promise<void> {
    const wf = this.workflow;
    if (!wf) return;
    const { store } = wf;
    setText("status", `run ${store.id}: ${store.state}`);
    setText(
      "outcome",
      store.isTerminal
        ? `outcome ${store.outcome ?? "?"}${store.failureReason ? ` — ${store.failureReason}` : ""}`
        : "",
    );
    el<HTMLButtonElement>("approve").disabled = store.openGate === null;
    setText("gate", store.openGate ? `awaiting ${store.openGate} approval` : "");

    await this.renderGatePanel();
    if (store.snapshot.artifacts.includes("geometry.json")) {
      await this.loadLayout();
    }
    if (store.snapshot.artifacts.includes("spectrum.json")) {
      await this.drawSpectrum();
    }
    if (store.isTerminal && store.outcome === "S") {
      const link = el<HTMLAnchorElement>("gds-link");
      link.href = wf.layoutDownloadUrl();
      link.textContent = "download layout.gds";
    }
  }

  private async renderGatePanel(): Promise<void> {
    const wf = this.workflow;
    if (!wf) return;
    const gate = wf.store.openGate;
    const editor = el<HTMLTextAreaElement>("editor");
    const table = el<HTMLTableElement>("candidates");
    table.innerHTML = "";
    if (gate === "template") {
      editor.value = await wf.fetchArtifactText("template.yaml");
    } else if (gate === "schematic") {
      editor.value = await wf.fetchArtifactText("schematic.dot");
      this.renderSchematic(editor.value);
    } else if (gate === "components") {
      const doc = parseCandidateTable(await wf.fetchArtifactJson("candidates.json"));
      this.picker = new CandidatePicker(doc);
      for (const row of this.picker.rows) {
        for (const [i, candidate] of row.candidates.entries()) {
          const tr = table.insertRow();
          tr.insertCell().textContent = row.blockId;
          tr.insertCell().textContent = candidate.name;
          tr.insertCell().textContent = gradeBadge(candidate.grade);
          tr.insertCell().textContent = candidate.rationale;
          const pick = document.createElement("input");
          pick.type = "radio";
          pick.name = `pick-${row.blockId}`;
          pick.checked = i === row.selected;
          pick.addEventListener("change", () => {
            this.picker?.select(row.blockId, i);
          });
          tr.insertCell().appendChild(pick);
        }
      }
    }
  }

  private async approveGate(): Promise<void> {
    const wf = this.workflow;
    if (!wf) return;
    const gate = wf.store.openGate;
    const editor = el<HTMLTextAreaElement>("editor");
    let result;
    if (gate === "template" && editor.value.trim()) {
      result = await wf.approve({ template_yaml: editor.value });
    } else if (gate === "schematic" && editor.value.trim()) {
      result = await wf.approve({ schematic_dot: editor.value });
    } else if (gate === "components" && this.picker) {
      const selection = this.picker.toSelectionPayload();
      result = await wf.approve(
        Object.keys(selection).length ? { selection } : undefined,
      );
    } else {
      result = await wf.approve();
    }
    // a rejected edit leaves the run state untouched; show the server's
    // message verbatim next to the editor
    setText("validation", result.ok ? "" : result.message);
    await this.refresh();
  }

  private renderSchematic(dotText: string): void {
    const view = buildSchematicView(dotText);
    const list = el<HTMLUListElement>("schematic-edges");
    list.innerHTML = "";
    for (const edge of view.edges) {
      const item = document.createElement("li");
      item.textContent =
        `${edge.from.node}:${edge.from.port} -- ${edge.to.node}:${edge.to.port}` +
        (edge.crossing ? "  ⚠ crossing" : "");
      if (edge.crossing) item.style.color = "#c0392b";
      list.appendChild(item);
    }
    setText("crossings", `${view.crossingCount} crossing(s) in current draft`);
  }

  private async loadLayout(): Promise<void> {
    const wf = this.workflow;
    if (!wf) return;
    this.geometry = parseGeometry(await wf.fetchArtifactJson("geometry.json"));
    this.viewport.fit(this.geometry.bbox);
    await this.drawLayout();
  }

  private async drawLayout(): Promise<void> {
    if (!this.geometry) return;
    const canvas = el<HTMLCanvasElement>("layout-canvas");
    const ctx = canvas.getContext("2d");
    if (ctx) {
      renderLayout(ctx as unknown as Canvas2DLike, this.viewport, this.geometry, {
        showPorts: true,
      });
    }
  }

  private async drawSpectrum(): Promise<void> {
    const wf = this.workflow;
    if (!wf) return;
    const doc = parseSpectrum(await wf.fetchArtifactJson("spectrum.json"));
    const canvas = el<HTMLCanvasElement>("spectrum-canvas");
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const palette = ["#2f7ed8", "#c0392b", "#33a02c", "#ff7f00", "#6a3d9a"];
    const series = toSeries(doc);
    series.forEach((s, idx) => {
      ctx.strokeStyle = palette[idx % palette.length]!;
      ctx.beginPath();
      seriesToPolyline(s, canvas.width, canvas.height).forEach(([x, y], i) => {
        if (i === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    });
    const lams = series[0]?.wavelengths ?? [];
    if (lams.length) {
      setText(
        "spectrum-ticks",
        niceTicks(Math.min(...lams), Math.max(...lams))
          .map((t) => t.toFixed(3))
          .join("  "),
      );
    }
  }
}

if (typeof document !== "undefined") {
  new Page().bind();
}
