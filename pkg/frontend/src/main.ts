// DOM wiring for the viewer. All heavy lifting lives in the pure modules
// (seeds, render, state); this file only moves data between them, the
// canvas, and the inference service.

import { ApiError, fetchModelInfo, postTrace } from "./api.js";
import type { ModelInfo, TraceResponse } from "./api.js";
import { defaultBox, generateSeeds } from "./seeds.js";
import {
  buildPolylines,
  drawListHash,
  drawToCanvas,
  renderedVertexCount,
} from "./render.js";
import type { TraceBatch, Viewport } from "./render.js";
import { initialState, UndoableState } from "./state.js";
import type { Action } from "./state.js";

const params = new URLSearchParams(window.location.search);
const SERVER = params.get("server") ?? "http://127.0.0.1:8040";

const el = {
  banner: document.getElementById("banner") as HTMLDivElement,
  retry: document.getElementById("retry") as HTMLButtonElement,
  info: document.getElementById("model-info") as HTMLDivElement,
  canvas: document.getElementById("view") as HTMLCanvasElement,
  boxMin: [0, 1, 2].map((k) => document.getElementById(`box-min-${k}`) as HTMLInputElement),
  boxMax: [0, 1, 2].map((k) => document.getElementById(`box-max-${k}`) as HTMLInputElement),
  count: document.getElementById("seed-count") as HTMLInputElement,
  strategy: document.getElementById("strategy") as HTMLSelectElement,
  colorMode: document.getElementById("color-mode") as HTMLSelectElement,
  lineWidth: document.getElementById("line-width") as HTMLInputElement,
  cycleLo: document.getElementById("cycle-lo") as HTMLInputElement,
  cycleHi: document.getElementById("cycle-hi") as HTMLInputElement,
  retain: document.getElementById("retain") as HTMLInputElement,
  trace: document.getElementById("trace") as HTMLButtonElement,
  undo: document.getElementById("undo") as HTMLButtonElement,
  stats: document.getElementById("stats") as HTMLDivElement,
  legend: document.getElementById("legend") as HTMLDivElement,
};

let info: ModelInfo | null = null;
let state: UndoableState | null = null;
let batches: TraceBatch[] = [];
let inFlight: AbortController | null = null;

function viewport(): Viewport {
  return { width: el.canvas.width, height: el.canvas.height };
}

function showBanner(message: string): void {
  el.banner.textContent = message;
  el.banner.style.display = "block";
}

function hideBanner(): void {
  el.banner.style.display = "none";
}

function syncControls(): void {
  if (!info || !state) return;
  const s = state.current;
  for (let k = 0; k < info.dim; k++) {
    el.boxMin[k].value = s.box.min[k].toFixed(3);
    el.boxMax[k].value = s.box.max[k].toFixed(3);
    el.boxMin[k].parentElement!.style.display = "";
  }
  for (let k = info.dim; k < 3; k++) el.boxMin[k].parentElement!.style.display = "none";
  el.count.value = String(s.box.count);
  el.strategy.value = s.box.strategy;
  el.colorMode.value = s.view.colorMode;
  el.lineWidth.value = String(s.view.lineWidth);
  el.cycleLo.value = String(s.view.cycleRange[0]);
  el.cycleHi.value = String(s.view.cycleRange[1]);
  el.retain.checked = s.retainPrevious;
  el.undo.disabled = !state.canUndo;
}

function render(): void {
  if (!info || !state) return;
  const lines = buildPolylines(
    batches,
    info.dim,
    info.n_file_cycles,
    info.bounds,
    state.current.view,
    viewport(),
  );
  const ctx = el.canvas.getContext("2d")!;
  drawToCanvas(ctx, lines, viewport());
  drawSeedBox(ctx);
  const last = batches[batches.length - 1];
  el.stats.textContent =
    `${renderedVertexCount(lines)} vertices | image ${drawListHash(lines)}` +
    (last ? ` | server inference ${last.response.inference_ms.toFixed(1)} ms` : "");
  el.legend.textContent = batches.map((b) => b.label).join("  •  ");
}

function drawSeedBox(ctx: CanvasRenderingContext2D): void {
  if (!info || !state || info.dim !== 2) return;
  const { min, max } = state.current.box;
  const [x0, y0] = domainToCanvas(min);
  const [x1, y1] = domainToCanvas(max);
  ctx.strokeStyle = "#00897b";
  ctx.setLineDash([6, 4]);
  ctx.lineWidth = 1.5;
  ctx.strokeRect(Math.min(x0, x1), Math.min(y0, y1), Math.abs(x1 - x0), Math.abs(y1 - y0));
  ctx.setLineDash([]);
}

function domainToCanvas(p: number[]): [number, number] {
  if (!info || !state) return [0, 0];
  const vp = viewport();
  const b = info.bounds;
  const spanX = b[1][0] - b[0][0];
  const spanY = b[1][1] - b[0][1];
  const cam = state.current.view.camera2d;
  const scale = Math.min(vp.width / spanX, vp.height / spanY) * 0.92 * cam.zoom;
  const cx = (b[0][0] + b[1][0]) / 2;
  const cy = (b[0][1] + b[1][1]) / 2;
  return [vp.width / 2 + (p[0] - cx + cam.panX) * scale, vp.height / 2 - (p[1] - cy + cam.panY) * scale];
}

function canvasToDomain(x: number, y: number): number[] {
  if (!info || !state) return [0, 0];
  const vp = viewport();
  const b = info.bounds;
  const spanX = b[1][0] - b[0][0];
  const spanY = b[1][1] - b[0][1];
  const cam = state.current.view.camera2d;
  const scale = Math.min(vp.width / spanX, vp.height / spanY) * 0.92 * cam.zoom;
  const cx = (b[0][0] + b[1][0]) / 2;
  const cy = (b[0][1] + b[1][1]) / 2;
  return [(x - vp.width / 2) / scale + cx - cam.panX, -(y - vp.height / 2) / scale + cy - cam.panY];
}

function dispatch(action: Action): void {
  if (!state) return;
  state.apply(action);
  syncControls();
  render();
}

async function loadInfo(): Promise<void> {
  try {
    info = await fetchModelInfo(SERVER);
  } catch (err) {
    showBanner(`Cannot reach inference server at ${SERVER} (${(err as Error).message})`);
    return;
  }
  hideBanner();
  state = new UndoableState(
    initialState(info.bounds, info.n_file_cycles, defaultBox(info.bounds)),
    info.bounds,
    info.n_file_cycles,
  );
  el.info.textContent =
    `${info.dim}D ${info.method} model | ${info.n_file_cycles} file cycles | ` +
    `${info.param_count.toLocaleString()} params` +
    (info.model_bytes ? ` | ${(info.model_bytes / 1e6).toFixed(2)} MB` : "");
  el.cycleHi.max = el.cycleLo.max = String(info.n_file_cycles - 1);
  syncControls();
  render();
}

async function trace(): Promise<void> {
  if (!info || !state) return;
  inFlight?.abort();
  inFlight = new AbortController();
  const seeds = generateSeeds(state.current.box);
  el.trace.disabled = true;
  try {
    const resp: TraceResponse = await postTrace(SERVER, seeds);
    hideBanner();
    const label = `trace ${batches.length + 1}: ${seeds.length} seeds`;
    if (state.current.retainPrevious) {
      batches = [...batches, { response: resp, label }];
    } else {
      batches = [{ response: resp, label }];
    }
    render();
  } catch (err) {
    const detail = err instanceof ApiError ? err.message : String(err);
    showBanner(`Trace failed: ${detail}`);
  } finally {
    el.trace.disabled = false;
  }
}

// seed-box dragging (2D): drag inside moves the box, drag near a corner resizes
let dragMode: "move" | "resize" | null = null;
let dragStart = [0, 0];
let boxStart: { min: number[]; max: number[] } | null = null;

el.canvas.addEventListener("mousedown", (ev) => {
  if (!info || !state || info.dim !== 2) return;
  const rect = el.canvas.getBoundingClientRect();
  const p = canvasToDomain(ev.clientX - rect.left, ev.clientY - rect.top);
  const { min, max } = state.current.box;
  const near = (a: number, b: number, tol: number) => Math.abs(a - b) < tol;
  const tolX = (info.bounds[1][0] - info.bounds[0][0]) * 0.03;
  const cornerHit =
    (near(p[0], min[0], tolX) || near(p[0], max[0], tolX)) &&
    (near(p[1], min[1], tolX) || near(p[1], max[1], tolX));
  const inside = p[0] >= min[0] && p[0] <= max[0] && p[1] >= min[1] && p[1] <= max[1];
  if (!cornerHit && !inside) return;
  dragMode = cornerHit ? "resize" : "move";
  dragStart = p;
  boxStart = { min: min.slice(), max: max.slice() };
});

el.canvas.addEventListener("mousemove", (ev) => {
  if (!dragMode || !info || !state || !boxStart) return;
  const rect = el.canvas.getBoundingClientRect();
  const p = canvasToDomain(ev.clientX - rect.left, ev.clientY - rect.top);
  const delta = [p[0] - dragStart[0], p[1] - dragStart[1]];
  if (dragMode === "move") {
    state.current = {
      ...state.current,
      box: { ...state.current.box, min: boxStart.min.slice(), max: boxStart.max.slice() },
    };
    dispatch({ kind: "move-box", delta });
  } else {
    dispatch({
      kind: "resize-box",
      min: boxStart.min.map((v, k) => Math.min(v, v + delta[k])),
      max: boxStart.max.map((v, k) => Math.max(v, v + delta[k])),
    });
  }
});

window.addEventListener("mouseup", () => {
  dragMode = null;
  boxStart = null;
});

function bindControls(): void {
  const boxInput = () => {
    if (!info) return;
    dispatch({
      kind: "resize-box",
      min: el.boxMin.slice(0, info.dim).map((i) => parseFloat(i.value)),
      max: el.boxMax.slice(0, info.dim).map((i) => parseFloat(i.value)),
    });
  };
  el.boxMin.forEach((i) => i.addEventListener("change", boxInput));
  el.boxMax.forEach((i) => i.addEventListener("change", boxInput));
  el.count.addEventListener("change", () =>
    dispatch({ kind: "set-count", count: parseInt(el.count.value, 10) || 1 }),
  );
  el.strategy.addEventListener("change", () =>
    dispatch({ kind: "set-strategy", strategy: el.strategy.value as never }),
  );
  el.colorMode.addEventListener("change", () =>
    dispatch({ kind: "set-color-mode", mode: el.colorMode.value as never }),
  );
  el.lineWidth.addEventListener("change", () =>
    dispatch({ kind: "set-line-width", width: parseFloat(el.lineWidth.value) || 1.5 }),
  );
  const rangeInput = () =>
    dispatch({
      kind: "set-cycle-range",
      range: [parseInt(el.cycleLo.value, 10) || 0, parseInt(el.cycleHi.value, 10) || 0],
    });
  el.cycleLo.addEventListener("change", rangeInput);
  el.cycleHi.addEventListener("change", rangeInput);
  el.retain.addEventListener("change", () => dispatch({ kind: "set-retain", retain: el.retain.checked }));
  el.trace.addEventListener("click", trace);
  el.undo.addEventListener("click", () => {
    state?.undo();
    syncControls();
    render();
  });
  el.retry.addEventListener("click", loadInfo);
}

bindControls();
void loadInfo();
