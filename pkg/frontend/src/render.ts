// Pure rendering pipeline: TraceResponse + view state -> draw list. The
// draw list is plain data so tests (and the determinism hash) never need a
// real canvas; drawing it is a thin final step.

import type { TraceResponse } from "./api.js";

export type ColorMode = "by-cycle" | "by-seed" | "solid";

export interface Camera2D {
  panX: number;
  panY: number;
  zoom: number;
}

export interface Camera3D {
  azimuth: number; // radians
  elevation: number;
  zoom: number;
}

export interface ViewState {
  colorMode: ColorMode;
  lineWidth: number;
  cycleRange: [number, number];
  camera2d: Camera2D;
  camera3d: Camera3D;
}

export interface Viewport {
  width: number;
  height: number;
}

export interface Polyline {
  points: [number, number][];
  colors: string[]; // one per vertex
  width: number;
  depth: number; // painter's sort key (3D), 0 in 2D
  seedIndex: number;
  batch: number; // which retained trace this line belongs to
}

export function defaultViewState(n: number): ViewState {
  return {
    colorMode: "by-cycle",
    lineWidth: 1.5,
    cycleRange: [0, Math.max(0, n - 1)],
    camera2d: { panX: 0, panY: 0, zoom: 1 },
    camera3d: { azimuth: 0.6, elevation: 0.4, zoom: 1 },
  };
}

// small inferno-like ramp; t in [0, 1]
const RAMP: [number, number, number][] = [
  [13, 8, 135],
  [126, 3, 168],
  [204, 71, 120],
  [248, 149, 64],
  [240, 249, 33],
];

export function colorAt(t: number): string {
  const x = Math.min(Math.max(t, 0), 1) * (RAMP.length - 1);
  const i = Math.min(Math.floor(x), RAMP.length - 2);
  const f = x - i;
  const c = RAMP[i].map((a, k) => Math.round(a + f * (RAMP[i + 1][k] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}

const SEED_PALETTE = ["#4363d8", "#e6194b", "#3cb44b", "#ffe119", "#911eb4", "#46f0f0", "#f58231"];

function vertexColor(mode: ColorMode, cycle: number, n: number, seed: number): string {
  if (mode === "by-cycle") return colorAt(n <= 1 ? 0 : cycle / (n - 1));
  if (mode === "by-seed") return SEED_PALETTE[seed % SEED_PALETTE.length];
  return "#1565c0";
}

export function project(
  p: number[],
  dim: number,
  bounds: number[][],
  view: ViewState,
  vp: Viewport,
): [number, number, number] {
  const cx = (bounds[0][0] + bounds[1][0]) / 2;
  const cy = (bounds[0][1] + bounds[1][1]) / 2;
  if (dim === 2) {
    const spanX = bounds[1][0] - bounds[0][0];
    const spanY = bounds[1][1] - bounds[0][1];
    const scale = Math.min(vp.width / spanX, vp.height / spanY) * 0.92 * view.camera2d.zoom;
    return [
      vp.width / 2 + (p[0] - cx + view.camera2d.panX) * scale,
      vp.height / 2 - (p[1] - cy + view.camera2d.panY) * scale,
      0,
    ];
  }
  // 3D: orthographic after azimuth/elevation rotation about the domain center
  const cz = (bounds[0][2] + bounds[1][2]) / 2;
  const x = p[0] - cx;
  const y = p[1] - cy;
  const z = p[2] - cz;
  const ca = Math.cos(view.camera3d.azimuth);
  const sa = Math.sin(view.camera3d.azimuth);
  const ce = Math.cos(view.camera3d.elevation);
  const se = Math.sin(view.camera3d.elevation);
  const rx = ca * x + sa * y;
  const ry = -sa * x + ca * y;
  const px = rx;
  const py = ce * z - se * ry;
  const depth = ce * ry + se * z;
  const span = Math.max(bounds[1][0] - bounds[0][0], bounds[1][1] - bounds[0][1], bounds[1][2] - bounds[0][2]);
  const scale = (Math.min(vp.width, vp.height) / span) * 0.7 * view.camera3d.zoom;
  return [vp.width / 2 + px * scale, vp.height / 2 - py * scale, depth];
}

export interface TraceBatch {
  response: TraceResponse;
  label: string;
}

export function buildPolylines(
  batches: TraceBatch[],
  dim: number,
  nCycles: number,
  bounds: number[][],
  view: ViewState,
  vp: Viewport,
): Polyline[] {
  const [lo, hi] = view.cycleRange;
  const lines: Polyline[] = [];
  batches.forEach((batch, batchIdx) => {
    const cycles = batch.response.cycles;
    batch.response.trajectories.forEach((traj, seedIdx) => {
      const pts: [number, number][] = [];
      const colors: string[] = [];
      let depthSum = 0;
      for (let k = 0; k < cycles.length; k++) {
        const c = cycles[k];
        if (c < lo || c > hi || !traj.valid[k]) continue;
        const [x, y, d] = project(traj.positions[k], dim, bounds, view, vp);
        pts.push([x, y]);
        colors.push(vertexColor(view.colorMode, c, nCycles, seedIdx));
        depthSum += d;
      }
      if (pts.length > 0) {
        lines.push({
          points: pts,
          colors,
          width: view.lineWidth,
          depth: pts.length ? depthSum / pts.length : 0,
          seedIndex: seedIdx,
          batch: batchIdx,
        });
      }
    });
  });
  if (dim === 3) {
    // painter's algorithm: far lines first
    lines.sort((a, b) => a.depth - b.depth || a.batch - b.batch || a.seedIndex - b.seedIndex);
  }
  return lines;
}

export function renderedVertexCount(lines: Polyline[]): number {
  return lines.reduce((acc, l) => acc + l.points.length, 0);
}

// FNV-1a over the canonical draw list; equal states hash equal images
export function drawListHash(lines: Polyline[]): string {
  const text = JSON.stringify(
    lines.map((l) => [l.points.map(([x, y]) => [Math.round(x * 100) / 100, Math.round(y * 100) / 100]), l.colors, l.width]),
  );
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h.toString(16).padStart(8, "0");
}

export function drawToCanvas(ctx: CanvasRenderingContext2D, lines: Polyline[], vp: Viewport): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  for (const line of lines) {
    ctx.lineWidth = line.width;
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
    for (let i = 1; i < line.points.length; i++) {
      ctx.strokeStyle = line.colors[i];
      ctx.beginPath();
      ctx.moveTo(line.points[i - 1][0], line.points[i - 1][1]);
      ctx.lineTo(line.points[i][0], line.points[i][1]);
      ctx.stroke();
    }
    if (line.points.length === 1) {
      ctx.fillStyle = line.colors[0];
      ctx.fillRect(line.points[0][0] - 1, line.points[0][1] - 1, 2, 2);
    }
  }
}
