// Client-side seed generation inside a draggable box. Deterministic for a
// given (box, rngSeed) so re-tracing an unchanged configuration reproduces
// the identical request and image.

export type SeedStrategy = "stratified" | "random" | "grid";

export interface SeedBox {
  min: number[];
  max: number[];
  count: number;
  strategy: SeedStrategy;
  rngSeed: number;
}

export const MAX_SEEDS = 5000;

// mulberry32: tiny deterministic PRNG, good enough for visual probing
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function clampBox(box: SeedBox, bounds: number[][]): SeedBox {
  const dim = bounds[0].length;
  const min = box.min.slice(0, dim);
  const max = box.max.slice(0, dim);
  for (let k = 0; k < dim; k++) {
    min[k] = Math.min(Math.max(min[k], bounds[0][k]), bounds[1][k]);
    max[k] = Math.min(Math.max(max[k], bounds[0][k]), bounds[1][k]);
    if (min[k] > max[k]) [min[k], max[k]] = [max[k], min[k]];
    if (min[k] === max[k]) {
      // degenerate after clamping: widen to a sliver inside the domain
      const h = (bounds[1][k] - bounds[0][k]) * 1e-3;
      min[k] = Math.max(bounds[0][k], min[k] - h);
      max[k] = Math.min(bounds[1][k], max[k] + h);
    }
  }
  const count = Math.min(Math.max(Math.round(box.count), 1), MAX_SEEDS);
  return { ...box, min, max, count };
}

export function defaultBox(bounds: number[][], count = 200): SeedBox {
  return {
    min: bounds[0].slice(),
    max: bounds[1].slice(),
    count,
    strategy: "stratified",
    rngSeed: 1,
  };
}

function gridDims(count: number, dim: number): number[] {
  const side = Math.ceil(Math.pow(count, 1 / dim));
  return new Array(dim).fill(side);
}

export function generateSeeds(box: SeedBox): number[][] {
  const dim = box.min.length;
  const rand = mulberry32(box.rngSeed);
  const span = box.max.map((hi, k) => hi - box.min[k]);
  const pts: number[][] = [];
  if (box.strategy === "random") {
    for (let i = 0; i < box.count; i++) {
      pts.push(box.min.map((lo, k) => lo + rand() * span[k]));
    }
    return pts;
  }
  const dims = gridDims(box.count, dim);
  const cells: number[][] = [];
  const idx = new Array(dim).fill(0);
  outer: for (;;) {
    cells.push(idx.slice());
    for (let k = 0; k < dim; k++) {
      idx[k]++;
      if (idx[k] < dims[k]) continue outer;
      idx[k] = 0;
    }
    break;
  }
  // cell-centered lattice, optionally jittered inside each cell
  for (const cell of cells) {
    if (pts.length === box.count) break;
    const u = cell.map((c, k) => {
      const jitter = box.strategy === "stratified" ? rand() : 0.5;
      return (c + jitter) / dims[k];
    });
    pts.push(u.map((v, k) => box.min[k] + v * span[k]));
  }
  // grid may undershoot only when count exceeds the lattice; top up randomly
  while (pts.length < box.count) {
    pts.push(box.min.map((lo, k) => lo + rand() * span[k]));
  }
  return pts;
}
