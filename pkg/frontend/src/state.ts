// Application state with one-step undo. All mutations funnel through
// apply() so the previous state is always restorable.

import type { SeedBox } from "./seeds.js";
import { clampBox } from "./seeds.js";
import type { ViewState } from "./render.js";
import { defaultViewState } from "./render.js";

export interface AppState {
  box: SeedBox;
  view: ViewState;
  retainPrevious: boolean;
}

export type Action =
  | { kind: "set-box"; box: SeedBox }
  | { kind: "move-box"; delta: number[] }
  | { kind: "resize-box"; min: number[]; max: number[] }
  | { kind: "set-count"; count: number }
  | { kind: "set-strategy"; strategy: SeedBox["strategy"] }
  | { kind: "set-color-mode"; mode: ViewState["colorMode"] }
  | { kind: "set-line-width"; width: number }
  | { kind: "set-cycle-range"; range: [number, number] }
  | { kind: "set-camera2d"; camera: ViewState["camera2d"] }
  | { kind: "set-camera3d"; camera: ViewState["camera3d"] }
  | { kind: "set-retain"; retain: boolean };

export function initialState(bounds: number[][], nCycles: number, box: SeedBox): AppState {
  return { box: clampBox(box, bounds), view: defaultViewState(nCycles), retainPrevious: false };
}

function clampRange(range: [number, number], n: number): [number, number] {
  let [lo, hi] = range;
  lo = Math.min(Math.max(Math.round(lo), 0), n - 1);
  hi = Math.min(Math.max(Math.round(hi), 0), n - 1);
  if (lo > hi) [lo, hi] = [hi, lo];
  return [lo, hi];
}

export function reduce(state: AppState, action: Action, bounds: number[][], nCycles: number): AppState {
  const next: AppState = {
    box: { ...state.box, min: state.box.min.slice(), max: state.box.max.slice() },
    view: {
      ...state.view,
      cycleRange: [...state.view.cycleRange],
      camera2d: { ...state.view.camera2d },
      camera3d: { ...state.view.camera3d },
    },
    retainPrevious: state.retainPrevious,
  };
  switch (action.kind) {
    case "set-box":
      next.box = clampBox(action.box, bounds);
      break;
    case "move-box": {
      const moved = {
        ...next.box,
        min: next.box.min.map((v, k) => v + (action.delta[k] ?? 0)),
        max: next.box.max.map((v, k) => v + (action.delta[k] ?? 0)),
      };
      next.box = clampBox(moved, bounds);
      break;
    }
    case "resize-box":
      next.box = clampBox({ ...next.box, min: action.min, max: action.max }, bounds);
      break;
    case "set-count":
      next.box = clampBox({ ...next.box, count: action.count }, bounds);
      break;
    case "set-strategy":
      next.box.strategy = action.strategy;
      break;
    case "set-color-mode":
      next.view.colorMode = action.mode;
      break;
    case "set-line-width":
      next.view.lineWidth = Math.min(Math.max(action.width, 0.25), 10);
      break;
    case "set-cycle-range":
      next.view.cycleRange = clampRange(action.range, nCycles);
      break;
    case "set-camera2d":
      next.view.camera2d = { ...action.camera };
      break;
    case "set-camera3d":
      next.view.camera3d = { ...action.camera };
      break;
    case "set-retain":
      next.retainPrevious = action.retain;
      break;
  }
  return next;
}

export class UndoableState {
  private previous: AppState | null = null;

  constructor(
    public current: AppState,
    private bounds: number[][],
    private nCycles: number,
  ) {}

  apply(action: Action): AppState {
    this.previous = this.current;
    this.current = reduce(this.current, action, this.bounds, this.nCycles);
    return this.current;
  }

  undo(): AppState {
    if (this.previous !== null) {
      this.current = this.previous;
      this.previous = null;
    }
    return this.current;
  }

  get canUndo(): boolean {
    return this.previous !== null;
  }
}
