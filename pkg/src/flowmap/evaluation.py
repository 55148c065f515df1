"""Error metric, summary statistics, and the DL-vs-BC comparison harness.

The per-seed error is the mean over file cycles of the distance between
predicted and reference end locations. The headline distance is the
mean absolute per-coordinate difference (the training loss applied in
domain space); the Euclidean variant is reported alongside. Reference
trajectories come from RK4 at one tenth of the production step size,
and every evaluation can report that oracle's own noise floor.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .baseline import Triangulation, bc_reconstruct, triangulate
from .fields import Field
from .flow_maps import FlowMapSet, load_flow_maps
from .net import MlpModel, infer_batch, load_model
from .tracer import TraceConfig, Trajectory, advect_batch


def thread_count(requested: int | None = None) -> int:
    """Worker cap: explicit argument, else FLOWMAP_THREADS, else 1."""
    if requested is not None and requested >= 1:
        return requested
    env = os.environ.get("FLOWMAP_THREADS", "")
    if env.isdigit() and int(env) >= 1:
        return int(env)
    return 1


@dataclass
class ErrorReport:
    per_seed_errors: np.ndarray
    max: float
    mean: float
    median: float
    count: int
    excluded_invalid: int = 0

    def to_dict(self) -> dict:
        return {
            "max": self.max,
            "mean": self.mean,
            "median": self.median,
            "count": self.count,
            "excluded_invalid": self.excluded_invalid,
        }


def error_stats(errors, excluded_invalid: int = 0) -> ErrorReport:
    """Exact order statistics; median is the lower middle for even counts."""
    arr = np.asarray(errors, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("no errors to summarize")
    srt = np.sort(arr)
    return ErrorReport(
        per_seed_errors=arr,
        max=float(srt[-1]),
        mean=float(arr.mean()),
        median=float(srt[(arr.size - 1) // 2]),
        count=int(arr.size),
        excluded_invalid=int(excluded_invalid),
    )


def trajectory_error(pred: Trajectory, truth: Trajectory, metric: str = "l1") -> float:
    """Mean per-cycle distance over the cycles valid in both trajectories.

    Returns NaN when no cycle is valid in both (undefined error).
    """
    if pred.positions.shape != truth.positions.shape:
        raise ValueError("trajectory shapes differ")
    common = pred.valid & truth.valid
    if not common.any():
        return math.nan
    diff = pred.positions[common] - truth.positions[common]
    if metric == "l1":
        per_cycle = np.abs(diff).mean(axis=1)
    elif metric == "euclidean":
        per_cycle = np.linalg.norm(diff, axis=1)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return float(per_cycle.mean())


def _batch_errors(pred_pos, pred_valid, truth_pos, truth_valid):
    """Vectorized per-seed l1/euclidean errors; NaN rows mean no common cycle."""
    common = pred_valid & truth_valid
    counts = common.sum(axis=1)
    diff = pred_pos - truth_pos
    l1 = np.abs(diff).mean(axis=2)
    l2 = np.linalg.norm(diff, axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        e1 = np.where(counts > 0, (l1 * common).sum(axis=1) / np.maximum(counts, 1), math.nan)
        e2 = np.where(counts > 0, (l2 * common).sum(axis=1) / np.maximum(counts, 1), math.nan)
    e1[counts == 0] = math.nan
    e2[counts == 0] = math.nan
    return e1, e2


@dataclass
class EvalResult:
    l1: ErrorReport
    euclidean: ErrorReport
    noise_floor: float | None = None

    def to_dict(self) -> dict:
        out = {"l1": self.l1.to_dict(), "euclidean": self.euclidean.to_dict()}
        if self.noise_floor is not None:
            out["noise_floor_l1_mean"] = self.noise_floor
        return out


def reference_config(cfg: TraceConfig, divisor: int = 10) -> TraceConfig:
    """Fine-step oracle config: delta/divisor with matching file-cycle times."""
    return TraceConfig(
        delta=cfg.delta / divisor,
        interval=cfg.interval * divisor,
        n_file_cycles=cfg.n_file_cycles,
        t0=cfg.t0,
        samples_per_map=cfg.samples_per_map,
    )


def reference_trajectories(field: Field, seeds: np.ndarray, cfg: TraceConfig, divisor: int = 10, threads: int | None = None):
    """Ground-truth positions via fine-step advection, chunked over workers."""
    ref_cfg = reference_config(cfg, divisor)
    workers = thread_count(threads)
    if workers == 1 or seeds.shape[0] < 2 * workers:
        return advect_batch(field, seeds, ref_cfg)
    chunks = np.array_split(np.arange(seeds.shape[0]), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda idx: advect_batch(field, seeds[idx], ref_cfg), chunks))
    return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])


def evaluate_method(trace_fn, field: Field, test_seeds: np.ndarray, cfg: TraceConfig,
                    divisor: int = 10, include_noise_floor: bool = False,
                    threads: int | None = None) -> EvalResult:
    """Per-seed errors of `trace_fn` against the fine-step reference.

    `trace_fn(seeds) -> (positions (B, n, dim), valid (B, n))`. Seeds
    whose trajectories share no valid cycle with the reference are
    excluded and counted.
    """
    test_seeds = np.asarray(test_seeds, dtype=np.float64)
    truth_pos, truth_valid = reference_trajectories(field, test_seeds, cfg, divisor, threads)
    pred_pos, pred_valid = trace_fn(test_seeds)
    e1, e2 = _batch_errors(pred_pos, pred_valid, truth_pos, truth_valid)
    keep = ~np.isnan(e1)
    excluded = int((~keep).sum())
    if not keep.any():
        raise ValueError("no seed produced a defined error")
    result = EvalResult(
        l1=error_stats(e1[keep], excluded),
        euclidean=error_stats(e2[keep], excluded),
    )
    if include_noise_floor:
        base_pos, base_valid = advect_batch(field, test_seeds, cfg)
        f1, _ = _batch_errors(base_pos, base_valid, truth_pos, truth_valid)
        result.noise_floor = float(np.nanmean(f1))
    return result


def model_tracer(model: MlpModel):
    return lambda seeds: infer_batch(model, seeds)


def tracer_method(field: Field, cfg: TraceConfig):
    return lambda seeds: advect_batch(field, seeds, cfg)


def bc_tracer(basis: FlowMapSet, tri: Triangulation, threads: int | None = None):
    """Barycentric baseline as a batch tracer (per-worker walk caches)."""

    def run(seeds):
        seeds = np.atleast_2d(np.asarray(seeds, dtype=np.float64))
        workers = thread_count(threads)

        def run_chunk(idx):
            state = {}
            pos = np.empty((idx.size, basis.n_file_cycles, basis.dim))
            val = np.empty((idx.size, basis.n_file_cycles), dtype=bool)
            for row, i in enumerate(idx):
                tr = bc_reconstruct(basis, tri, seeds[i], state)
                pos[row] = tr.positions
                val[row] = tr.valid
            return pos, val

        if workers == 1:
            return run_chunk(np.arange(seeds.shape[0]))
        chunks = np.array_split(np.arange(seeds.shape[0]), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_chunk, chunks))
        return np.concatenate([p[0] for p in parts]), np.concatenate([p[1] for p in parts])

    return run


def _timed(fn, repeats: int):
    """Median wall-clock seconds over `repeats` calls (one warmup call)."""
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


@dataclass
class ComparisonReport:
    seed_counts: list
    dl: dict = dc_field(default_factory=dict)
    bc: dict = dc_field(default_factory=dict)
    meta: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"seed_counts": self.seed_counts, "dl": self.dl, "bc": self.bc, "meta": self.meta}


def compare(model_path, basis_path, field: Field, seed_counts, rng_seed: int = 7,
            n_error_seeds: int = 500, repeats: int = 5, timing_repeats_setup: int = 5,
            threads: int | None = None) -> ComparisonReport:
    """Head-to-head DL vs BC: artifact load, structure build, queries, errors.

    Timings are medians over repeats of a monotonic clock with a warm
    cache; storage is the artifact size on disk; errors use the shared
    fine-step oracle on pseudorandom test seeds.
    """
    from pathlib import Path

    from .seeding import pseudorandom

    model_path, basis_path = Path(model_path), Path(basis_path)
    report = ComparisonReport(seed_counts=list(seed_counts))
    report.meta = {"threads": thread_count(threads), "repeats": repeats}

    report.dl["load_s"] = _timed(lambda: load_model(model_path), timing_repeats_setup)
    model = load_model(model_path)
    report.dl["storage_bytes"] = model_path.stat().st_size

    report.bc["load_s"] = _timed(lambda: load_flow_maps(basis_path), timing_repeats_setup)
    basis = load_flow_maps(basis_path)
    sidecar_files = [basis_path] + [
        basis_path.parent / name
        for name in (
            basis_path.name.replace(".json", ".npy"),
            basis_path.name.replace(".json", ".seeds.npy"),
            basis_path.name.replace(".json", ".valid.npy"),
        )
    ]
    report.bc["storage_bytes"] = sum(p.stat().st_size for p in sidecar_files if p.exists())
    report.bc["triangulate_s"] = _timed(lambda: triangulate(basis.seeds), timing_repeats_setup)
    tri = triangulate(basis.seeds)

    bounds = field.domain()
    dl_fn = model_tracer(model)
    bc_fn = bc_tracer(basis, tri, threads)
    report.dl["query_s"] = {}
    report.bc["query_s"] = {}
    for count in seed_counts:
        seeds = pseudorandom(bounds.dim, count, bounds, rng_seed + count).points
        report.dl["query_s"][count] = _timed(lambda: dl_fn(seeds), repeats)
        report.bc["query_s"][count] = _timed(lambda: bc_fn(seeds), repeats)

    test = pseudorandom(bounds.dim, n_error_seeds, bounds, rng_seed).points
    cfg = basis.cfg
    report.dl["errors"] = evaluate_method(dl_fn, field, test, cfg, include_noise_floor=True, threads=threads).to_dict()
    report.bc["errors"] = evaluate_method(bc_fn, field, test, cfg, threads=threads).to_dict()
    report.meta["model_params"] = int(sum(w.size + b.size for w, b in model.parameters()))
    report.meta["basis_seeds"] = int(basis.n_seeds)
    report.meta["n_file_cycles"] = int(basis.n_file_cycles)
    return report
