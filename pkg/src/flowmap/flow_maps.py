"""Flow-map extraction (long / short / hybrid) and persistence.

A flow-map set records, for m seeds and n file cycles, the end location
of seed i at file cycle j. The three extraction methods share that
m x n x dim layout and differ only in where trajectories restart:

  long    one continuous trajectory per seed, no resets
  short   every file cycle restarts from the original seed location
  hybrid  maps of p file cycles traced continuously, reset between maps

Resets always return to the original seed locations, which keeps the
(start, cycle) -> end mapping well-posed across reset epochs.

On disk a set is three NPY arrays (ends, seeds, valid) plus a JSON
sidecar with the extraction parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .fields import DomainBounds, Field
from .npyio import read_npy, write_npy
from .seeding import SeedSet
from .tracer import TraceConfig, advect_batch

METHOD_LONG = "long"
METHOD_SHORT = "short"
METHOD_HYBRID = "hybrid"


@dataclass
class FlowMapSet:
    """m seeds x n file cycles of end locations plus extraction metadata."""

    method: str
    seeds: np.ndarray  # (m, dim) start locations (= reset locations)
    ends: np.ndarray  # (m, n, dim)
    valid: np.ndarray  # (m, n) bool
    cfg: TraceConfig
    bounds: DomainBounds
    map_boundaries: list = dc_field(default_factory=list)  # file cycles where resets occur

    def __post_init__(self):
        self.seeds = np.asarray(self.seeds, dtype=np.float64)
        self.ends = np.asarray(self.ends, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        m, n = self.ends.shape[:2]
        if self.seeds.shape != (m, self.ends.shape[2]):
            raise ValueError(f"seeds shape {self.seeds.shape} inconsistent with ends {self.ends.shape}")
        if self.valid.shape != (m, n):
            raise ValueError(f"valid shape {self.valid.shape} inconsistent with ends {self.ends.shape}")
        if list(self.map_boundaries) != sorted(set(self.map_boundaries)):
            raise ValueError("map_boundaries must be strictly increasing")

    @property
    def n_seeds(self) -> int:
        return self.ends.shape[0]

    @property
    def n_file_cycles(self) -> int:
        return self.ends.shape[1]

    @property
    def dim(self) -> int:
        return self.ends.shape[2]

    @property
    def samples_per_map(self) -> int:
        """File cycles per map (n for long, 1 for short)."""
        return self.cfg.samples_per_map


def extract_long(field: Field, seeds: SeedSet, cfg: TraceConfig) -> FlowMapSet:
    """One continuous trajectory per seed, sampled at every file cycle."""
    positions, valid = advect_batch(field, seeds.points, cfg)
    n = cfg.n_file_cycles
    return FlowMapSet(
        method=METHOD_LONG,
        seeds=seeds.points.copy(),
        ends=positions,
        valid=valid,
        cfg=TraceConfig(cfg.delta, cfg.interval, n, cfg.t0, n),
        bounds=field.domain(),
        map_boundaries=[],
    )


def extract_short(field: Field, seeds: SeedSet, cfg: TraceConfig) -> FlowMapSet:
    """n single-interval maps, re-seeded at the original locations each epoch.

    ends[i, j] is the one-interval displacement of seeds[i] started at
    t0 + j * I * delta.
    """
    m, dim = seeds.points.shape
    n = cfg.n_file_cycles
    ends = np.empty((m, n, dim))
    valid = np.empty((m, n), dtype=bool)
    for j in range(n):
        sub = TraceConfig(cfg.delta, cfg.interval, 1, cfg.t0 + j * cfg.file_cycle_dt, 1)
        pos_j, valid_j = advect_batch(field, seeds.points, sub)
        ends[:, j] = pos_j[:, 0]
        valid[:, j] = valid_j[:, 0]
    return FlowMapSet(
        method=METHOD_SHORT,
        seeds=seeds.points.copy(),
        ends=ends,
        valid=valid,
        cfg=TraceConfig(cfg.delta, cfg.interval, n, cfg.t0, 1),
        bounds=field.domain(),
        map_boundaries=list(range(1, n)),
    )


def extract_hybrid(field: Field, seeds: SeedSet, cfg: TraceConfig, samples_per_map=None) -> FlowMapSet:
    """n/p maps of p file cycles each; continuous inside a map, reset between maps.

    p = n gives exactly the long extraction, p = 1 exactly the short one.
    """
    p = cfg.samples_per_map if samples_per_map is None else samples_per_map
    n = cfg.n_file_cycles
    if n % p != 0:
        raise ValueError(f"n_file_cycles={n} not divisible by samples_per_map={p}")
    m, dim = seeds.points.shape
    ends = np.empty((m, n, dim))
    valid = np.empty((m, n), dtype=bool)
    for k in range(n // p):
        sub = TraceConfig(
            delta=cfg.delta,
            interval=cfg.interval,
            n_file_cycles=p,
            t0=cfg.t0 + k * p * cfg.file_cycle_dt,
            samples_per_map=p,
        )
        pos_k, valid_k = advect_batch(field, seeds.points, sub)
        ends[:, k * p : (k + 1) * p] = pos_k
        valid[:, k * p : (k + 1) * p] = valid_k
    return FlowMapSet(
        method=METHOD_HYBRID,
        seeds=seeds.points.copy(),
        ends=ends,
        valid=valid,
        cfg=TraceConfig(cfg.delta, cfg.interval, n, cfg.t0, p),
        bounds=field.domain(),
        map_boundaries=list(range(p, n, p)),
    )


def to_training_samples(fms: FlowMapSet):
    """Flatten to Eq.-style (start, cycle, target, valid) arrays, seed-major.

    Sample i*n + j pairs seed i's reset location with file cycle j and
    end location ends[i, j]. Invalid entries are carried along with
    valid=False so the m x n shape is preserved; training filters them.
    """
    m, n, dim = fms.ends.shape
    starts = np.repeat(fms.seeds, n, axis=0)
    cycles = np.tile(np.arange(n), m)
    targets = fms.ends.reshape(m * n, dim)
    valid = fms.valid.reshape(m * n)
    return starts, cycles, targets, valid


def save_flow_maps(fms: FlowMapSet, path) -> dict:
    """Write ends/seeds/valid NPY files plus the JSON sidecar.

    `path` is the sidecar path; array files sit next to it with derived
    names. Returns the sidecar dict (with file names) for manifests.
    """
    path = Path(path)
    stem = path.name[: -len(".json")] if path.name.endswith(".json") else path.name
    ends_file = stem + ".npy"
    seeds_file = stem + ".seeds.npy"
    valid_file = stem + ".valid.npy"
    write_npy(path.parent / ends_file, fms.ends)
    write_npy(path.parent / seeds_file, fms.seeds)
    write_npy(path.parent / valid_file, fms.valid)
    sidecar = {
        "method": fms.method,
        "delta": fms.cfg.delta,
        "interval": fms.cfg.interval,
        "p": fms.samples_per_map,
        "t0": fms.cfg.t0,
        "bounds": fms.bounds.to_json(),
        "ends_file": ends_file,
        "seeds_file": seeds_file,
        "valid_file": valid_file,
    }
    with open(path, "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def load_flow_maps(path) -> FlowMapSet:
    """Load a flow-map set from its JSON sidecar."""
    path = Path(path)
    with open(path) as fh:
        sidecar = json.load(fh)
    ends = read_npy(path.parent / sidecar.get("ends_file", path.stem + ".npy"))
    seeds = read_npy(path.parent / sidecar["seeds_file"])
    valid = read_npy(path.parent / sidecar["valid_file"])
    method = sidecar["method"]
    n = ends.shape[1]
    p = int(sidecar["p"])
    cfg = TraceConfig(
        delta=float(sidecar["delta"]),
        interval=int(sidecar["interval"]),
        n_file_cycles=n,
        t0=float(sidecar["t0"]),
        samples_per_map=p,
    )
    boundaries = [] if method == METHOD_LONG else list(range(p, n, p))
    return FlowMapSet(
        method=method,
        seeds=seeds,
        ends=ends,
        valid=valid.astype(bool),
        cfg=cfg,
        bounds=DomainBounds.from_json(sidecar["bounds"]),
        map_boundaries=boundaries,
    )
