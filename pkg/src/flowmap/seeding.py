"""Seed placement strategies: Sobol (default), pseudorandom, uniform grid.

The Sobol generator is self-contained: direction numbers come from the
Joe-Kuo D6 table (dimensions 2 and 3; dimension 1 is the van der Corput
sequence), points are produced in Gray-code order with 32-bit state.
The all-zeros initial point is skipped by default so no seed lands
exactly on the domain corner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .fields import DomainBounds

_SOBOL_BITS = 32

# Joe-Kuo D6 primitive-polynomial table rows (degree s, coefficient bits a,
# initial direction integers m) for sequence dimensions 2 and 3.
_JOE_KUO = {
    2: (1, 0, (1,)),
    3: (2, 1, (1, 3)),
}


def _direction_numbers(dim_index: int) -> np.ndarray:
    """32 direction integers V_i (already shifted) for one sequence dimension."""
    v = np.zeros(_SOBOL_BITS, dtype=np.uint64)
    if dim_index == 1:
        for i in range(_SOBOL_BITS):
            v[i] = np.uint64(1) << np.uint64(_SOBOL_BITS - 1 - i)
        return v
    s, a, m = _JOE_KUO[dim_index]
    for i in range(s):
        v[i] = np.uint64(m[i]) << np.uint64(_SOBOL_BITS - 1 - i)
    for i in range(s, _SOBOL_BITS):
        vi = v[i - s] ^ (v[i - s] >> np.uint64(s))
        for k in range(1, s):
            if (a >> (s - 1 - k)) & 1:
                vi ^= v[i - k]
        v[i] = vi
    return v


def sobol_unit(dim: int, count: int, skip: int = 0) -> np.ndarray:
    """Raw Sobol points in [0, 1)^dim, Gray-code order, starting at index `skip`.

    Index 0 is the all-zeros point; callers that want the degenerate
    corner removed pass skip >= 1 (the public `sobol` does).
    """
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}: only 2 and 3 are provided")
    if count < 0 or skip < 0:
        raise ValueError("count and skip must be non-negative")
    directions = [_direction_numbers(d + 1) for d in range(dim)]
    state = np.zeros(dim, dtype=np.uint64)
    out = np.empty((count, dim))
    if count and skip == 0:
        out[0] = 0.0
    # X_n = X_{n-1} xor V_c with c the rightmost zero bit of n-1; emit
    # indices skip..skip+count-1
    for n in range(1, skip + count):
        c = 0
        mask = n - 1
        while mask & 1:
            mask >>= 1
            c += 1
        for d in range(dim):
            state[d] ^= directions[d][c]
        if n >= skip:
            out[n - skip] = state
    return out / float(1 << _SOBOL_BITS)


@dataclass(frozen=True)
class SeedSet:
    """Seed start locations plus the strategy that produced them."""

    points: np.ndarray  # (m, dim)
    strategy: str
    rng_seed: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.float64))

    def __len__(self) -> int:
        return self.points.shape[0]


def _map_to_bounds(unit: np.ndarray, bounds: DomainBounds) -> np.ndarray:
    return bounds.min + unit * bounds.extent


def sobol(dim: int, count: int, bounds: DomainBounds, skip: int = 0) -> SeedSet:
    """First `count` Sobol points (zero point skipped) mapped into bounds.

    `skip` offsets further into the sequence, e.g. to draw validation
    seeds disjoint from the training seeds.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if bounds.dim != dim:
        raise ValueError(f"bounds are {bounds.dim}D but dim={dim}")
    unit = sobol_unit(dim, count, skip=skip + 1)
    return SeedSet(points=_map_to_bounds(unit, bounds), strategy="sobol")


def pseudorandom(dim: int, count: int, bounds: DomainBounds, rng_seed: int) -> SeedSet:
    """Uniform i.i.d. points from a seeded generator; reproducible."""
    if bounds.dim != dim:
        raise ValueError(f"bounds are {bounds.dim}D but dim={dim}")
    rng = np.random.default_rng(rng_seed)
    unit = rng.random((count, dim))
    return SeedSet(points=_map_to_bounds(unit, bounds), strategy="pseudorandom", rng_seed=rng_seed)


def uniform_grid(resolution, bounds: DomainBounds) -> SeedSet:
    """Cell-centered lattice; count = product of per-axis resolutions."""
    res = tuple(int(r) for r in resolution)
    if len(res) != bounds.dim:
        raise ValueError(f"resolution {res} does not match bounds dim {bounds.dim}")
    if any(r < 1 for r in res):
        raise ValueError("resolution entries must be >= 1")
    axes = [
        bounds.min[k] + (np.arange(res[k]) + 0.5) * bounds.extent[k] / res[k]
        for k in range(bounds.dim)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    # first axis varies fastest in the flattened ordering
    points = np.stack([m.reshape(-1, order="F") for m in mesh], axis=1)
    return SeedSet(points=points, strategy="grid")


def make_seeds(spec: str, bounds: DomainBounds, rng_seed: int = 0) -> SeedSet:
    """Parse a CLI-style seed spec: 'sobol:N', 'random:N', or 'grid:RxR(xR)'."""
    kind, _, arg = spec.partition(":")
    if kind == "sobol":
        return sobol(bounds.dim, int(arg), bounds)
    if kind == "random":
        return pseudorandom(bounds.dim, int(arg), bounds, rng_seed)
    if kind == "grid":
        res = tuple(int(r) for r in arg.split("x"))
        return uniform_grid(res, bounds)
    raise ValueError(f"unknown seed spec {spec!r}; expected sobol:N, random:N or grid:RxR")
