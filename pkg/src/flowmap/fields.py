"""Time-varying velocity fields.

Two analytic benchmark fields (double gyre, ABC) plus a regular-grid
sampled field for external data. Points are plain float64 arrays of
length 2 or 3; all evaluation is vectorized over an (m, dim) batch.

The analytic parameterizations are the standard literature forms; the
default coefficients are the common benchmark choices and can be
overridden at construction.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .npyio import read_npy


class FieldError(ValueError):
    """Invalid field construction or evaluation request."""


@dataclass(frozen=True)
class DomainBounds:
    """Axis-aligned bounding box, min < max per axis."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=np.float64)
        hi = np.asarray(self.max, dtype=np.float64)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)
        if lo.shape != hi.shape or lo.ndim != 1 or lo.size not in (2, 3):
            raise FieldError(f"bounds must be 2D or 3D vectors, got {lo.shape} / {hi.shape}")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise FieldError("bounds must be finite")
        if not np.all(lo < hi):
            raise FieldError(f"degenerate bounds: min {lo} not strictly below max {hi}")

    @property
    def dim(self) -> int:
        return self.min.size

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    def contains(self, points) -> np.ndarray:
        """Inclusive containment test for an (m, dim) batch (or one point)."""
        p = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return np.all((p >= self.min) & (p <= self.max), axis=1)

    def to_json(self):
        return [self.min.tolist(), self.max.tolist()]

    @staticmethod
    def from_json(obj) -> "DomainBounds":
        return DomainBounds(np.asarray(obj[0], dtype=np.float64), np.asarray(obj[1], dtype=np.float64))


class Field:
    """Base class: pure, read-only evaluation after construction."""

    dim: int

    def domain(self) -> DomainBounds:
        raise NotImplementedError

    def velocity(self, p, t: float) -> np.ndarray:
        """Velocity at a single point; thin wrapper over the batch path."""
        return self.velocity_batch(np.asarray(p, dtype=np.float64)[None, :], t)[0]

    def velocity_batch(self, points: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    # Gridded fields refuse queries past their last stored timestep; the
    # analytic fields are defined for all t >= 0.
    def max_time(self) -> float:
        return math.inf


@dataclass(frozen=True)
class DoubleGyreField(Field):
    """Unsteady double gyre on [0, 2] x [0, 1].

    Stream function psi = A sin(pi f(x, t)) sin(pi y) with
    f = a(t) x^2 + b(t) x, a = eps sin(omega t), b = 1 - 2 eps sin(omega t),
    and v = (-dpsi/dy, dpsi/dx). With eps = 0 the field is steady. The
    normal velocity component vanishes on all four edges, so exact
    trajectories never leave the domain.
    """

    amplitude: float = 0.1
    omega: float = 2.0 * math.pi / 10.0
    eps: float = 0.25

    dim = 2

    def domain(self) -> DomainBounds:
        return DomainBounds(np.array([0.0, 0.0]), np.array([2.0, 1.0]))

    def velocity_batch(self, points, t):
        p = np.asarray(points, dtype=np.float64)
        x, y = p[:, 0], p[:, 1]
        a = self.eps * math.sin(self.omega * t)
        b = 1.0 - 2.0 * self.eps * math.sin(self.omega * t)
        f = a * x * x + b * x
        dfdx = 2.0 * a * x + b
        pa = math.pi * self.amplitude
        out = np.empty_like(p)
        out[:, 0] = -pa * np.sin(math.pi * f) * np.cos(math.pi * y)
        out[:, 1] = pa * np.cos(math.pi * f) * np.sin(math.pi * y) * dfdx
        return out


@dataclass(frozen=True)
class ABCField(Field):
    """Steady Arnold-Beltrami-Childress flow on [0, 2pi]^3.

    dx/dt = A sin z + C cos y, dy/dt = B sin x + A cos z,
    dz/dt = C sin y + B cos x. 2pi-periodic in every coordinate.
    """

    a: float = math.sqrt(3.0)
    b: float = math.sqrt(2.0)
    c: float = 1.0

    dim = 3

    def domain(self) -> DomainBounds:
        two_pi = 2.0 * math.pi
        return DomainBounds(np.zeros(3), np.array([two_pi, two_pi, two_pi]))

    def velocity_batch(self, points, t):
        p = np.asarray(points, dtype=np.float64)
        x, y, z = p[:, 0], p[:, 1], p[:, 2]
        out = np.empty_like(p)
        out[:, 0] = self.a * np.sin(z) + self.c * np.cos(y)
        out[:, 1] = self.b * np.sin(x) + self.a * np.cos(z)
        out[:, 2] = self.c * np.sin(y) + self.b * np.cos(x)
        return out


class GriddedField(Field):
    """Velocity sampled on a regular node-centered grid at uniform timesteps.

    `data` has shape (n_steps, *resolution, dim); node i along axis k sits
    at min_k + i * extent_k / (res_k - 1). Spatial queries clamp to the
    bounds (zero-order extrapolation) and interpolate multilinearly;
    time is interpolated linearly between adjacent steps. Queries beyond
    the last timestep are an error.
    """

    def __init__(self, bounds: DomainBounds, dt: float, data: np.ndarray):
        data = np.asarray(data, dtype=np.float64)
        if dt <= 0:
            raise FieldError("dt must be positive")
        if data.ndim != bounds.dim + 2:
            raise FieldError(
                f"data shape {data.shape} does not match a (steps, *res, {bounds.dim}) layout"
            )
        if data.shape[-1] != bounds.dim:
            raise FieldError(f"last data axis must equal dim {bounds.dim}, got {data.shape[-1]}")
        if data.shape[0] < 1:
            raise FieldError("need at least one timestep")
        if any(r < 2 for r in data.shape[1:-1]):
            raise FieldError("need at least two nodes per axis")
        if not np.isfinite(data).all():
            raise FieldError("grid data contains NaN or Inf")
        self.bounds = bounds
        self.dt = float(dt)
        self.data = data
        self.dim = bounds.dim
        self.resolution = data.shape[1:-1]
        self._spacing = bounds.extent / (np.array(self.resolution, dtype=np.float64) - 1.0)

    def domain(self) -> DomainBounds:
        return self.bounds

    def max_time(self) -> float:
        return (self.data.shape[0] - 1) * self.dt

    def velocity_batch(self, points, t):
        if t < 0 or t > self.max_time() + 1e-12 * max(self.dt, 1.0):
            raise FieldError(f"time out of range: t={t} not in [0, {self.max_time()}]")
        tau = min(t / self.dt, self.data.shape[0] - 1.0)
        k0 = int(tau)
        frac_t = tau - k0
        v = self._interp_space(self.data[k0], points)
        if frac_t > 0.0:
            v1 = self._interp_space(self.data[k0 + 1], points)
            v = (1.0 - frac_t) * v + frac_t * v1
        return v

    def _interp_space(self, grid, points):
        p = np.asarray(points, dtype=np.float64)
        u = (np.clip(p, self.bounds.min, self.bounds.max) - self.bounds.min) / self._spacing
        res = np.array(self.resolution)
        i0 = np.minimum(u.astype(np.int64), res - 2)
        frac = u - i0
        out = np.zeros_like(p)
        # blend the 2^dim cell corners
        for corner in range(1 << self.dim):
            idx = []
            w = np.ones(p.shape[0])
            for ax in range(self.dim):
                bit = (corner >> ax) & 1
                idx.append(i0[:, ax] + bit)
                w = w * (frac[:, ax] if bit else 1.0 - frac[:, ax])
            out += w[:, None] * grid[tuple(idx)]
        return out


def load_gridded(descriptor_path) -> GriddedField:
    """Load a gridded field from a JSON descriptor.

    Descriptor schema: {"dims": [nx, ny(, nz)], "bounds": [[min...], [max...]],
    "dt": float, "files": ["step0.npy", ...]}; file paths are relative to
    the descriptor. Each NPY holds one timestep with shape (*dims, dim).
    """
    path = Path(descriptor_path)
    with open(path) as fh:
        desc = json.load(fh)
    bounds = DomainBounds.from_json(desc["bounds"])
    dims = tuple(int(d) for d in desc["dims"])
    steps = []
    for name in desc["files"]:
        arr = read_npy(path.parent / name)
        if arr.shape != dims + (bounds.dim,):
            raise FieldError(
                f"{name}: timestep shape {arr.shape} does not match dims {dims} x {bounds.dim}"
            )
        steps.append(arr)
    return GriddedField(bounds, float(desc["dt"]), np.stack(steps, axis=0))


_FIELD_BUILDERS = {
    "double-gyre": DoubleGyreField,
    "abc": ABCField,
}


def make_field(name: str, **params) -> Field:
    """Build a field from a CLI-style name: analytic tag or gridded descriptor path."""
    if name in _FIELD_BUILDERS:
        return _FIELD_BUILDERS[name](**params)
    if name.endswith(".json"):
        return load_gridded(name)
    raise FieldError(f"unknown field {name!r}; expected one of {sorted(_FIELD_BUILDERS)} or a .json descriptor")
