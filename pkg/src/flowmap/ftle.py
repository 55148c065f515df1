"""Finite-time Lyapunov exponents from lattice-seeded flow maps.

The flow-map Jacobian at each lattice node is estimated by central
differences of the final particle positions over neighboring seeds
(one-sided at the lattice faces); the FTLE is
ln(sqrt(largest eigenvalue of F^T F)) / |T|.
"""

from __future__ import annotations

import numpy as np

from .flow_maps import FlowMapSet


def lattice_shape(seeds: np.ndarray):
    """Recover (resolution, axis coordinate arrays) from lattice-ordered seeds.

    Seeds must enumerate a full regular lattice with the first axis
    varying fastest (the ordering `seeding.uniform_grid` produces);
    anything else raises.
    """
    dim = seeds.shape[1]
    axes = [np.unique(seeds[:, k]) for k in range(dim)]
    res = tuple(len(a) for a in axes)
    if int(np.prod(res)) != seeds.shape[0]:
        raise ValueError("seeds do not form a full regular lattice")
    mesh = np.meshgrid(*axes, indexing="ij")
    expected = np.stack([m.reshape(-1, order="F") for m in mesh], axis=1)
    if not np.array_equal(expected, seeds):
        raise ValueError("seeds are not in lattice order")
    spacings = [np.diff(a) for a in axes]
    for s in spacings:
        if s.size and not np.allclose(s, s[0], rtol=1e-9, atol=1e-12):
            raise ValueError("lattice spacing is not uniform")
    return res, axes


def lattice_values(per_seed: np.ndarray, res) -> np.ndarray:
    """Reshape (m, k) per-seed values to (*res, k), x lattice index first.

    Inverse of the first-axis-fastest flattening used by lattice seeds.
    """
    dim = len(res)
    k = per_seed.shape[1]
    arr = per_seed.reshape((*res[::-1], k))
    return arr.transpose((*range(dim - 1, -1, -1), dim))


def ftle(fms: FlowMapSet, T: float | None = None) -> np.ndarray:
    """FTLE grid from a lattice-seeded flow-map set.

    Uses the final file cycle's end locations. T defaults to the traced
    duration n * I * delta. Returns an array shaped like the seed
    lattice (x index first).
    """
    if T is None:
        T = fms.cfg.duration
    if T == 0:
        raise ValueError("T must be nonzero")
    res, axes = lattice_shape(fms.seeds)
    dim = fms.dim
    if not fms.valid[:, -1].all():
        raise ValueError("cannot compute FTLE: some particles left the domain")
    # final positions on the lattice, x index first
    final = lattice_values(fms.ends[:, -1, :], res)
    h = [float(a[1] - a[0]) if len(a) > 1 else 1.0 for a in axes]

    # jacobian[..., i, k] = d final_i / d seed_k
    jac = np.empty((*res, dim, dim))
    for k in range(dim):
        d = np.gradient(final, h[k], axis=k, edge_order=1)
        jac[..., :, k] = d

    # largest eigenvalue of F^T F via singular values of F
    flat = jac.reshape(-1, dim, dim)
    svals = np.linalg.svd(flat, compute_uv=False)
    lam_max = svals[:, 0] ** 2
    out = np.log(np.sqrt(np.maximum(lam_max, 1e-300))) / abs(T)
    return out.reshape(res)
