"""Encoder-decoder MLP over (start location, file cycle) -> end location.

Two encoder stacks (position and file cycle) each emit half the latent
vector; their concatenation feeds the decoder, whose last layer is
linear. Hidden activations are sine (SIREN-style, w0 scaling on the
first layer of each encoder) or ReLU for comparison runs.

Everything is float64 numpy. Training-path matmuls go through BLAS;
inference uses an einsum kernel whose per-row results do not depend on
batch size, so batched and single-seed queries agree bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..fields import DomainBounds
from ..tracer import Trajectory

ACT_SINE = "sine"
ACT_RELU = "relu"
ACT_LINEAR = "linear"


@dataclass(frozen=True)
class MlpArch:
    """Architecture description; latent_dim D is split evenly across encoders."""

    dim: int = 2
    latent_dim: int = 256
    enc_pos_layers: int = 4
    enc_cycle_layers: int = 4
    dec_layers: int = 6
    activation: str = ACT_SINE
    sine_w0: float = 30.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.latent_dim % 2 != 0 or self.latent_dim < 2:
            raise ValueError("latent_dim must be even and >= 2")
        if min(self.enc_pos_layers, self.enc_cycle_layers, self.dec_layers) < 1:
            raise ValueError("all layer counts must be >= 1")
        if self.activation not in (ACT_SINE, ACT_RELU):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def half(self) -> int:
        return self.latent_dim // 2


@dataclass
class Linear:
    """One fully connected layer: act(w0 * (x @ weight + bias))."""

    weight: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray  # (fan_out,)
    w0: float
    activation: str

    @property
    def fan_in(self) -> int:
        return self.weight.shape[0]

    @property
    def fan_out(self) -> int:
        return self.weight.shape[1]


@dataclass
class Normalization:
    """Affine maps: domain -> [-1,1]^dim per axis, cycle index -> [-1,1]."""

    lo: np.ndarray
    hi: np.ndarray
    n_cycles: int

    def norm_pos(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * (x - self.lo) / (self.hi - self.lo) - 1.0

    def denorm_pos(self, x: np.ndarray) -> np.ndarray:
        return self.lo + 0.5 * (x + 1.0) * (self.hi - self.lo)

    def norm_cycle(self, j) -> np.ndarray:
        j = np.asarray(j, dtype=np.float64)
        if self.n_cycles <= 1:
            return np.zeros_like(j)
        return 2.0 * j / (self.n_cycles - 1) - 1.0


@dataclass
class MlpModel:
    """Weights plus the normalization and inference metadata."""

    arch: MlpArch
    pos_stack: list
    cycle_stack: list
    dec_stack: list
    norm: Normalization
    method: str = "long"  # "long" or "hybrid"
    samples_per_map: int = 0  # = n_file_cycles for long models

    @property
    def n_file_cycles(self) -> int:
        return self.norm.n_cycles

    def stacks(self):
        return (self.pos_stack, self.cycle_stack, self.dec_stack)

    def layers(self):
        for stack in self.stacks():
            yield from stack

    def parameters(self):
        """Flat list of (weight, bias) in a fixed traversal order."""
        return [(lay.weight, lay.bias) for lay in self.layers()]


def count_params(model: MlpModel) -> int:
    return sum(w.size + b.size for w, b in model.parameters())


def arch_param_count(arch: MlpArch) -> int:
    """Closed-form parameter count: sum of (fan_in + 1) * fan_out."""
    total = 0
    for fan_in, fan_out, _, _ in _layer_plan(arch):
        total += (fan_in + 1) * fan_out
    return total


def _layer_plan(arch: MlpArch):
    """Yield (fan_in, fan_out, w0, activation) in traversal order."""
    h = arch.half
    act = arch.activation
    w0_first = arch.sine_w0 if act == ACT_SINE else 1.0
    # position encoder
    yield (arch.dim, h, w0_first, act)
    for _ in range(arch.enc_pos_layers - 1):
        yield (h, h, 1.0, act)
    # cycle encoder
    yield (1, h, w0_first, act)
    for _ in range(arch.enc_cycle_layers - 1):
        yield (h, h, 1.0, act)
    # decoder: hidden layers at full latent width, linear output
    for _ in range(arch.dec_layers - 1):
        yield (arch.latent_dim, arch.latent_dim, 1.0, act)
    yield (arch.latent_dim, arch.dim, 1.0, ACT_LINEAR)


def init_model(
    arch: MlpArch,
    bounds: DomainBounds,
    n_file_cycles: int,
    rng_seed: int,
    method: str = "long",
    samples_per_map: int | None = None,
) -> MlpModel:
    """Deterministically initialize a model for the given domain and cycle count.

    Sine: first encoder layers U(-1/fan_in, 1/fan_in) with the w0 factor
    applied at evaluation; all other layers U(-sqrt(6/fan_in), +...).
    ReLU: Kaiming-uniform everywhere. Biases start at zero.
    """
    if bounds.dim != arch.dim:
        raise ValueError(f"bounds dim {bounds.dim} != arch dim {arch.dim}")
    rng = np.random.default_rng(rng_seed)
    layers = []
    for fan_in, fan_out, w0, act in _layer_plan(arch):
        if arch.activation == ACT_SINE and w0 != 1.0:
            bound = 1.0 / fan_in
        else:
            bound = math.sqrt(6.0 / fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        layers.append(Linear(weight=weight, bias=np.zeros(fan_out), w0=w0, activation=act))
    pos = layers[: arch.enc_pos_layers]
    cyc = layers[arch.enc_pos_layers : arch.enc_pos_layers + arch.enc_cycle_layers]
    dec = layers[arch.enc_pos_layers + arch.enc_cycle_layers :]
    norm = Normalization(lo=bounds.min.copy(), hi=bounds.max.copy(), n_cycles=int(n_file_cycles))
    if method not in ("long", "hybrid"):
        raise ValueError(f"unknown method {method!r}")
    p = n_file_cycles if method == "long" else int(samples_per_map or 1)
    if n_file_cycles % p != 0:
        raise ValueError(f"n_file_cycles={n_file_cycles} not divisible by samples_per_map={p}")
    return MlpModel(arch=arch, pos_stack=pos, cycle_stack=cyc, dec_stack=dec,
                    norm=norm, method=method, samples_per_map=p)


def _matmul_blas(x, w):
    return x @ w


def _matmul_rowstable(x, w):
    # einsum's reduction order is independent of the batch extent, so row
    # i of a batched product is bitwise equal to the batch-of-one product
    return np.einsum("ij,jk->ik", x, w, optimize=False)


def _apply_layer(lay: Linear, x, matmul):
    z = matmul(x, lay.weight) + lay.bias
    if lay.activation == ACT_SINE:
        return np.sin(lay.w0 * z), z
    if lay.activation == ACT_RELU:
        return np.maximum(z, 0.0), z
    return z, z


def _run_stacks(model: MlpModel, pos_n, cyc_n, matmul, want_cache=False):
    """Normalized-space forward; returns raw decoder output (and caches)."""
    caches = {"pos": [], "cyc": [], "dec": []} if want_cache else None

    def run(stack, x, key):
        for lay in stack:
            out, z = _apply_layer(lay, x, matmul)
            if want_cache:
                caches[key].append((x, z))
            x = out
        return x

    x = run(model.pos_stack, pos_n, "pos")
    c = run(model.cycle_stack, cyc_n, "cyc")
    h = run(model.dec_stack, np.concatenate([x, c], axis=1), "dec")
    return h, caches


def forward(model: MlpModel, starts, cycles) -> np.ndarray:
    """Predicted end locations for a batch of (start, file cycle) queries.

    Batch-size independent per row (see module docstring). `cycles` may
    be a scalar or a per-row array; values must lie in [0, n-1].
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=np.float64))
    cycles = np.broadcast_to(np.asarray(cycles), (starts.shape[0],))
    n = model.n_file_cycles
    if np.any((cycles < 0) | (cycles > n - 1)):
        raise ValueError(f"cycle out of range [0, {n - 1}]")
    pos_n = model.norm.norm_pos(starts)
    cyc_n = model.norm.norm_cycle(cycles)[:, None]
    out, _ = _run_stacks(model, pos_n, cyc_n, _matmul_rowstable)
    return model.norm.denorm_pos(out)


def forward_normalized(model: MlpModel, pos_n, cyc_n, want_cache=False):
    """Training-path forward (BLAS); inputs/outputs in normalized space."""
    return _run_stacks(model, pos_n, cyc_n, _matmul_blas, want_cache=want_cache)


def l1_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean absolute difference over coordinates (and batch rows, if 2D)."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {target.shape}")
    return float(np.mean(np.abs(pred - target)))


def backward(model: MlpModel, starts_n, cycles_n, targets_n):
    """Loss and exact reverse-mode gradients of the mean L1 loss.

    Inputs are already normalized; gradients come back as a flat list of
    (dW, db) matching `model.parameters()`. The subgradient at a zero
    residual is 0.
    """
    B = starts_n.shape[0]
    if B == 0:
        raise ValueError("empty batch")
    pred, caches = forward_normalized(model, starts_n, cycles_n, want_cache=True)
    resid = pred - targets_n
    loss = float(np.mean(np.abs(resid)))
    grad_out = np.sign(resid) / resid.size

    def back_stack(stack, stack_caches, grad):
        grads = []
        for lay, (x_in, z) in zip(reversed(stack), reversed(stack_caches)):
            if lay.activation == ACT_SINE:
                dz = grad * (lay.w0 * np.cos(lay.w0 * z))
            elif lay.activation == ACT_RELU:
                dz = grad * (z > 0.0)
            else:
                dz = grad
            grads.append((x_in.T @ dz, dz.sum(axis=0)))
            grad = dz @ lay.weight.T
        grads.reverse()
        return grads, grad

    dec_grads, grad_latent = back_stack(model.dec_stack, caches["dec"], grad_out)
    h = model.pos_stack[-1].fan_out
    pos_grads, _ = back_stack(model.pos_stack, caches["pos"], grad_latent[:, :h])
    cyc_grads, _ = back_stack(model.cycle_stack, caches["cyc"], grad_latent[:, h:])
    return loss, pos_grads + cyc_grads + dec_grads


def infer_batch(model: MlpModel, seeds: np.ndarray):
    """Trajectories for a seed batch: (positions (B, n, dim), valid (B, n)).

    Long models answer every file cycle independently. Hybrid models
    chain: inside map k the network is queried with the predicted
    position at the last cycle of map k-1, so errors propagate only at
    map boundaries. Seeds outside the model domain come back fully
    invalid (positions are still predicted, clamped seed not applied).
    """
    seeds = np.atleast_2d(np.asarray(seeds, dtype=np.float64))
    B = seeds.shape[0]
    n = model.n_file_cycles
    inside = np.all((seeds >= model.norm.lo) & (seeds <= model.norm.hi), axis=1)
    valid = np.repeat(inside[:, None], n, axis=1)
    positions = np.empty((B, n, model.arch.dim))
    p = model.samples_per_map if model.method == "hybrid" else n
    start = seeds
    for k in range(n // p):
        for j in range(k * p, (k + 1) * p):
            positions[:, j, :] = forward(model, start, j)
        if (k + 1) * p < n:
            start = positions[:, (k + 1) * p - 1, :]
    return positions, valid


def infer_trajectory(model: MlpModel, seed, cycles=None) -> Trajectory:
    """Trajectory for one seed; `cycles` selects/reorders file cycles."""
    seed = np.asarray(seed, dtype=np.float64)
    positions, valid = infer_batch(model, seed[None, :])
    if cycles is not None:
        idx = np.asarray(cycles, dtype=int)
        if np.any((idx < 0) | (idx >= model.n_file_cycles)):
            raise ValueError("cycle out of range")
        return Trajectory(seed=seed, positions=positions[0][idx], valid=valid[0][idx])
    return Trajectory(seed=seed, positions=positions[0], valid=valid[0])
