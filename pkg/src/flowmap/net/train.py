"""Adam optimizer, plateau LR scheduling, and the training loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ACT_SINE, MlpModel, backward, forward_normalized


def default_learning_rate(activation: str) -> float:
    """5e-4 for sine networks, 1e-4 for ReLU."""
    return 5e-4 if activation == ACT_SINE else 1e-4


@dataclass
class TrainConfig:
    learning_rate: float | None = None  # None = activation default
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-6
    batch_size: int = 1024
    epochs: int = 200
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    val_fraction: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("betas must lie in [0, 1)")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size >= 1 and epochs >= 0 required")


class TrainingDiverged(RuntimeError):
    pass


class AdamState:
    """First/second moment estimates per parameter tensor."""

    def __init__(self, model: MlpModel, cfg: TrainConfig):
        self.beta1, self.beta2, self.eps = cfg.beta1, cfg.beta2, cfg.eps
        self.t = 0
        self.m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in model.parameters()]
        self.v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in model.parameters()]


def adam_step(model: MlpModel, state: AdamState, grads, lr: float) -> None:
    """One bias-corrected Adam update, in place."""
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(model.parameters(), grads, state.m, state.v):
        for param, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            param -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


class PlateauScheduler:
    """Halve the learning rate after `patience` epochs without val improvement."""

    def __init__(self, lr: float, factor: float = 0.5, patience: int = 5):
        self.lr = lr
        self.factor = factor
        self.patience = patience
        self.best = np.inf
        self.bad_epochs = 0

    def step(self, val_loss: float) -> float:
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
        else:
            self.bad_epochs += 1
            if self.bad_epochs >= self.patience:
                self.lr *= self.factor
                self.bad_epochs = 0
        return self.lr


def _prepare(model: MlpModel, samples):
    """Filter invalid samples and normalize; returns (pos_n, cyc_n, tgt_n)."""
    starts, cycles, targets, valid = samples
    keep = np.asarray(valid, dtype=bool)
    starts = np.asarray(starts, dtype=np.float64)[keep]
    cycles = np.asarray(cycles)[keep]
    targets = np.asarray(targets, dtype=np.float64)[keep]
    if starts.shape[0] == 0:
        raise ValueError("no valid samples")
    return (
        model.norm.norm_pos(starts),
        model.norm.norm_cycle(cycles)[:, None],
        model.norm.norm_pos(targets),
    )


def eval_loss(model: MlpModel, samples, chunk: int = 8192) -> float:
    """Mean normalized L1 loss over a sample set (no gradient)."""
    pos_n, cyc_n, tgt_n = _prepare(model, samples)
    total = 0.0
    for i in range(0, pos_n.shape[0], chunk):
        pred, _ = forward_normalized(model, pos_n[i : i + chunk], cyc_n[i : i + chunk])
        total += np.abs(pred - tgt_n[i : i + chunk]).sum()
    return float(total / tgt_n.size)


def train(model: MlpModel, samples, val_samples, cfg: TrainConfig):
    """Train in place; returns per-epoch history rows.

    `samples`/`val_samples` are (starts, cycles, targets, valid) tuples
    as produced by `flow_maps.to_training_samples`. Epochs iterate
    rng-seeded shuffled mini-batches; the plateau scheduler watches the
    validation loss. Raises TrainingDiverged on NaN.
    """
    pos_n, cyc_n, tgt_n = _prepare(model, samples)
    n_samples = pos_n.shape[0]
    lr = cfg.learning_rate if cfg.learning_rate is not None else default_learning_rate(model.arch.activation)
    state = AdamState(model, cfg)
    sched = PlateauScheduler(lr, cfg.scheduler_factor, cfg.scheduler_patience)
    rng = np.random.default_rng(cfg.rng_seed)
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_samples)
        loss_sum = 0.0
        for i in range(0, n_samples, cfg.batch_size):
            idx = order[i : i + cfg.batch_size]
            loss, grads = backward(model, pos_n[idx], cyc_n[idx], tgt_n[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(
                    f"non-finite loss {loss} at epoch {epoch}, batch {i // cfg.batch_size} (lr={sched.lr:g})"
                )
            adam_step(model, state, grads, sched.lr)
            loss_sum += loss * idx.size
        train_loss = loss_sum / n_samples
        val_loss = eval_loss(model, val_samples) if val_samples is not None else train_loss
        lr_used = sched.lr
        sched.step(val_loss)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "lr": lr_used})
    return history
