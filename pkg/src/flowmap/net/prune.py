"""Iterative structured magnitude pruning with fine-tuning.

Hidden neurons are ranked by the L1 norm of their incoming plus
outgoing weights; the lowest-ranked are physically removed (matrix
columns/rows deleted, not masked) and the model is fine-tuned between
rounds. The decoder output layer is never pruned and no layer is ever
emptied.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MlpModel
from .train import TrainConfig, train


@dataclass(frozen=True)
class PruneConfig:
    target_fraction: float  # fraction of prunable neurons to remove
    neurons_per_round: int = 16
    finetune_epochs_per_round: int = 2

    def __post_init__(self):
        if not (0 <= self.target_fraction < 1):
            raise ValueError("target_fraction must lie in [0, 1)")
        if self.neurons_per_round < 1 or self.finetune_epochs_per_round < 0:
            raise ValueError("neurons_per_round >= 1, finetune epochs >= 0")


def _prunable_sites(model: MlpModel):
    """Yield (layer, next_layer, row_offset) for every prunable layer.

    A layer's output neurons map to columns of its own weight matrix and
    to rows [offset, offset + fan_out) of the receiving layer's matrix.
    Encoder tails feed the decoder's first layer at an offset (position
    half first, then cycle half).
    """
    pos, cyc, dec = model.stacks()
    for i, lay in enumerate(pos):
        nxt, off = (pos[i + 1], 0) if i + 1 < len(pos) else (dec[0], 0)
        yield lay, nxt, off
    for i, lay in enumerate(cyc):
        nxt, off = (cyc[i + 1], 0) if i + 1 < len(cyc) else (dec[0], pos[-1].fan_out)
        yield lay, nxt, off
    for i in range(len(dec) - 1):
        yield dec[i], dec[i + 1], 0


def prunable_neuron_count(model: MlpModel) -> int:
    return sum(lay.fan_out for lay, _, _ in _prunable_sites(model))


def _neuron_scores(model: MlpModel):
    """Score every prunable neuron: (score, site_index, unit).

    Magnitude = L1 of the neuron's incoming plus outgoing weights, each
    normalized by its connection count. Raw sums would rank whole layers
    by fan size (a first-layer neuron has 2 incoming weights, a decoder
    neuron 256) and wipe out the small-fan layers first.
    """
    entries = []
    for s, (lay, nxt, off) in enumerate(_prunable_sites(model)):
        incoming = np.abs(lay.weight).mean(axis=0)
        outgoing = np.abs(nxt.weight[off : off + lay.fan_out, :]).mean(axis=1)
        score = incoming + outgoing
        for u in range(lay.fan_out):
            entries.append((float(score[u]), s, u))
    return entries


def _remove_neurons(model: MlpModel, picks) -> None:
    """Delete the picked (site, unit) neurons in one coordinated pass."""
    sites = list(_prunable_sites(model))
    by_site: dict[int, list[int]] = {}
    for s, u in picks:
        by_site.setdefault(s, []).append(u)
    # row deletions on receiving layers, in this round's original coordinates
    rows_by_layer: dict[int, tuple] = {}
    for s, units in by_site.items():
        lay, nxt, off = sites[s]
        key = id(nxt)
        prev = rows_by_layer.get(key, (nxt, []))
        rows_by_layer[key] = (nxt, prev[1] + [off + u for u in units])
    for s, units in by_site.items():
        lay, _, _ = sites[s]
        lay.weight = np.delete(lay.weight, units, axis=1)
        lay.bias = np.delete(lay.bias, units)
    for nxt, rows in rows_by_layer.values():
        nxt.weight = np.delete(nxt.weight, rows, axis=0)


def prune(model: MlpModel, samples, val_samples, cfg: PruneConfig, finetune_cfg: TrainConfig) -> MlpModel:
    """Prune `model` in place down to the target neuron fraction; returns it.

    Each round removes up to `neurons_per_round` lowest-scoring neurons
    (never emptying a layer), then fine-tunes. Raises if the target
    cannot be reached without emptying a layer.
    """
    initial = prunable_neuron_count(model)
    target_removed = int(round(cfg.target_fraction * initial))
    removed = 0
    round_idx = 0
    while removed < target_removed:
        want = min(cfg.neurons_per_round, target_removed - removed)
        entries = sorted(_neuron_scores(model))
        sites = list(_prunable_sites(model))
        remaining = {s: sites[s][0].fan_out for s in range(len(sites))}
        picks = []
        for _, s, u in entries:
            if len(picks) == want:
                break
            if remaining[s] <= 1:
                continue
            picks.append((s, u))
            remaining[s] -= 1
        if len(picks) < want:
            raise ValueError(
                f"pruning would empty a layer: only {removed + len(picks)} of "
                f"{target_removed} neurons removable"
            )
        _remove_neurons(model, picks)
        removed += len(picks)
        if cfg.finetune_epochs_per_round > 0:
            ft = TrainConfig(
                learning_rate=finetune_cfg.learning_rate,
                beta1=finetune_cfg.beta1,
                beta2=finetune_cfg.beta2,
                eps=finetune_cfg.eps,
                batch_size=finetune_cfg.batch_size,
                epochs=cfg.finetune_epochs_per_round,
                scheduler_factor=finetune_cfg.scheduler_factor,
                scheduler_patience=finetune_cfg.scheduler_patience,
                rng_seed=finetune_cfg.rng_seed + round_idx + 1,
            )
            train(model, samples, val_samples, ft)
        round_idx += 1
    return model
