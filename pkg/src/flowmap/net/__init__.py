from .model import (
    ACT_RELU,
    ACT_SINE,
    MlpArch,
    MlpModel,
    Normalization,
    arch_param_count,
    backward,
    count_params,
    forward,
    forward_normalized,
    infer_batch,
    infer_trajectory,
    init_model,
    l1_loss,
)
from .train import (
    AdamState,
    PlateauScheduler,
    TrainConfig,
    TrainingDiverged,
    adam_step,
    default_learning_rate,
    eval_loss,
    train,
)
from .prune import PruneConfig, prunable_neuron_count, prune
from .io import ModelFormatError, load_model, model_domain, save_model

__all__ = [
    "ACT_RELU",
    "ACT_SINE",
    "AdamState",
    "MlpArch",
    "MlpModel",
    "ModelFormatError",
    "Normalization",
    "PlateauScheduler",
    "PruneConfig",
    "TrainConfig",
    "TrainingDiverged",
    "adam_step",
    "arch_param_count",
    "backward",
    "count_params",
    "default_learning_rate",
    "eval_loss",
    "forward",
    "forward_normalized",
    "infer_batch",
    "infer_trajectory",
    "init_model",
    "l1_loss",
    "load_model",
    "model_domain",
    "prunable_neuron_count",
    "prune",
    "save_model",
    "train",
]
