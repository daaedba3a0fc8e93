"""Route generator (decoder), hierarchical encoder, and training."""

from .config import ModelConfig, ae_defaults, gen_defaults, micro_config
from .core import DecodeSession, ModelError, RouteModel, molecule_adjacency
from .training import (
    TrainSchedule,
    effective_lr,
    evaluate_nll,
    latent_walk,
    load_model,
    reconstruct_rate,
    run_epoch,
    save_model,
    train,
    union_graph,
    write_metrics_csv,
)

__all__ = [
    "DecodeSession",
    "ModelConfig",
    "ModelError",
    "RouteModel",
    "TrainSchedule",
    "ae_defaults",
    "effective_lr",
    "evaluate_nll",
    "gen_defaults",
    "latent_walk",
    "load_model",
    "micro_config",
    "molecule_adjacency",
    "reconstruct_rate",
    "run_epoch",
    "save_model",
    "train",
    "union_graph",
    "write_metrics_csv",
]
