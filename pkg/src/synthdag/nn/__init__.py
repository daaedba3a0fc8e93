"""Dense-tensor numerics with reverse-mode differentiation."""

from . import autodiff
from .autodiff import (
    NumericsError,
    Tensor,
    backward,
    grad_check,
    no_grad,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .layers import (
    EDGE_TYPES,
    MaskError,
    dropout,
    gated_readout,
    ggnn_propagate,
    gru_cell,
    init_ggnn,
    init_gru,
    init_linear,
    init_mlp,
    init_readout,
    linear,
    masked_log_prob,
    masked_probs,
    masked_softmax_ce,
    mlp_relu_1h,
    sample_masked,
    uniform_init,
)
from .mmd import mmd_imq
from .optim import ParamStore, adam_step

__all__ = [
    "EDGE_TYPES",
    "MaskError",
    "NumericsError",
    "ParamStore",
    "Tensor",
    "adam_step",
    "autodiff",
    "backward",
    "dropout",
    "gated_readout",
    "ggnn_propagate",
    "grad_check",
    "gru_cell",
    "init_ggnn",
    "init_gru",
    "init_linear",
    "init_mlp",
    "init_readout",
    "linear",
    "load_checkpoint",
    "masked_log_prob",
    "masked_probs",
    "masked_softmax_ce",
    "mlp_relu_1h",
    "mmd_imq",
    "no_grad",
    "sample_masked",
    "save_checkpoint",
    "uniform_init",
]
