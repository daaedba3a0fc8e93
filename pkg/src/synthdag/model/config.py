"""Model hyperparameter bundles."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from ..dag import DEFAULT_MAX_STEPS

MODES = ("gen", "ae")


@dataclass(frozen=True)
class ModelConfig:
    """Architecture settings for both model variants.

    ``gen`` fixes the latent at zero and is used for fine-tuning;
    ``ae`` couples the decoder to the hierarchical encoder.
    Abstract-action embeddings share ``embed_dim`` with the molecule
    embeddings by construction.
    """

    mode: str = "gen"
    ggnn_steps: int = 5
    node_dim: int = 80
    embed_dim: int = 160
    context_layers: int = 3
    context_dim: int = 512
    action_hidden: int = 28
    latent_dim: int = 25
    encoder_steps: int = 7
    dropout: float = 0.1
    max_steps: int = DEFAULT_MAX_STEPS

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        for name in ("ggnn_steps", "encoder_steps"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        for name in ("node_dim", "embed_dim", "context_layers", "context_dim",
                     "action_hidden", "latent_dim", "max_steps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(doc: dict) -> "ModelConfig":
        return ModelConfig(**doc)


def ae_defaults(**overrides) -> ModelConfig:
    """Autoencoder defaults: 4 propagation steps, 50-dim embeddings,
    3x200 context stack, 28-hidden action nets, 25-dim latent."""
    base = dict(mode="ae", ggnn_steps=4, node_dim=50, embed_dim=50,
                context_layers=3, context_dim=200, action_hidden=28,
                latent_dim=25, encoder_steps=7, dropout=0.1)
    base.update(overrides)
    return ModelConfig(**base)


def gen_defaults(**overrides) -> ModelConfig:
    """Generator defaults: 5 propagation steps, 80-dim nodes, 160-dim
    molecule embeddings, 3x512 context stack."""
    base = dict(mode="gen", ggnn_steps=5, node_dim=80, embed_dim=160,
                context_layers=3, context_dim=512, action_hidden=28,
                latent_dim=25, encoder_steps=7, dropout=0.1)
    base.update(overrides)
    return ModelConfig(**base)


def micro_config(mode: str = "gen", **overrides) -> ModelConfig:
    """Tiny dims (<= 8) for gradient checks and fast tests."""
    base = dict(mode=mode, ggnn_steps=2, node_dim=6, embed_dim=8,
                context_layers=2, context_dim=8, action_hidden=7,
                latent_dim=4, encoder_steps=3, dropout=0.0)
    base.update(overrides)
    return ModelConfig(**base)
