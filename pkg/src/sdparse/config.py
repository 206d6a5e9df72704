"""Model and training configuration with file/flag overrides.

Defaults are the shipped full-scale settings; desk-scale runs override
dimensions through a ``key=value`` config file (``#`` comments allowed)
or command-line flags. Keys are namespaced by section, e.g.
``model.embed_dim=16``, ``train.lr=0.01``, ``synth.sentences=500``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .gnn import NEIGHBORHOOD_MODES

ADJACENCY_SOURCES = ("predicted", "gold", "mixed")


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 100
    use_lemma: bool = False
    use_char: bool = False
    lstm_hidden: int = 400
    lstm_layers: int = 3
    lstm_dropout: float = 0.33
    mlp_dim: int = 600
    mlp_dropout: float = 0.33
    gnn_variant: str = "gcn"
    gnn_layers: int = 3
    gnn_hidden: int = 0  # 0 means "match the BiLSTM output width"
    gat_heads: int = 8
    gat_alpha: float = 0.2
    gnn_dropout: float = 0.33
    neighborhood: str = "symmetric"

    def __post_init__(self):
        for field_name in ("embed_dim", "lstm_hidden", "lstm_layers", "mlp_dim", "gnn_layers",
                           "gat_heads"):
            if getattr(self, field_name) < 1:
                raise ConfigError(f"{field_name} must be positive, got {getattr(self, field_name)}")
        for field_name in ("lstm_dropout", "mlp_dropout", "gnn_dropout"):
            if not 0.0 <= getattr(self, field_name) < 1.0:
                raise ConfigError(f"{field_name} must lie in [0, 1)")
        if self.gnn_variant not in ("gcn", "gat"):
            raise ConfigError(f"gnn_variant must be 'gcn' or 'gat', got {self.gnn_variant!r}")
        if self.neighborhood not in NEIGHBORHOOD_MODES:
            raise ConfigError(f"neighborhood must be one of {NEIGHBORHOOD_MODES}")
        if self.resolved_gnn_hidden % self.gat_heads != 0 and self.gnn_variant == "gat":
            raise ConfigError(
                f"gnn width {self.resolved_gnn_hidden} is not divisible by "
                f"{self.gat_heads} attention heads"
            )

    @property
    def resolved_gnn_hidden(self) -> int:
        return self.gnn_hidden if self.gnn_hidden else 2 * self.lstm_hidden


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.1  # weight of the edge loss; labels get 1 - lam
    lr: float = 1e-2
    beta1: float = 0.95
    beta2: float = 0.95
    eps: float = 1e-8
    decay_rate: float = 0.75
    decay_steps: int = 5000
    max_epochs: int = 100
    patience: int = 20
    batch_size: int = 32
    min_freq: int = 7
    seed: int = 1
    adjacency: str = "predicted"
    mixed_gold_prob: float = 0.5
    # Start the refined parser's encoder/scorer from the trained vanilla
    # weights (its graph layers always start fresh). The two parsers stay
    # separate models either way.
    warm_start: bool = True

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ConfigError(f"interpolation constant must lie in (0, 1), got {self.lam}")
        if self.lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        if not 0 < self.patience < self.max_epochs:
            raise ConfigError(
                f"patience must lie in (0, max_epochs), got {self.patience} "
                f"with max_epochs {self.max_epochs}"
            )
        if self.batch_size < 1:
            raise ConfigError(f"batch size must be positive, got {self.batch_size}")
        if self.min_freq < 1:
            raise ConfigError(f"min_freq must be at least 1, got {self.min_freq}")
        if self.decay_steps < 1:
            raise ConfigError(f"decay_steps must be positive, got {self.decay_steps}")
        if self.adjacency not in ADJACENCY_SOURCES:
            raise ConfigError(f"adjacency must be one of {ADJACENCY_SOURCES}")
        if not 0.0 <= self.mixed_gold_prob <= 1.0:
            raise ConfigError(f"mixed_gold_prob must lie in [0, 1], got {self.mixed_gold_prob}")


def read_config_file(path: str | Path) -> dict[str, str]:
    """Read key=value lines; later lines win; '#' starts a comment."""
    mapping: dict[str, str] = {}
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def _coerce(value: str, target_type):
    if target_type is bool:
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"cannot read {value!r} as a boolean")
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    if target_type is str:
        return value
    # remaining case: tuple of strings (label sets)
    return tuple(part.strip() for part in value.split(",") if part.strip())


def apply_overrides(cfg, mapping: dict[str, str], section: str):
    """Return a copy of ``cfg`` with ``section.field`` entries applied."""
    fields = {f.name: f for f in dataclasses.fields(cfg)}
    updates = {}
    prefix = section + "."
    for key, value in mapping.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix):]
        if name not in fields:
            raise ConfigError(f"unknown configuration key {key!r}")
        base = fields[name].type
        target = {"int": int, "float": float, "bool": bool, "str": str}.get(base, tuple)
        try:
            updates[name] = _coerce(value, target)
        except ValueError:
            raise ConfigError(f"cannot read {value!r} for {key}")
    return dataclasses.replace(cfg, **updates) if updates else cfg


def config_to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def model_config_from_dict(data: dict) -> ModelConfig:
    return ModelConfig(**data)
