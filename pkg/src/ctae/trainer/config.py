"""Training configuration."""

import hashlib
import json
from dataclasses import asdict, dataclass, field

from ..objectives import LossWeights
from ..seqmodel import ModelConfig

__all__ = ["TrainConfig", "config_hash"]


@dataclass
class TrainConfig:
    """Everything needed to reproduce one training run.

    Parameters
    ----------
    model : ModelConfig
    weights : LossWeights
    lr : float
        Constant Adam learning rate.
    epochs : int
    batch_size : int or None
        ``None`` means full batch for up to 512 training trials and
        minibatches of 32 beyond that.
    seed : int
        Seeds parameter init, the split and the minibatch/dropout stream.
    split : tuple of float
        Train and validation fractions; the remainder is the test set.
    report_every : int
        Progress callback interval in epochs.
    clip_norm : float or None
        Global gradient-norm ceiling.
    two_region_path : bool
        Use the specialised two-region fusion and shared-only mask.
    """

    model: ModelConfig
    weights: LossWeights = field(default_factory=LossWeights)
    lr: float = 1e-4
    epochs: int = 10000
    batch_size: int = None
    seed: int = 0
    split: tuple = (0.7, 0.15)
    report_every: int = 50
    clip_norm: float = 5.0
    two_region_path: bool = False

    def __post_init__(self):
        self.split = tuple(float(f) for f in self.split)
        if len(self.split) != 2 or min(self.split) <= 0 or sum(self.split) > 1 + 1e-9:
            raise ValueError("split must be (train, validation) fractions "
                             "with a sum of at most 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be positive")

    def resolved_batch_size(self, n_train):
        if self.batch_size is not None:
            return min(self.batch_size, n_train)
        return n_train if n_train <= 512 else 32

    def to_dict(self):
        out = asdict(self)
        out["model"] = self.model.to_dict()
        out["weights"] = self.weights.to_dict()
        out["split"] = list(self.split)
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        data["model"] = ModelConfig.from_dict(data["model"])
        data["weights"] = LossWeights(**data["weights"])
        return cls(**data)


def config_hash(config):
    """Short stable digest of a config (or any JSON-able mapping)."""
    data = config.to_dict() if hasattr(config, "to_dict") else config
    blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]
