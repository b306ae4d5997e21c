"""Model and training configuration."""

from dataclasses import asdict, dataclass, field

from .errors import ConfigError

FUSION_MODES = ("full", "add", "mul")
ALIGNMENT_MODES = ("interpolate", "truncate")


@dataclass
class ModelConfig:
    embed_dim: int = 128          # shared retrieval dimension
    text_embed_dim: int = 64      # width of the text-provider output
    heads: int = 4
    layers_per_stage: int = 1
    stages: int = 3               # three stride-2 stages: T -> ~T/8
    dropout: float = 0.1
    max_len: int = 1024           # positional table size
    music_dim: int = 35
    motion_dim: int = 159         # 52 joints x 3 + root translation
    fusion: str = "full"
    alignment: str = "interpolate"
    standardize_features: bool = True

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ConfigError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.stages != 3:
            raise ConfigError(f"stages must be 3 so 360 frames reduce to 45, got {self.stages}")
        if self.fusion not in FUSION_MODES:
            raise ConfigError(f"fusion must be one of {FUSION_MODES}, got {self.fusion!r}")
        if self.alignment not in ALIGNMENT_MODES:
            raise ConfigError(f"alignment must be one of {ALIGNMENT_MODES}, got {self.alignment!r}")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        for name in ("embed_dim", "text_embed_dim", "heads", "layers_per_stage", "max_len",
                     "music_dim", "motion_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")

    @property
    def head_dim(self):
        return self.embed_dim // self.heads

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)


@dataclass
class TrainConfig:
    batch_size: int = 32
    epochs: int = 30
    learning_rate: float = 1e-3
    text_lr_scale: float = 0.1    # text-provider weights move slower than fresh layers
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    tau_init: float = 0.07
    seed: int = 0
    balance_keys: tuple = ("genre", "performer")
    bidirectional: bool = False   # add the dance->text term (off by default)

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.learning_rate < 0 or self.text_lr_scale < 0:
            raise ConfigError("learning rates must be nonnegative")
        if self.tau_init <= 0:
            raise ConfigError("tau_init must be positive")
        self.balance_keys = tuple(self.balance_keys)

    def to_dict(self):
        d = asdict(self)
        d["balance_keys"] = list(self.balance_keys)
        return d

    @classmethod
    def from_dict(cls, obj):
        return cls(**obj)
