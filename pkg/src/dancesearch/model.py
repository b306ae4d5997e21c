"""The full retrieval model: three encoders, fusion, and a temperature.

All parameters are created from a single seeded rng in a fixed order, so a
(config, vocab_size, seed) triple always yields bit-identical weights.
"""

import numpy as np

from . import ops
from .config import ModelConfig
from .encoders import TemporalEncoder, TextEncoder
from .errors import ConfigError
from .fusion import MusicMotionFusion, align, pool
from .tensor import Parameter, Tensor
from .text import TrainableTextProvider


class RetrievalModel:
    def __init__(self, config, vocab_size=None, seed=0, provider=None, tau_init=0.07):
        self.config = config
        rng = np.random.default_rng(seed)
        if provider is None:
            if vocab_size is None:
                raise ConfigError("vocab_size is required with the trainable text provider")
            provider = TrainableTextProvider(vocab_size, config.text_embed_dim, rng)
        self.text_encoder = TextEncoder(provider, config, rng)
        self.music_encoder = TemporalEncoder(config.music_dim, config, rng, "music")
        self.motion_encoder = TemporalEncoder(config.motion_dim, config, rng, "motion")
        self.fusion = MusicMotionFusion(config, rng)
        self.log_tau = Parameter(np.asarray(np.log(tau_init)), name="temperature.log_tau")

    # ------------------------------------------------------------------
    # embedding paths

    def embed_text(self, tokens, train=False, rng=None):
        """Unit-norm text embedding [d]."""
        return self.text_encoder(tokens, train=train, rng=rng)

    def embed_dance(self, music_features, motion_frames, train=False, rng=None):
        """Unit-norm dance embedding [d] from a (features, motion) pair."""
        ha = self.music_encoder(music_features, train=train, rng=rng)
        hm = self.motion_encoder(motion_frames, train=train, rng=rng)
        ha, hm = align(ha, hm, mode=self.config.alignment)
        return pool(self.fusion(ha, hm))

    def temperature_node(self):
        """tau as a differentiable scalar, tau = exp(log tau) > 0 always."""
        return ops.exp(ops.identity(self.log_tau))

    @property
    def temperature(self):
        return float(np.exp(self.log_tau.value.data))

    # ------------------------------------------------------------------
    # parameter bookkeeping

    def named_parameters(self):
        """name -> Parameter in a stable construction order."""
        params = (self.text_encoder.parameters()
                  + self.music_encoder.parameters()
                  + self.motion_encoder.parameters()
                  + self.fusion.parameters()
                  + [self.log_tau])
        out = {}
        for p in params:
            if p.name in out:
                raise ConfigError(f"duplicate parameter name {p.name!r}")
            out[p.name] = p
        return out

    def text_provider_parameters(self):
        """The slow-learning-rate group (pretrained-tower stand-in)."""
        return {p.name for p in self.text_encoder.provider.parameters()}

    def zero_grad(self):
        for p in self.named_parameters().values():
            p.zero_grad()
