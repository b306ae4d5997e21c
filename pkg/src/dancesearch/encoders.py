"""Temporal encoders for music and motion, and the adapted text encoder.

Music and motion share one architecture with separate weights: an input
projection into the shared dimension, learned positional embeddings, then
three rounds of (transformer block -> stride-2 convolution), so a standard
360-frame motion clip comes out at 45 frames and a 517-frame feature track
at 65.

The text side is a provider (pretrained table or trainable fallback)
followed by a two-layer GELU adapter; its output is unit-normalized.
"""

import numpy as np

from . import ops
from .errors import ConfigError
from .layers import DownsampleConv, Linear, TransformerBlock
from .tensor import Parameter, Tensor


class TemporalEncoder:
    def __init__(self, in_dim, config, rng, name):
        d = config.embed_dim
        self.config = config
        self.input_proj = Linear(in_dim, d, rng, f"{name}.proj")
        self.positions = Parameter(rng.normal(0.0, 0.02, size=(config.max_len, d)),
                                   name=f"{name}.positions")
        self.stages = []
        for s in range(config.stages):
            blocks = [
                TransformerBlock(d, config.heads, config.dropout, rng,
                                 f"{name}.stage{s}.block{b}")
                for b in range(config.layers_per_stage)
            ]
            self.stages.append((blocks, DownsampleConv(d, rng, f"{name}.stage{s}.down")))
        self.name = name

    def __call__(self, frames, train=False, rng=None):
        if not isinstance(frames, Tensor):
            frames = Tensor(frames)
        t = frames.shape[0]
        if t > self.config.max_len:
            raise ConfigError(
                f"{self.name}: sequence of {t} frames exceeds max_len {self.config.max_len}")
        h = self.input_proj(frames)
        h = ops.add(h, ops.embedding_rows(self.positions, np.arange(t)))
        for blocks, down in self.stages:
            for block in blocks:
                h = block(h, train=train, rng=rng)
            h = down(h)
        return h

    def output_length(self, t):
        for _ in range(self.config.stages):
            t = ops.conv_length(t)
        return t

    def parameters(self):
        params = self.input_proj.parameters() + [self.positions]
        for blocks, down in self.stages:
            for block in blocks:
                params += block.parameters()
            params += down.parameters()
        return params


class TextEncoder:
    """provider -> linear -> GELU -> dropout -> linear -> unit norm."""

    def __init__(self, provider, config, rng, name="text"):
        d = config.embed_dim
        self.provider = provider
        self.adapter_in = Linear(provider.dim, d, rng, f"{name}.adapter_in")
        self.adapter_out = Linear(d, d, rng, f"{name}.adapter_out")
        self.dropout = config.dropout

    def __call__(self, tokens, train=False, rng=None):
        h = self.provider.embed(tokens)
        h = ops.gelu(self.adapter_in(h))
        h = ops.dropout(h, self.dropout, rng=rng, training=train)
        h = self.adapter_out(h)
        return ops.l2_normalize(ops.flatten_row(h))

    def adapter_parameters(self):
        return self.adapter_in.parameters() + self.adapter_out.parameters()

    def parameters(self):
        return self.provider.parameters() + self.adapter_parameters()
