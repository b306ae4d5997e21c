"""Transformer building blocks on the tape-based tensor core.

Blocks are pre-norm residual: layer norm -> multi-head attention ->
residual, then layer norm -> feed-forward (x4 expansion, GELU) -> residual,
with dropout on each sublayer output while training. Temporal downsampling
is a kernel-3 stride-2 convolution between blocks.
"""

import numpy as np

from . import ops
from .tensor import Parameter


def glorot(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape or (fan_in, fan_out))


class Linear:
    def __init__(self, in_dim, out_dim, rng, name, bias=True):
        self.weight = Parameter(glorot(rng, in_dim, out_dim), name=f"{name}.weight")
        self.bias = Parameter(np.zeros(out_dim), name=f"{name}.bias") if bias else None

    def __call__(self, x):
        y = ops.matmul(x, self.weight)
        return ops.add(y, self.bias) if self.bias is not None else y

    def parameters(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])


class LayerNorm:
    def __init__(self, dim, name, eps=1e-5):
        self.gain = Parameter(np.ones(dim), name=f"{name}.gain")
        self.bias = Parameter(np.zeros(dim), name=f"{name}.bias")
        self.eps = eps

    def __call__(self, x):
        return ops.layer_norm(x, self.gain, self.bias, eps=self.eps)

    def parameters(self):
        return [self.gain, self.bias]


def scaled_dot_attention(query, key, value, return_weights=False):
    """softmax(Q Kt / sqrt(d_k)) V for [T x d_k] projections."""
    d_k = query.shape[1]
    scores = ops.scale(ops.matmul(query, ops.transpose(key)), 1.0 / np.sqrt(d_k))
    weights = ops.softmax_rows(scores)
    out = ops.matmul(weights, value)
    return (out, weights) if return_weights else out


class MultiHeadAttention:
    def __init__(self, dim, heads, rng, name):
        self.heads = heads
        self.head_dim = dim // heads
        self.wq = Linear(dim, dim, rng, f"{name}.wq")
        self.wk = Linear(dim, dim, rng, f"{name}.wk")
        self.wv = Linear(dim, dim, rng, f"{name}.wv")
        self.wo = Linear(dim, dim, rng, f"{name}.wo")

    def __call__(self, x):
        q, k, v = self.wq(x), self.wk(x), self.wv(x)
        outputs = []
        for h in range(self.heads):
            lo, hi = h * self.head_dim, (h + 1) * self.head_dim
            outputs.append(scaled_dot_attention(
                ops.slice_cols(q, lo, hi), ops.slice_cols(k, lo, hi), ops.slice_cols(v, lo, hi)))
        merged = outputs[0] if len(outputs) == 1 else ops.concat_cols(outputs)
        return self.wo(merged)

    def parameters(self):
        return [p for lin in (self.wq, self.wk, self.wv, self.wo) for p in lin.parameters()]


class FeedForward:
    def __init__(self, dim, rng, name, expansion=4):
        self.inner = Linear(dim, expansion * dim, rng, f"{name}.inner")
        self.outer = Linear(expansion * dim, dim, rng, f"{name}.outer")

    def __call__(self, x):
        return self.outer(ops.gelu(self.inner(x)))

    def parameters(self):
        return self.inner.parameters() + self.outer.parameters()


class TransformerBlock:
    def __init__(self, dim, heads, dropout, rng, name):
        self.norm_attn = LayerNorm(dim, f"{name}.norm_attn")
        self.attn = MultiHeadAttention(dim, heads, rng, f"{name}.attn")
        self.norm_ffn = LayerNorm(dim, f"{name}.norm_ffn")
        self.ffn = FeedForward(dim, rng, f"{name}.ffn")
        self.dropout = dropout

    def __call__(self, x, train=False, rng=None):
        a = ops.dropout(self.attn(self.norm_attn(x)), self.dropout, rng=rng, training=train)
        x = ops.add(x, a)
        f = ops.dropout(self.ffn(self.norm_ffn(x)), self.dropout, rng=rng, training=train)
        return ops.add(x, f)

    def parameters(self):
        return (self.norm_attn.parameters() + self.attn.parameters()
                + self.norm_ffn.parameters() + self.ffn.parameters())


class DownsampleConv:
    def __init__(self, dim, rng, name):
        self.kernel = Parameter(glorot(rng, 3 * dim, dim, shape=(3, dim, dim)),
                                name=f"{name}.kernel")

    def __call__(self, x):
        return ops.conv1d_down(x, self.kernel)

    def parameters(self):
        return [self.kernel]
