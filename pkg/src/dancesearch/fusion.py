"""Fusing music and motion streams into one dance embedding.

The two encoder outputs first share a time axis (the longer stream is
linearly resampled onto the shorter one's frames), then per time step the
full blender projects the concatenation of an additive block and a
Hadamard block through a learned matrix and a GELU. Temporal average
pooling plus unit normalization yields the dance embedding. The "add" and
"mul" ablation variants keep only one block (with a correspondingly
narrower projection), so their checkpoints are not shape-compatible with
"full".
"""

import numpy as np

from . import ops
from .errors import ShapeError
from .layers import glorot
from .tensor import Parameter


def align(music_frames, motion_frames, mode="interpolate"):
    """Bring both streams to T = min(T_music, T_motion) frames.

    "interpolate" resamples the longer stream (preserving its full
    duration); "truncate" keeps its first T frames. Equal-length inputs
    pass through unchanged.
    """
    t = min(music_frames.shape[0], motion_frames.shape[0])
    if mode == "truncate":
        def shorten(x):
            return x if x.shape[0] == t else ops.slice_rows(x, 0, t)
    else:
        def shorten(x):
            return ops.interp_rows(x, t)
    return shorten(music_frames), shorten(motion_frames)


class MusicMotionFusion:
    def __init__(self, config, rng, name="fusion"):
        d = config.embed_dim
        self.mode = config.fusion
        in_dim = 2 * d if self.mode == "full" else d
        self.weight = Parameter(glorot(rng, in_dim, d), name=f"{name}.weight")

    def __call__(self, music_frames, motion_frames):
        if music_frames.shape != motion_frames.shape:
            raise ShapeError(
                f"fusion needs aligned streams, got {music_frames.shape} vs {motion_frames.shape}")
        if self.mode == "add":
            block = ops.add(music_frames, motion_frames)
        elif self.mode == "mul":
            block = ops.hadamard(music_frames, motion_frames)
        else:
            block = ops.concat_cols([
                ops.add(music_frames, motion_frames),
                ops.hadamard(music_frames, motion_frames),
            ])
        return ops.gelu(ops.matmul(block, self.weight))

    def parameters(self):
        return [self.weight]


def pool(fused):
    """Temporal average pooling followed by unit normalization."""
    return ops.l2_normalize(ops.mean_rows(fused))
