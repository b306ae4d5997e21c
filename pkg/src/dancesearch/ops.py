"""Differentiable operations over :class:`~dancesearch.tensor.Tensor`.

Every function computes its forward result with numpy and, when a Tape is
active, records a closure that maps the output gradient to input gradients.
Backward formulas are the standard ones; each is exercised against central
finite differences in the test suite.

Inputs may be ``Tensor`` or ``Parameter``; outputs are always new ``Tensor``
objects (ops never alias their inputs, except where documented).
"""

import numpy as np
from scipy.special import erf

from .errors import ContractError, DegenerateInputError, ShapeError
from .tensor import Tensor, record, value_of

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _data(x):
    return value_of(x).data


def matmul(a, b):
    """Matrix product of a [m x k] and b [k x n]."""
    ad, bd = _data(a), _data(b)
    if ad.ndim != 2 or bd.ndim != 2 or ad.shape[1] != bd.shape[0]:
        raise ShapeError(f"matmul: incompatible shapes {ad.shape} x {bd.shape}")
    out = Tensor(ad @ bd)

    def backward_fn(g):
        return g @ bd.T, ad.T @ g

    return record((a, b), out, backward_fn)


def identity(x):
    """Pass-through node; routes gradients when a Parameter is used as-is."""
    out = Tensor(_data(x))

    def backward_fn(g):
        return (g,)

    return record((x,), out, backward_fn)


def transpose(x):
    xd = _data(x)
    if xd.ndim != 2:
        raise ShapeError(f"transpose: expected 2-D, got shape {xd.shape}")
    out = Tensor(xd.T.copy())

    def backward_fn(g):
        return (g.T,)

    return record((x,), out, backward_fn)


def add(a, b):
    """Element-wise sum; b may also be a 1-D [d] vector added to every row of a [T x d]."""
    ad, bd = _data(a), _data(b)
    if ad.shape == bd.shape:
        broadcast = False
    elif ad.ndim == 2 and bd.ndim == 1 and ad.shape[1] == bd.shape[0]:
        broadcast = True
    else:
        raise ShapeError(f"add: incompatible shapes {ad.shape} + {bd.shape}")
    out = Tensor(ad + bd)

    def backward_fn(g):
        return g, (g.sum(axis=0) if broadcast else g)

    return record((a, b), out, backward_fn)


def sub(a, b):
    ad, bd = _data(a), _data(b)
    if ad.shape != bd.shape:
        raise ShapeError(f"sub: incompatible shapes {ad.shape} - {bd.shape}")
    out = Tensor(ad - bd)

    def backward_fn(g):
        return g, -g

    return record((a, b), out, backward_fn)


def hadamard(a, b):
    """Element-wise product; b may also be a scalar (shape ()) node."""
    ad, bd = _data(a), _data(b)
    if ad.shape == bd.shape:
        scalar = False
    elif bd.shape == ():
        scalar = True
    else:
        raise ShapeError(f"hadamard: incompatible shapes {ad.shape} * {bd.shape}")
    out = Tensor(ad * bd)

    def backward_fn(g):
        gb = (g * ad).sum() if scalar else g * ad
        return g * bd, gb

    return record((a, b), out, backward_fn)


def scale(x, c):
    """Multiply by a python float constant (no gradient for c)."""
    xd = _data(x)
    c = float(c)
    out = Tensor(xd * c)

    def backward_fn(g):
        return (g * c,)

    return record((x,), out, backward_fn)


def exp(x):
    xd = _data(x)
    out = Tensor(np.exp(xd))

    def backward_fn(g):
        return (g * out.data,)

    return record((x,), out, backward_fn)


def reciprocal(x):
    xd = _data(x)
    out = Tensor(1.0 / xd)

    def backward_fn(g):
        return (-g * out.data * out.data,)

    return record((x,), out, backward_fn)


def relu(x):
    xd = _data(x)
    out = Tensor(np.maximum(xd, 0.0))

    def backward_fn(g):
        return (g * (xd > 0.0),)

    return record((x,), out, backward_fn)


def gelu(x):
    """Exact Gaussian-error-linear unit: x * Phi(x)."""
    xd = _data(x)
    cdf = 0.5 * (1.0 + erf(xd * _INV_SQRT2))
    out = Tensor(xd * cdf)

    def backward_fn(g):
        pdf = np.exp(-0.5 * xd * xd) * _INV_SQRT_2PI
        return (g * (cdf + xd * pdf),)

    return record((x,), out, backward_fn)


def softmax_rows(x):
    """Row-wise softmax with per-row max subtraction for stability."""
    xd = _data(x)
    if xd.ndim != 2:
        raise ShapeError(f"softmax_rows: expected 2-D, got shape {xd.shape}")
    shifted = xd - xd.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    out = Tensor(e / e.sum(axis=1, keepdims=True))

    def backward_fn(g):
        y = out.data
        return ((g - (g * y).sum(axis=1, keepdims=True)) * y,)

    return record((x,), out, backward_fn)


def logsumexp_rows(x):
    """Row-wise log(sum(exp(x))), stabilized; [m x n] -> [m]."""
    xd = _data(x)
    if xd.ndim != 2:
        raise ShapeError(f"logsumexp_rows: expected 2-D, got shape {xd.shape}")
    m = xd.max(axis=1, keepdims=True)
    e = np.exp(xd - m)
    s = e.sum(axis=1, keepdims=True)
    out = Tensor((m + np.log(s)).reshape(-1))

    def backward_fn(g):
        return (g[:, None] * (e / s),)

    return record((x,), out, backward_fn)


def gather_diag(x):
    """Diagonal of a square matrix as a vector."""
    xd = _data(x)
    if xd.ndim != 2 or xd.shape[0] != xd.shape[1]:
        raise ShapeError(f"gather_diag: expected square matrix, got shape {xd.shape}")
    out = Tensor(np.diagonal(xd).copy())

    def backward_fn(g):
        gx = np.zeros_like(xd)
        np.fill_diagonal(gx, g)
        return (gx,)

    return record((x,), out, backward_fn)


def layer_norm(x, gain, bias, eps=1e-5):
    """Standardize each row of x [T x d] to zero mean / unit variance, then affine."""
    xd, gd, bd = _data(x), _data(gain), _data(bias)
    if xd.ndim != 2:
        raise ShapeError(f"layer_norm: expected 2-D input, got shape {xd.shape}")
    d = xd.shape[1]
    if gd.shape != (d,) or bd.shape != (d,):
        raise ShapeError(f"layer_norm: gain {gd.shape} / bias {bd.shape} must be ({d},)")
    if eps <= 0:
        raise ContractError("layer_norm: eps must be positive")
    mu = xd.mean(axis=1, keepdims=True)
    var = xd.var(axis=1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (xd - mu) * inv_std
    out = Tensor(xhat * gd + bd)

    def backward_fn(g):
        gxhat = g * gd
        gx = inv_std * (
            gxhat
            - gxhat.mean(axis=1, keepdims=True)
            - xhat * (gxhat * xhat).mean(axis=1, keepdims=True)
        )
        return gx, (g * xhat).sum(axis=0), g.sum(axis=0)

    return record((x, gain, bias), out, backward_fn)


def conv_length(t, kernel=3, stride=2, padding=1):
    """Output length of the temporal downsampling convolution."""
    return (t + 2 * padding - kernel) // stride + 1


def conv1d_down(x, kernel, stride=2, padding=1):
    """Temporal convolution of x [T x d_in] with kernel [3 x d_in x d_out].

    Zero padding of 1 frame on each side, stride 2: halves the sequence
    length (T -> floor((T - 1) / 2) + 1) while preserving temporal order.
    """
    xd, kd = _data(x), _data(kernel)
    if xd.ndim != 2 or kd.ndim != 3:
        raise ShapeError(f"conv1d_down: expected [T x d_in] and [k x d_in x d_out], got {xd.shape}, {kd.shape}")
    ksize = kd.shape[0]
    if kd.shape[1] != xd.shape[1]:
        raise ShapeError(f"conv1d_down: input width {xd.shape} does not match kernel {kd.shape}")
    t_in = xd.shape[0]
    t_out = conv_length(t_in, ksize, stride, padding)
    xp = np.zeros((t_in + 2 * padding, xd.shape[1]))
    xp[padding:padding + t_in] = xd
    out_data = np.zeros((t_out, kd.shape[2]))
    last = stride * (t_out - 1) + 1
    for k in range(ksize):
        out_data += xp[k:k + last:stride] @ kd[k]
    out = Tensor(out_data)

    def backward_fn(g):
        gk = np.zeros_like(kd)
        gxp = np.zeros_like(xp)
        for k in range(ksize):
            taps = xp[k:k + last:stride]
            gk[k] = taps.T @ g
            gxp[k:k + last:stride] += g @ kd[k].T
        return gxp[padding:padding + t_in], gk

    return record((x, kernel), out, backward_fn)


def l2_normalize(x):
    """Scale a 1-D vector to unit Euclidean norm; direction is preserved."""
    xd = _data(x)
    if xd.ndim != 1:
        raise ShapeError(f"l2_normalize: expected 1-D vector, got shape {xd.shape}")
    norm = float(np.linalg.norm(xd))
    if norm == 0.0:
        raise DegenerateInputError("l2_normalize: zero vector has no direction")
    y = xd / norm
    out = Tensor(y)

    def backward_fn(g):
        return ((g - y * np.dot(y, g)) / norm,)

    return record((x,), out, backward_fn)


def mean_rows(x):
    """Mean over the time axis: [T x d] -> [d]."""
    xd = _data(x)
    if xd.ndim != 2:
        raise ShapeError(f"mean_rows: expected 2-D, got shape {xd.shape}")
    t = xd.shape[0]
    out = Tensor(xd.mean(axis=0))

    def backward_fn(g):
        return (np.tile(g / t, (t, 1)),)

    return record((x,), out, backward_fn)


def sum_all(x):
    """Sum of all entries as a scalar (shape ()) tensor."""
    xd = _data(x)
    out = Tensor(np.asarray(xd.sum()))

    def backward_fn(g):
        return (np.full_like(xd, float(g)),)

    return record((x,), out, backward_fn)


def stack_rows(vectors):
    """Stack B vectors of shape [d] into a [B x d] matrix."""
    datas = [_data(v) for v in vectors]
    d = datas[0].shape
    if any(v.ndim != 1 or v.shape != d for v in datas):
        raise ShapeError(f"stack_rows: all vectors must share one 1-D shape, got {[v.shape for v in datas]}")
    out = Tensor(np.stack(datas, axis=0))

    def backward_fn(g):
        return tuple(g[i] for i in range(len(datas)))

    return record(tuple(vectors), out, backward_fn)


def concat_cols(parts):
    """Concatenate [T x d_i] blocks along columns."""
    datas = [_data(p) for p in parts]
    t = datas[0].shape[0]
    if any(p.ndim != 2 or p.shape[0] != t for p in datas):
        raise ShapeError(f"concat_cols: row counts must agree, got {[p.shape for p in datas]}")
    widths = [p.shape[1] for p in datas]
    out = Tensor(np.concatenate(datas, axis=1))
    offsets = np.cumsum([0] + widths)

    def backward_fn(g):
        return tuple(g[:, offsets[i]:offsets[i + 1]] for i in range(len(datas)))

    return record(tuple(parts), out, backward_fn)


def slice_cols(x, start, stop):
    xd = _data(x)
    if xd.ndim != 2 or not (0 <= start < stop <= xd.shape[1]):
        raise ShapeError(f"slice_cols: invalid slice [{start}:{stop}] of shape {xd.shape}")
    out = Tensor(xd[:, start:stop].copy())

    def backward_fn(g):
        gx = np.zeros_like(xd)
        gx[:, start:stop] = g
        return (gx,)

    return record((x,), out, backward_fn)


def slice_rows(x, start, stop):
    xd = _data(x)
    if xd.ndim != 2 or not (0 <= start < stop <= xd.shape[0]):
        raise ShapeError(f"slice_rows: invalid slice [{start}:{stop}] of shape {xd.shape}")
    out = Tensor(xd[start:stop].copy())

    def backward_fn(g):
        gx = np.zeros_like(xd)
        gx[start:stop] = g
        return (gx,)

    return record((x,), out, backward_fn)


def embedding_rows(table, ids):
    """Look up rows of an embedding table: ids [L] -> [L x d]."""
    td = _data(table)
    idx = np.asarray(ids, dtype=np.int64)
    if td.ndim != 2 or idx.ndim != 1:
        raise ShapeError(f"embedding_rows: expected table [V x d] and 1-D ids, got {td.shape}, {idx.shape}")
    if idx.size == 0:
        raise ContractError("embedding_rows: empty id sequence")
    if idx.min() < 0 or idx.max() >= td.shape[0]:
        raise ContractError(f"embedding_rows: id out of range for table of {td.shape[0]} rows")
    out = Tensor(td[idx].copy())

    def backward_fn(g):
        gt = np.zeros_like(td)
        np.add.at(gt, idx, g)
        return (gt,)

    return record((table,), out, backward_fn)


def dropout(x, rate, rng=None, training=False):
    """Randomly zero entries with probability ``rate``, scaling survivors by 1/(1-rate).

    Identity in eval mode (or at rate 0). The mask is drawn from ``rng``,
    so forward passes are reproducible given the dropout seed.
    """
    if not (0.0 <= rate < 1.0):
        raise ContractError(f"dropout: rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x if isinstance(x, Tensor) else identity(x)
    if rng is None:
        raise ContractError("dropout: training mode needs an rng")
    xd = _data(x)
    keep = 1.0 - rate
    mask = (rng.random(xd.shape) >= rate) / keep
    out = Tensor(xd * mask)

    def backward_fn(g):
        return (g * mask,)

    return record((x,), out, backward_fn)


def row_vector(x):
    """View a [d] vector as a [1 x d] matrix."""
    xd = _data(x)
    if xd.ndim != 1:
        raise ShapeError(f"row_vector: expected 1-D, got shape {xd.shape}")
    out = Tensor(xd.reshape(1, -1).copy())

    def backward_fn(g):
        return (g.reshape(-1),)

    return record((x,), out, backward_fn)


def flatten_row(x):
    """View a [1 x d] matrix as a [d] vector."""
    xd = _data(x)
    if xd.ndim != 2 or xd.shape[0] != 1:
        raise ShapeError(f"flatten_row: expected [1 x d], got shape {xd.shape}")
    out = Tensor(xd.reshape(-1).copy())

    def backward_fn(g):
        return (g.reshape(1, -1),)

    return record((x,), out, backward_fn)


def interp_rows(x, t_out):
    """Linearly resample x [T x d] onto ``t_out`` uniformly spaced time steps.

    Returns x itself when the length already matches (bit-exact no-op).
    """
    xd = _data(x)
    if xd.ndim != 2:
        raise ShapeError(f"interp_rows: expected 2-D, got shape {xd.shape}")
    t_in = xd.shape[0]
    if t_out < 1:
        raise ContractError(f"interp_rows: target length must be >= 1, got {t_out}")
    if t_in == t_out:
        return x if isinstance(x, Tensor) else identity(x)
    pos = np.linspace(0.0, t_in - 1.0, t_out)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, t_in - 1)
    w = (pos - lo)[:, None]
    out = Tensor((1.0 - w) * xd[lo] + w * xd[hi])

    def backward_fn(g):
        gx = np.zeros_like(xd)
        np.add.at(gx, lo, (1.0 - w) * g)
        np.add.at(gx, hi, w * g)
        return (gx,)

    return record((x,), out, backward_fn)
