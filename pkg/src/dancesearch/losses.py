"""Temperature-scaled contrastive loss over in-batch negatives.

Text-to-dance direction only: each text row's matched dance is the positive
and every other dance in the batch is a negative. The per-row term is
computed as logsumexp(logits) - positive_logit, which is the log-softmax
form stabilized by per-row max subtraction. The symmetric dance-to-text
term exists behind a flag for experimentation and is off by default.
"""

import numpy as np

from . import ops
from .errors import ContractError
from .tensor import Parameter, Tensor, value_of

_NORM_TOL = 1e-6


def _check_unit_rows(mat, name):
    norms = np.linalg.norm(mat, axis=1)
    worst = np.abs(norms - 1.0).max()
    if worst > _NORM_TOL:
        raise ContractError(f"{name} rows must be unit-norm; worst deviation {worst:.2e}")


def info_nce(text_embeddings, dance_embeddings, temperature, bidirectional=False):
    """Mean contrastive loss for matched [B x d] unit-row matrices.

    ``temperature`` is either a positive float or a scalar tensor node
    (e.g. exp of a learnable log-temperature) so gradients can reach it.
    """
    zt, zd = value_of(text_embeddings), value_of(dance_embeddings)
    if zt.shape != zd.shape or zt.data.ndim != 2:
        raise ContractError(f"embedding matrices must share a [B x d] shape, got {zt.shape} vs {zd.shape}")
    _check_unit_rows(zt.data, "text embeddings")
    _check_unit_rows(zd.data, "dance embeddings")
    b = zt.shape[0]

    similarities = ops.matmul(text_embeddings, ops.transpose(dance_embeddings))
    if isinstance(temperature, (Tensor, Parameter)):
        tau = float(value_of(temperature).data)
        if tau <= 0.0:
            raise ContractError(f"temperature must be positive, got {tau}")
        logits = ops.hadamard(similarities, ops.reciprocal(temperature))
    else:
        tau = float(temperature)
        if tau <= 0.0:
            raise ContractError(f"temperature must be positive, got {tau}")
        logits = ops.scale(similarities, 1.0 / tau)

    loss = _mean_cross_entropy_diag(logits, b)
    if bidirectional:
        reverse = _mean_cross_entropy_diag(ops.transpose(logits), b)
        loss = ops.scale(ops.add(loss, reverse), 0.5)
    return loss


def _mean_cross_entropy_diag(logits, b):
    per_row = ops.sub(ops.logsumexp_rows(logits), ops.gather_diag(logits))
    return ops.scale(ops.sum_all(per_row), 1.0 / b)
