"""Central finite-difference gradient checking shared by the test modules."""

import numpy as np

from dancesearch.tensor import Tape, backward


def numeric_gradient(f, arr, step=1e-5):
    """Central differences of the scalar ``f()`` w.r.t. every entry of ``arr``.

    ``arr`` is perturbed in place and restored; ``f`` must re-read it on
    every call.
    """
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = f()
        flat[i] = orig - step
        fm = f()
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * step)
    return grad


def max_rel_err(analytic, numeric, floor=1e-6):
    """Worst-case relative error, guarded against all-tiny gradients."""
    scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0), floor)
    return float(np.abs(analytic - numeric).max(initial=0.0) / scale)


def check_gradients(make_loss, params, step=1e-5, floor=1e-6):
    """Compare tape gradients of ``make_loss()`` against finite differences.

    ``make_loss`` builds the scalar loss from the current parameter values
    (recording on the active tape when one exists). Returns the worst
    relative error over all parameters.
    """
    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = make_loss()
    backward(tape, loss)

    worst = 0.0
    for p in params:
        num = numeric_gradient(lambda: make_loss().item(), p.value.data, step=step)
        worst = max(worst, max_rel_err(p.grad, num, floor=floor))
    return worst
