"""Dense float64 tensors with tape-based reverse-mode differentiation.

A ``Tensor`` is an immutable wrapper around a row-major numpy array. A
``Parameter`` couples a value with an accumulating gradient buffer. While a
``Tape`` is active (used as a context manager), every differentiable
operation from :mod:`dancesearch.ops` appends a node recording how to push
gradients back to its inputs; ``backward`` replays the tape once in reverse.

Gradients accumulate additively into ``Parameter.grad``; callers zero them
explicitly. Forward execution is plain numpy and is bitwise deterministic
given inputs, parameters and the dropout rng.
"""

import numpy as np

from .errors import ContractError, ShapeError


class Tensor:
    """Immutable dense array of 64-bit reals."""

    __slots__ = ("data",)

    def __init__(self, data, copy=False):
        arr = np.array(data, dtype=np.float64, copy=copy) if copy else np.asarray(data, dtype=np.float64)
        self.data = arr

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.data.shape}")
        return float(self.data.reshape(-1)[0])

    def copy(self):
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.data.shape})"


class Parameter:
    """A trainable value with an accumulating gradient of the same shape."""

    __slots__ = ("value", "grad", "trainable", "name")

    def __init__(self, value, trainable=True, name=""):
        self.value = value if isinstance(value, Tensor) else Tensor(value, copy=True)
        self.grad = np.zeros_like(self.value.data)
        self.trainable = trainable
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def assign(self, data):
        """Replace the value in place (optimizer updates); shape must match."""
        arr = np.asarray(data, dtype=np.float64)
        if arr.shape != self.value.data.shape:
            raise ShapeError(f"assign to {self.name or 'parameter'}: shape {arr.shape} != {self.value.data.shape}")
        self.value = Tensor(arr.copy())

    def __repr__(self):
        return f"Parameter(name={self.name!r}, shape={self.value.shape}, trainable={self.trainable})"


class Node:
    """One executed differentiable operation on the tape."""

    __slots__ = ("inputs", "output", "backward_fn")

    def __init__(self, inputs, output, backward_fn):
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


_ACTIVE_TAPES = []


class Tape:
    """Ordered record of differentiable operations, in execution order.

    Execution order is a topological order by construction: an operation can
    only consume tensors that already exist.
    """

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _ACTIVE_TAPES.pop()
        assert popped is self
        return False

    def __len__(self):
        return len(self.nodes)


def active_tape():
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def record(inputs, output, backward_fn):
    """Append a node to the active tape, if any. Returns the output tensor."""
    tape = active_tape()
    if tape is not None:
        tape.nodes.append(Node(tuple(inputs), output, backward_fn))
    return output


def backward(tape, loss):
    """Accumulate d(loss)/d(parameter) into every parameter on the tape.

    ``loss`` must be a scalar tensor produced while ``tape`` was active.
    Gradients add onto whatever is already in ``Parameter.grad``; calling
    backward twice without zeroing doubles them. Each tape node is visited
    exactly once, in reverse execution order.
    """
    if not isinstance(loss, Tensor):
        raise ContractError(f"backward expects a Tensor loss, got {type(loss).__name__}")
    if loss.data.size != 1:
        raise ContractError(f"backward expects a scalar loss, got shape {loss.data.shape}")

    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        input_grads = node.backward_fn(g)
        for inp, gin in zip(node.inputs, input_grads):
            if gin is None:
                continue
            if isinstance(inp, Parameter):
                inp.grad += gin
            else:
                key = id(inp)
                if key in grads:
                    grads[key] = grads[key] + gin
                else:
                    grads[key] = gin


def value_of(x):
    """The underlying Tensor of a Tensor or Parameter."""
    if isinstance(x, Parameter):
        return x.value
    if isinstance(x, Tensor):
        return x
    raise ContractError(f"expected Tensor or Parameter, got {type(x).__name__}")
