"""Minimal reverse-mode differentiation over dense matrices.

Every primitive takes a Tape plus Var operands, computes its value with
numpy, and appends a backward rule to the tape.  Calling tape.backward on a
scalar result replays the records in reverse, accumulating gradients into
each Var's ``grad`` slot.  The op set is exactly what the dense and
recurrent encoder-decoders need; this is not a general-purpose autograd.
"""

import numpy as np


class ShapeError(ValueError):
    """Operand shapes do not conform."""


def _check_finite(value, what):
    # sum is a single pass and is non-finite iff some entry is
    if not np.isfinite(np.sum(value)):
        raise ValueError(f"non-finite values in {what}")


class Var:
    """A matrix (or scalar) with a gradient slot."""

    __slots__ = ("value", "grad")

    def __init__(self, value, check=True):
        value = np.asarray(value, dtype=np.float64)
        if check:
            _check_finite(value, "Var")
        self.value = value
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64)
        else:
            self.grad += g

    def __repr__(self):
        return f"Var(shape={self.value.shape})"


class Tape:
    """Ordered record of executed primitives for reverse traversal."""

    __slots__ = ("_records",)

    def __init__(self):
        self._records = []

    def record(self, out, backward):
        self._records.append((out, backward))

    def __len__(self):
        return len(self._records)

    def backward(self, result, seed=1.0):
        """Accumulate d(result)/d(leaf) into every Var reached from result.

        result must be scalar unless an explicit seed gradient of matching
        shape is supplied.  Each record is visited exactly once, in reverse
        execution order.
        """
        if np.ndim(seed) == 0 and result.value.size != 1:
            raise ValueError(
                f"backward needs a scalar result or an explicit seed; "
                f"result has shape {result.value.shape}"
            )
        result.accumulate(np.broadcast_to(np.asarray(seed, dtype=np.float64),
                                          result.value.shape))
        for out, backward in reversed(self._records):
            if out.grad is not None:
                backward(out.grad)


def _as_var(x):
    return x if isinstance(x, Var) else Var(x)


def matmul(tape, a, b):
    a, b = _as_var(a), _as_var(b)
    if a.value.ndim != 2 or b.value.ndim != 2 or a.value.shape[1] != b.value.shape[0]:
        raise ShapeError(f"matmul: {a.value.shape} @ {b.value.shape}")
    out = Var(a.value @ b.value)

    def backward(g):
        a.accumulate(g @ b.value.T)
        b.accumulate(a.value.T @ g)

    tape.record(out, backward)
    return out


def transpose(tape, a):
    a = _as_var(a)
    out = Var(a.value.T)

    def backward(g):
        a.accumulate(g.T)

    tape.record(out, backward)
    return out


def add(tape, a, b):
    a, b = _as_var(a), _as_var(b)
    if a.value.shape != b.value.shape:
        raise ShapeError(f"add: {a.value.shape} vs {b.value.shape}")
    out = Var(a.value + b.value)

    def backward(g):
        a.accumulate(g)
        b.accumulate(g)

    tape.record(out, backward)
    return out


def mul(tape, a, b):
    a, b = _as_var(a), _as_var(b)
    if a.value.shape != b.value.shape:
        raise ShapeError(f"mul: {a.value.shape} vs {b.value.shape}")
    out = Var(a.value * b.value)

    def backward(g):
        a.accumulate(g * b.value)
        b.accumulate(g * a.value)

    tape.record(out, backward)
    return out


def scale(tape, a, c):
    """Multiply by a python constant (not differentiated through c)."""
    a = _as_var(a)
    c = float(c)
    out = Var(a.value * c)

    def backward(g):
        a.accumulate(g * c)

    tape.record(out, backward)
    return out


def add_bias(tape, x, b):
    """Add a length-k bias vector to every row of a (m, k) matrix."""
    x, b = _as_var(x), _as_var(b)
    if x.value.ndim != 2 or b.value.ndim != 1 or x.value.shape[1] != b.value.shape[0]:
        raise ShapeError(f"add_bias: {x.value.shape} + {b.value.shape}")
    out = Var(x.value + b.value[None, :])

    def backward(g):
        x.accumulate(g)
        b.accumulate(g.sum(axis=0))

    tape.record(out, backward)
    return out


def sigmoid(tape, x):
    x = _as_var(x)
    v = x.value
    # stable in both tails
    y = np.where(v >= 0, 1.0 / (1.0 + np.exp(-np.abs(v))),
                 np.exp(-np.abs(v)) / (1.0 + np.exp(-np.abs(v))))
    out = Var(y)

    def backward(g):
        x.accumulate(g * y * (1.0 - y))

    tape.record(out, backward)
    return out


def tanh(tape, x):
    x = _as_var(x)
    y = np.tanh(x.value)
    out = Var(y)

    def backward(g):
        x.accumulate(g * (1.0 - y * y))

    tape.record(out, backward)
    return out


def relu(tape, x):
    x = _as_var(x)
    mask = x.value > 0
    out = Var(np.where(mask, x.value, 0.0))

    def backward(g):
        x.accumulate(g * mask)

    tape.record(out, backward)
    return out


def identity(tape, x):
    return _as_var(x)


ACTIVATIONS = {
    "relu": relu,
    "sigmoid": sigmoid,
    "tanh": tanh,
    "identity": identity,
}


def concat_cols(tape, parts):
    """Concatenate 2-D Vars along columns (rows must agree)."""
    parts = [_as_var(p) for p in parts]
    if not parts:
        raise ShapeError("concat_cols: no operands")
    rows = parts[0].value.shape[0]
    for p in parts:
        if p.value.ndim != 2 or p.value.shape[0] != rows:
            raise ShapeError(
                f"concat_cols: {[tuple(q.value.shape) for q in parts]}"
            )
    widths = [p.value.shape[1] for p in parts]
    out = Var(np.concatenate([p.value for p in parts], axis=1))

    def backward(g):
        offset = 0
        for p, w in zip(parts, widths):
            p.accumulate(g[:, offset:offset + w])
            offset += w

    tape.record(out, backward)
    return out


def weighted_recon_loss(tape, pred, target, beta):
    """Squared-error reconstruction loss with observed entries up-weighted.

    L = sum_ij (b_ij * (pred_ij - target_ij))^2 with b_ij = beta where
    target_ij > 0 and 1 elsewhere, so mistakes on present edges cost beta^2
    times more than mistakes on absent ones.  target is a plain array, not
    differentiated.
    """
    pred = _as_var(pred)
    target = np.asarray(target, dtype=np.float64)
    if pred.value.shape != target.shape:
        raise ShapeError(f"weighted_recon_loss: {pred.value.shape} vs {target.shape}")
    if beta < 1:
        raise ValueError(f"beta must be >= 1, got {beta}")
    weight_sq = np.where(target > 0, float(beta) ** 2, 1.0)
    diff = pred.value - target
    out = Var(np.sum(weight_sq * diff * diff))

    def backward(g):
        pred.accumulate(g * 2.0 * weight_sq * diff)

    tape.record(out, backward)
    return out
