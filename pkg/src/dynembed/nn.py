"""Parameter store, dense/LSTM layers, Adam, and gradient checking.

Parameters live in a ParamStore as Vars so the tape can accumulate
gradients straight into them; adam_step then consumes and clears those
gradients.  Layers are thin compositions of the autodiff primitives.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .autodiff import (
    ACTIVATIONS,
    Var,
    add,
    add_bias,
    concat_cols,
    matmul,
    mul,
    sigmoid,
    tanh,
    transpose,
)

LSTM_GATES = ("i", "f", "c", "o")


class ParamStore:
    """Named learnable matrices with gradient slots and Adam moments."""

    def __init__(self):
        self._params = {}
        self._m = {}
        self._v = {}
        self.step_count = 0

    def add(self, name, value):
        if name in self._params:
            raise ValueError(f"parameter {name!r} already exists")
        var = Var(np.array(value, dtype=np.float64))
        self._params[name] = var
        self._m[name] = np.zeros_like(var.value)
        self._v[name] = np.zeros_like(var.value)
        return var

    def get(self, name):
        return self._params[name]

    def names(self):
        return list(self._params)

    def items(self):
        return self._params.items()

    def __contains__(self, name):
        return name in self._params

    def num_parameters(self):
        return sum(p.value.size for p in self._params.values())

    def zero_grads(self):
        for p in self._params.values():
            p.grad = None

    def clone_values(self):
        return {name: p.value.copy() for name, p in self._params.items()}


def glorot_uniform(rng, rows, cols):
    """Uniform Glorot draw for a (rows, cols) kernel."""
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_dense(store, name, out_dim, in_dim, rng):
    """Create W (out_dim x in_dim, Glorot) and a zero bias for a dense layer."""
    store.add(f"{name}_W", glorot_uniform(rng, out_dim, in_dim))
    store.add(f"{name}_b", np.zeros(out_dim))


def dense_forward(tape, store, name, x, activation="relu"):
    """f_a(x @ W^T + b) for the named layer, backward recorded."""
    act = ACTIVATIONS[activation]
    w = store.get(f"{name}_W")
    b = store.get(f"{name}_b")
    return act(tape, add_bias(tape, matmul(tape, x, transpose(tape, w)), b))


@dataclass
class LstmState:
    """Hidden and cell activations of one LSTM layer (batch x width each)."""

    h: Var
    c: Var


def lstm_initial_state(batch, width):
    return LstmState(Var(np.zeros((batch, width))), Var(np.zeros((batch, width))))


def init_lstm(store, name, in_dim, hidden, rng):
    """Gate kernels (hidden x (hidden + in_dim)) and biases for one cell.

    The forget-gate bias starts at 1.0 so early training does not flush the
    cell state; everything else starts at zero / Glorot.
    """
    for gate in LSTM_GATES:
        store.add(f"{name}_W{gate}", glorot_uniform(rng, hidden, hidden + in_dim))
        bias = np.ones(hidden) if gate == "f" else np.zeros(hidden)
        store.add(f"{name}_b{gate}", bias)


def lstm_cell_forward(tape, store, name, x, prev):
    """One LSTM step on input x (batch x in_dim) from state prev.

    i = sigmoid(W_i [h, x] + b_i)        input gate
    f = sigmoid(W_f [h, x] + b_f)        forget gate
    c~ = tanh(W_c [h, x] + b_c)          candidate state
    c = f * c_prev + i * c~
    o = sigmoid(W_o [h, x] + b_o)        output gate
    h = o * tanh(c)
    """
    z = concat_cols(tape, [prev.h, x])

    def gate(g, squash):
        w = store.get(f"{name}_W{g}")
        b = store.get(f"{name}_b{g}")
        return squash(tape, add_bias(tape, matmul(tape, z, transpose(tape, w)), b))

    i = gate("i", sigmoid)
    f = gate("f", sigmoid)
    c_hat = gate("c", tanh)
    c = add(tape, mul(tape, f, prev.c), mul(tape, i, c_hat))
    o = gate("o", sigmoid)
    h = mul(tape, o, tanh(tape, c))
    return LstmState(h, c)


def adam_step(store, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
    """Bias-corrected Adam update in place; clears gradients afterwards.

    Parameters without an accumulated gradient are left untouched.
    """
    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, p in store.items():
        g = p.grad
        if g is None:
            continue
        m = store._m[name]
        v = store._v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        np.multiply(g, g, out=g)
        g *= 1.0 - beta2
        v += g
        # reuse the gradient buffer for the denominator sqrt(v/bc2) + eps
        np.divide(v, bc2, out=g)
        np.sqrt(g, out=g)
        g += eps
        np.divide(m, g, out=g)
        g *= lr / bc1
        p.value -= g
        p.grad = None


@dataclass
class FiniteDiffReport:
    """Per-parameter scaled gradient errors from a central-difference check."""

    errors: dict
    tolerance: float

    @property
    def max_error(self):
        return max(self.errors.values()) if self.errors else 0.0

    @property
    def failures(self):
        return {k: v for k, v in self.errors.items() if v > self.tolerance}

    @property
    def passed(self):
        return not self.failures


def finite_diff_check(closure, store, tolerance=1e-4, h=1e-5):
    """Compare analytic gradients of a scalar loss with central differences.

    closure() must rebuild the forward pass from the store's current values
    and return (tape, loss Var); it is re-run with each parameter entry
    nudged by +/- h.  The per-parameter error is
    max|analytic - numeric| / max(inf-norm of either gradient, 1e-12),
    so a report entry of 1e-6 means the worst entry disagrees at one part
    per million of the gradient's magnitude.
    """
    store.zero_grads()
    tape, loss = closure()
    tape.backward(loss)
    analytic = {name: np.array(p.grad) if p.grad is not None
                else np.zeros_like(p.value)
                for name, p in store.items()}
    store.zero_grads()

    errors = {}
    for name, p in store.items():
        numeric = np.zeros_like(p.value)
        flat = p.value.reshape(-1)
        num_flat = numeric.reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            _, up = closure()
            flat[idx] = orig - h
            _, down = closure()
            flat[idx] = orig
            num_flat[idx] = (float(up.value) - float(down.value)) / (2.0 * h)
        scale = max(
            np.max(np.abs(analytic[name]), initial=0.0),
            np.max(np.abs(numeric), initial=0.0),
            1e-12,
        )
        errors[name] = float(np.max(np.abs(analytic[name] - numeric), initial=0.0) / scale)
    return FiniteDiffReport(errors, tolerance)


# ---------------------------------------------------------------------------
# Parameter checkpoint container.
#
# Byte layout (all integers little-endian):
#   magic   4 bytes  b"NMC1"
#   count   uint32   number of parameters
#   then per parameter, in sorted name order:
#     name_len uint16, name utf-8 bytes
#     ndim     uint8  (1 or 2)
#     dims     uint32 per dimension
#     payload  float64 little-endian, row major
# Adam moments and the step counter are not stored; a reloaded store starts
# with fresh optimizer state.
# ---------------------------------------------------------------------------

_MAGIC = b"NMC1"


def write_params(store, fh):
    fh.write(_MAGIC)
    fh.write(struct.pack("<I", len(store.names())))
    for name in sorted(store.names()):
        value = store.get(name).value
        if value.ndim not in (1, 2):
            raise ValueError(f"parameter {name!r} has unsupported ndim {value.ndim}")
        encoded = name.encode("utf-8")
        fh.write(struct.pack("<H", len(encoded)))
        fh.write(encoded)
        fh.write(struct.pack("<B", value.ndim))
        for dim in value.shape:
            fh.write(struct.pack("<I", dim))
        fh.write(np.ascontiguousarray(value, dtype="<f8").tobytes())


def read_params(fh):
    def take(count, what):
        data = fh.read(count)
        if len(data) != count:
            raise ValueError(f"checkpoint truncated while reading {what}")
        return data

    if take(4, "magic") != _MAGIC:
        raise ValueError("not a parameter checkpoint (bad magic)")
    (count,) = struct.unpack("<I", take(4, "count"))
    store = ParamStore()
    for _ in range(count):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = take(name_len, "name").decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1, "ndim"))
        if ndim not in (1, 2):
            raise ValueError(f"parameter {name!r} has unsupported ndim {ndim}")
        shape = tuple(
            struct.unpack("<I", take(4, "dimension"))[0] for _ in range(ndim)
        )
        size = int(np.prod(shape))
        payload = take(size * 8, f"payload of {name!r}")
        value = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
        store.add(name, value)
    return store


def save_params(store, path):
    with open(path, "wb") as fh:
        write_params(store, fh)


def load_params(path):
    with open(path, "rb") as fh:
        return read_params(fh)
