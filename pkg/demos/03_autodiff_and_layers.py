"""The reverse-mode tape, a gradient check, and Adam on a toy problem.

Run:  python demos/03_autodiff_and_layers.py
"""

import numpy as np

from dynembed import autodiff as ad
from dynembed.nn import (
    ParamStore,
    adam_step,
    dense_forward,
    finite_diff_check,
    init_dense,
)

rng = np.random.default_rng(0)

# Forward: loss = || sigmoid(x W^T + b) - target ||^2 with edge upweighting.
store = ParamStore()
init_dense(store, "layer", out_dim=4, in_dim=6, rng=rng)
x = rng.random((3, 6))
target = (rng.random((3, 4)) > 0.5).astype(float)


def closure():
    tape = ad.Tape()
    out = dense_forward(tape, store, "layer", ad.Var(x), activation="sigmoid")
    return tape, ad.weighted_recon_loss(tape, out, target, beta=5.0)


tape, loss = closure()
print(f"loss = {float(loss.value):.4f}, tape length = {len(tape)}")
tape.backward(loss)
print("gradient shapes:", {k: v.grad.shape for k, v in store.items()})

# Check every analytic gradient against central finite differences.
report = finite_diff_check(closure, store, tolerance=1e-5)
print("gradient check passed:", report.passed,
      f"(max scaled error {report.max_error:.2e})")

# Train the layer with Adam for a while; the weighted loss drops fast.
store.zero_grads()
for step in range(300):
    tape, loss = closure()
    tape.backward(loss)
    adam_step(store, lr=0.01)
    if step % 100 == 0:
        print(f"step {step:3d}: loss {float(loss.value):.4f}")
tape, loss = closure()
print(f"final loss {float(loss.value):.4f}")
