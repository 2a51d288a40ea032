"""Spot-check a hand-derived backward pass against finite differences.

Every layer's backward is derived by hand in this package, so the one
defensible way to trust it is numerical differentiation: nudge a single
weight up and down by h, re-run the forward pass, and compare the slope
(f(w+h) - f(w-h)) / 2h against the analytic gradient.

Run me from the repository root:  python3 demos/gradient_spot_check.py
"""

import numpy as np

from hsinet import layers

rng = np.random.default_rng(12)

# A dense layer with 6 inputs and 3 ReLU outputs, and a scalar objective
# L = sum(out * r) so dL/dout = r is trivial to write down.
dense = layers.DenseLayer(rng.normal(size=(3, 6)), rng.normal(size=3),
                          activation=layers.RELU)
x = rng.normal(size=6)
r = rng.normal(size=3)

out = layers.dense_forward(x, dense)
grad_x, grad_w, grad_b = layers.dense_backward(x, dense, r, out)


def objective():
    return float((layers.dense_forward(x, dense) * r).sum())


h = 1e-6
worst = 0.0
for idx in np.ndindex(dense.weights.shape):
    keep = dense.weights[idx]
    dense.weights[idx] = keep + h
    up = objective()
    dense.weights[idx] = keep - h
    down = objective()
    dense.weights[idx] = keep
    numeric = (up - down) / (2 * h)
    worst = max(worst, abs(numeric - grad_w[idx]))

print("dense layer: largest |analytic - numeric| over all",
      dense.weights.size, "weights:", worst)

# Same exercise for one 3D-convolution kernel entry, to show the machinery
# is identical whatever the layer: perturb, re-run, compare slopes.
conv = layers.Conv3DLayer(rng.normal(size=(2, 3, 3, 3, 1)),
                          rng.normal(size=2), activation=layers.IDENTITY)
xv = rng.normal(size=(5, 5, 5, 1))
rv = rng.normal(size=(3, 3, 3, 2))
out = layers.conv3d_forward(xv, conv)
_, grad_k, _ = layers.conv3d_backward(xv, conv, rv, out)

idx = (1, 2, 0, 1, 0)
keep = conv.kernels[idx]
conv.kernels[idx] = keep + h
up = float((layers.conv3d_forward(xv, conv) * rv).sum())
conv.kernels[idx] = keep - h
down = float((layers.conv3d_forward(xv, conv) * rv).sum())
conv.kernels[idx] = keep
numeric = (up - down) / (2 * h)
print(f"conv3d kernel entry {idx}: analytic {grad_k[idx]:.8f}, "
      f"numeric {numeric:.8f}")

# One caveat worth knowing: with ReLU the objective is piecewise linear,
# so a pre-activation within h of zero puts the two evaluations on
# different linear pieces and the comparison is meaningless there. The
# test suite screens its random cases for exactly this.
pre = dense.weights @ x + dense.bias
print("smallest |pre-activation| in the dense case:",
      float(np.abs(pre).min()), "(comfortably above h =", h, ")")
