"""How the valid 3D convolution is computed, checked against bare loops.

The library lowers each convolution to a matrix product (gather every
kernel-sized window into a row, multiply by the flattened kernels). This
script recomputes a tiny case with explicit Python loops to show the two
agree to float rounding.

Run me from the repository root:  python3 demos/convolution_mechanics.py
"""

import numpy as np

from hsinet import layers

rng = np.random.default_rng(3)

# A 5 x 5 x 5 single-channel volume and two 3 x 3 x 3 kernels.
x = rng.normal(size=(5, 5, 5, 1)).astype(np.float32)
kernels = rng.normal(size=(2, 3, 3, 3, 1)).astype(np.float32)
bias = np.array([0.1, -0.2], dtype=np.float32)

conv = layers.Conv3DLayer(kernels, bias, activation=layers.IDENTITY)
fast = layers.conv3d_forward(x, conv)
print("input   ", x.shape)
print("kernels ", kernels.shape, "(out_channels, kh, kw, kd, in_channels)")
print("output  ", fast.shape, "- every axis shrinks by kernel-1\n")

# The same thing with loops: slide the kernel over every position where it
# fits entirely inside the volume, take the elementwise product, sum.
slow = np.zeros_like(fast)
for oc in range(2):
    for i in range(3):
        for j in range(3):
            for k in range(3):
                window = x[i:i + 3, j:j + 3, k:k + 3, 0]
                slow[i, j, k, oc] = (window * kernels[oc, :, :, :, 0]).sum() \
                    + bias[oc]

print("largest |fast - slow|:", float(np.abs(fast - slow).max()))

# The ReLU variant only rectifies the result; positions stay the same.
conv_relu = layers.Conv3DLayer(kernels, bias, activation=layers.RELU)
rectified = layers.conv3d_forward(x, conv_relu)
print("relu zeroes", int((rectified == 0).sum()), "of", rectified.size,
      "outputs\n")

# The full spatial-spectral chain used by the classifier, on the smallest
# legal patch (9 x 9 spatial, 13 bands). Each 3D stage eats 2 pixels of
# each spatial axis; the spectral axis loses 6, then 4, then 2.
shapes = [(9, 9, 13, 1)]
for co, kh, kw, kd in ((8, 3, 3, 7), (16, 3, 3, 5), (32, 3, 3, 3)):
    s, _, b, _ = shapes[-1]
    shapes.append((s - kh + 1, s - kh + 1, b - kd + 1, co))
print("3D stage shapes:", " -> ".join(str(s) for s in shapes))
s, _, b, c = shapes[-1]
print(f"reshape folds depth into channels: ({s}, {s}, {b * c})")
print(f"2D stage leaves: ({s - 2}, {s - 2}, 64), flatten: ({(s - 2) ** 2 * 64},)")
