"""Train, evaluate, and map a synthetic scene with the library API.

The same flow the command line drives, spelled out step by step: load a
cube, reduce its spectra, cut labeled patches, split per class, train,
score, and render the classification map. Artifacts land in a temp
directory printed at the end.

Run me from the repository root:  python3 demos/end_to_end_synthetic.py
"""

import os
import tempfile

from hsinet import metrics, model, optim, pipeline, synthetic

# A 32 x 32 scene with 20 correlated bands and 3 vertical class strips.
cube = synthetic.synthetic_scene(rows=32, cols=32, depth=20, classes=3, seed=4)
labeled = int((cube.labels != 0).sum())
print(f"scene {cube.height} x {cube.width} x {cube.depth}, "
      f"{labeled} labeled pixels in {cube.n_classes} classes")

# Spectral reduction and patch extraction. Zero padding keeps every
# labeled pixel usable even at the border of the scene.
reduced = pipeline.pca_reduce(cube, 13)
patches = pipeline.extract_patches(reduced, cube.labels, window=9)
print(f"patches: {patches.patches.shape}")

# Stratified 30/70 split: every class contributes the same fraction.
train_set, test_set = pipeline.split_stratified(patches, 0.3, seed=303)
print(f"split: {len(train_set)} train / {len(test_set)} test\n")

# Build and train. The histories carry one record per epoch; the trailing
# eval-mode pass on the training patches is what train_acc reports.
m = model.build_model(model.ModelConfig(window=9, bands=13,
                                        classes=cube.n_classes,
                                        dropout_rate=0.1, seed=101))
print(f"model: {m.param_count()} trainable parameters")
m, history = optim.train(m, train_set, optim.TrainConfig(epochs=5,
                                                         batch_size=64))
for rec in history.records:
    print(f"  epoch {rec.epoch}: loss {rec.train_loss:.4f} "
          f"acc {rec.train_acc:.4f}")
print()

# Score the held-out patches and assemble the usual report.
_, accuracy, preds = optim.evaluate(m, test_set)
cm = metrics.confusion_matrix(test_set.labels, preds, cube.n_classes)
print(f"test oa {metrics.overall_accuracy(cm):.4f} "
      f"aa {metrics.average_accuracy(cm):.4f} "
      f"kappa {metrics.kappa(cm):.4f}")
print("confusion matrix (rows true, cols predicted):")
for row in cm.counts:
    print("  ", " ".join(f"{v:>4}" for v in row))

# Render the predicted map next to the ground truth. Background stays
# black; class k gets the hue (k-1)/C.
out_dir = tempfile.mkdtemp(prefix="hsinet_demo_")
import numpy as np

grid = np.zeros((cube.height, cube.width), dtype=np.int64)
grid[patches.origins[:, 1], patches.origins[:, 0]] = \
    optim.evaluate(m, patches)[2] + 1
metrics.write_ppm(os.path.join(out_dir, "prediction.ppm"),
                  metrics.render_map(grid, cube.n_classes))
metrics.write_ppm(os.path.join(out_dir, "ground_truth.ppm"),
                  metrics.render_map(cube.labels, cube.n_classes))
model.model_save(m, os.path.join(out_dir, "model.hsnm"))
print(f"\nwrote prediction.ppm, ground_truth.ppm, model.hsnm to {out_dir}")
