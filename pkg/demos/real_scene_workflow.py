"""The workflow for a real benched scene, end to end.

Published hyperspectral benchmarks ship as MATLAB .mat files; this package
reads only its own HSC/HSG formats, so the converter package (converter/)
turns each .mat pair into those first. This script checks for converted
Indian Pines files and either explains how to produce them or runs a
short training to show the moving parts. The statistically meaningful
configurations live in scripts/ and take hours, not minutes.

Run me from the repository root:  python3 demos/real_scene_workflow.py
"""

import os
import sys

from hsinet import metrics, model, optim, pipeline

data_dir = os.environ.get("HSINET_DATA_DIR", "data")
cube_path = os.path.join(data_dir, "indian_pines.hsc")
labels_path = os.path.join(data_dir, "indian_pines.hsg")

if not (os.path.exists(cube_path) and os.path.exists(labels_path)):
    print(f"no converted scene at {cube_path} / {labels_path}")
    print()
    print("to get one:")
    print("  1. download the corrected Indian Pines .mat files")
    print("     (Indian_pines_corrected.mat and Indian_pines_gt.mat)")
    print("  2. build the converter:  cd converter && npm install && npm run build")
    print("  3. convert both files:")
    print("       node converter/dist/cli.js convert \\")
    print("         --in Indian_pines_corrected.mat --var indian_pines_corrected \\")
    print("         --kind cube --out data/indian_pines.hsc")
    print("       node converter/dist/cli.js convert \\")
    print("         --in Indian_pines_gt.mat --var indian_pines_gt \\")
    print("         --kind labels --out data/indian_pines.hsg")
    print("  4. re-run this script (or set HSINET_DATA_DIR)")
    sys.exit(0)

cube = pipeline.load_cube(cube_path, labels_path)
rows, cols, bands, classes = pipeline.KNOWN_SCENES["indian_pines"]
print(f"loaded {cube.height} x {cube.width} x {cube.depth} "
      f"(expected {rows} x {cols} x {bands}), {cube.n_classes} classes")

# A deliberately light configuration so this demo finishes in minutes:
# small window, 10% training split, a few epochs. Accuracy will be well
# below the published numbers; scripts/desk_gate_indian_pines.py runs the
# configuration the acceptance gate actually scores.
reduced = pipeline.pca_reduce(cube, 30)
patches = pipeline.extract_patches(reduced, cube.labels, window=9)
train_set, test_set = pipeline.split_stratified(patches, 0.1, seed=303)
print(f"{len(train_set)} train / {len(test_set)} test patches")

m = model.build_model(model.ModelConfig(window=9, bands=30,
                                        classes=cube.n_classes))
m, _ = optim.train(m, train_set, optim.TrainConfig(epochs=5),
                   progress=lambda r: print(
                       f"  epoch {r.epoch}: loss {r.train_loss:.4f} "
                       f"acc {r.train_acc:.4f} ({r.seconds:.0f}s)"))

_, _, preds = optim.evaluate(m, test_set)
cm = metrics.confusion_matrix(test_set.labels, preds, cube.n_classes)
print(f"test oa {metrics.overall_accuracy(cm):.4f} "
      f"kappa {metrics.kappa(cm):.4f} after 5 epochs at window 9")
print("expect much more from scripts/desk_gate_indian_pines.py")
