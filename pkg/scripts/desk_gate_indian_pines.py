"""Desk-scale accuracy gate on the Indian Pines scene.

Single seeded run: 19 x 19 window, 30 PCA bands, 10% training split,
50 epochs. Passes when test overall accuracy reaches 0.90 and kappa 0.88.
Expect up to ~2 hours on one CPU; progress prints per epoch.

Needs the converted scene (see demos/real_scene_workflow.py for the
conversion steps):

    python3 scripts/desk_gate_indian_pines.py [--data-dir DIR] [--out DIR]
"""

import argparse
import os
import sys

from hsinet import metrics, model, optim, pipeline

OA_TARGET = 0.90
KAPPA_TARGET = 0.88


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data-dir",
                        default=os.environ.get("HSINET_DATA_DIR", "data"))
    parser.add_argument("--out", default="runs/desk_gate")
    args = parser.parse_args()

    cube_path = os.path.join(args.data_dir, "indian_pines.hsc")
    labels_path = os.path.join(args.data_dir, "indian_pines.hsg")
    if not (os.path.exists(cube_path) and os.path.exists(labels_path)):
        print(f"missing {cube_path} or {labels_path}; convert the scene "
              "first (demos/real_scene_workflow.py prints the steps)")
        return 2

    cube = pipeline.load_cube(cube_path, labels_path)
    print(f"scene {cube.height} x {cube.width} x {cube.depth}, "
          f"{cube.n_classes} classes")
    reduced = pipeline.pca_reduce(cube, 30)
    patches = pipeline.extract_patches(reduced, cube.labels, window=19)
    train_set, test_set = pipeline.split_stratified(patches, 0.1, seed=303)
    print(f"{len(train_set)} train / {len(test_set)} test patches")

    m = model.build_model(model.ModelConfig(window=19, bands=30,
                                            classes=cube.n_classes, seed=101))
    print(f"{m.param_count()} trainable parameters, 50 epochs\n")

    def progress(rec):
        val = ""
        if rec.val_loss is not None:
            val = f" val_acc {rec.val_acc:.4f}"
        print(f"epoch {rec.epoch:>3}: loss {rec.train_loss:.4f} "
              f"acc {rec.train_acc:.4f}{val} ({rec.seconds:.0f}s)", flush=True)

    m, history = optim.train(m, train_set, optim.TrainConfig(epochs=50),
                             progress=progress)

    _, _, preds = optim.evaluate(m, test_set)
    cm = metrics.confusion_matrix(test_set.labels, preds, cube.n_classes)
    report = metrics.metrics_report(cm)

    os.makedirs(args.out, exist_ok=True)
    model.model_save(m, os.path.join(args.out, "model.hsnm"))
    history.to_csv(os.path.join(args.out, "history.csv"))
    metrics.write_metrics_json(os.path.join(args.out, "metrics.json"), report)
    metrics.write_confusion_csv(os.path.join(args.out, "confusion.csv"), cm)

    oa, kappa = report["oa"], report["kappa"]
    print(f"\ntest oa {oa:.4f} (target {OA_TARGET}), "
          f"kappa {kappa:.4f} (target {KAPPA_TARGET})")
    passed = oa >= OA_TARGET and kappa >= KAPPA_TARGET
    print("desk gate:", "PASS" if passed else "FAIL")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
