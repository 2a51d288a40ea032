"""Full-scale reproduction runs: 25 x 25 window, 100 epochs.

These are the configurations behind the reference accuracies this package
was written to reproduce. On CPU each run takes many hours; they exist so
the numbers can be re-derived, not as a quick check.

Recorded targets (Indian Pines, single seed, tolerance reflects seed
variance of roughly half a percentage point):

    30% training split -> test overall accuracy >= 0.99
    10% training split -> test overall accuracy >= 0.97

Pavia University and Salinas run with 15 PCA bands instead of 30 and are
reported without a recorded target.

    python3 scripts/reproduce_published_runs.py --scene indian_pines \
        --train-fraction 0.3 [--data-dir DIR] [--out DIR] [--epochs 100]
"""

import argparse
import os
import sys

from hsinet import metrics, model, optim, pipeline

BANDS = {"indian_pines": 30, "pavia_university": 15, "salinas": 15}
OA_TARGETS = {("indian_pines", 0.3): 0.99, ("indian_pines", 0.1): 0.97}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scene", default="indian_pines",
                        choices=sorted(BANDS))
    parser.add_argument("--train-fraction", type=float, default=0.3)
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--data-dir",
                        default=os.environ.get("HSINET_DATA_DIR", "data"))
    parser.add_argument("--out", default=None)
    args = parser.parse_args()

    cube_path = os.path.join(args.data_dir, args.scene + ".hsc")
    labels_path = os.path.join(args.data_dir, args.scene + ".hsg")
    if not (os.path.exists(cube_path) and os.path.exists(labels_path)):
        print(f"missing {cube_path} or {labels_path}; convert the scene "
              "first (demos/real_scene_workflow.py prints the steps)")
        return 2
    out_dir = args.out or os.path.join(
        "runs", f"{args.scene}_{int(args.train_fraction * 100)}pct")

    bands = BANDS[args.scene]
    cube = pipeline.load_cube(cube_path, labels_path)
    expected = pipeline.KNOWN_SCENES.get(args.scene)
    if expected and (cube.height, cube.width, cube.depth) != expected[:3]:
        print(f"warning: scene is {cube.height} x {cube.width} x "
              f"{cube.depth}, expected {expected[:3]}")
    reduced = pipeline.pca_reduce(cube, bands)
    patches = pipeline.extract_patches(reduced, cube.labels, window=25)
    train_set, test_set = pipeline.split_stratified(
        patches, args.train_fraction, seed=303)
    print(f"{args.scene}: {len(train_set)} train / {len(test_set)} test "
          f"patches, {bands} bands, window 25, {args.epochs} epochs")

    m = model.build_model(model.ModelConfig(window=25, bands=bands,
                                            classes=cube.n_classes, seed=101))
    print(f"{m.param_count()} trainable parameters\n")

    def progress(rec):
        print(f"epoch {rec.epoch:>3}: loss {rec.train_loss:.4f} "
              f"acc {rec.train_acc:.4f} ({rec.seconds:.0f}s)", flush=True)

    m, history = optim.train(
        m, train_set, optim.TrainConfig(epochs=args.epochs),
        progress=progress)

    _, _, preds = optim.evaluate(m, test_set)
    cm = metrics.confusion_matrix(test_set.labels, preds, cube.n_classes)
    report = metrics.metrics_report(cm)

    os.makedirs(out_dir, exist_ok=True)
    model.model_save(m, os.path.join(out_dir, "model.hsnm"))
    history.to_csv(os.path.join(out_dir, "history.csv"))
    metrics.write_metrics_json(os.path.join(out_dir, "metrics.json"), report)
    metrics.write_confusion_csv(os.path.join(out_dir, "confusion.csv"), cm)

    print(f"\ntest oa {report['oa']:.4f} aa {report['aa']:.4f} "
          f"kappa {report['kappa']:.4f}; artifacts in {out_dir}")
    target = OA_TARGETS.get((args.scene, round(args.train_fraction, 2)))
    if target is None:
        print("no recorded target for this configuration; reporting only")
        return 0
    passed = report["oa"] >= target
    print(f"target oa >= {target}:", "PASS" if passed else "FAIL")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
