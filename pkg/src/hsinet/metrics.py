"""Classification quality metrics and map rendering.

Provides the confusion matrix and the three summary numbers used for
hyperspectral benchmarks — overall accuracy (fraction correct), average
accuracy (mean per-class recall), and Cohen's kappa (agreement corrected
for chance) — plus rendering of label grids to binary PPM images.

Conventions: confusion matrix rows are true classes, columns predictions.
Classes absent from the test set are excluded from average accuracy with a
warning instead of dragging the mean to zero. Map colors assign class id k
(1-based) the hue (k-1)/C at full saturation and value; id 0 (background)
is black.
"""

import colorsys
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import LabelError, MetricError, ShapeError


@dataclass
class ConfusionMatrix:
    """counts[t][p] = number of samples of true class t predicted as p."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ShapeError(f"confusion matrix must be square, got {c.shape}")
        if c.min(initial=0) < 0:
            raise LabelError("confusion matrix counts must be non-negative")
        self.counts = c.astype(np.int64)

    @property
    def n_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())


def confusion_matrix(truths, preds, n_classes):
    """Count (true, predicted) pairs into an n_classes x n_classes grid."""
    t = np.asarray(truths, dtype=np.int64).ravel()
    p = np.asarray(preds, dtype=np.int64).ravel()
    if t.shape != p.shape:
        raise ShapeError(f"truths ({t.size}) and preds ({p.size}) differ in length")
    if t.size and (t.min() < 0 or t.max() >= n_classes or p.min() < 0 or p.max() >= n_classes):
        raise LabelError(f"class ids must lie in [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts)


def overall_accuracy(cm):
    """Fraction of samples on the diagonal: trace / total."""
    total = cm.total
    if total == 0:
        raise MetricError("overall accuracy undefined for an empty matrix")
    return float(np.trace(cm.counts)) / total


def per_class_accuracy(cm):
    """Per-class recall; None for classes with no test samples."""
    rows = cm.counts.sum(axis=1)
    diag = np.diag(cm.counts)
    return [float(d) / r if r > 0 else None for d, r in zip(diag, rows)]


def average_accuracy(cm):
    """Mean per-class recall over classes present in the test set."""
    acc = per_class_accuracy(cm)
    present = [a for a in acc if a is not None]
    if not present:
        raise MetricError("average accuracy undefined: every class row is empty")
    missing = len(acc) - len(present)
    if missing:
        warnings.warn(
            f"average accuracy excludes {missing} class(es) absent from the test set",
            stacklevel=2)
    return float(np.mean(present))


def kappa(cm):
    """Cohen's kappa: (p_o - p_e) / (1 - p_e) with marginal chance agreement."""
    total = cm.total
    if total == 0:
        raise MetricError("kappa undefined for an empty matrix")
    counts = cm.counts.astype(np.float64)
    p_o = np.trace(counts) / total
    p_e = float(counts.sum(axis=1) @ counts.sum(axis=0)) / (total * total)
    if p_e == 1.0:
        # All mass in a single row and column: agreement is exact by
        # construction, so report perfect agreement rather than 0/0.
        return 1.0
    return float((p_o - p_e) / (1.0 - p_e))


def class_palette(n_classes):
    """(n_classes+1, 3) u8 palette: index 0 black, class k hue (k-1)/C."""
    if n_classes < 1:
        raise LabelError(f"palette needs at least one class, got {n_classes}")
    palette = np.zeros((n_classes + 1, 3), dtype=np.uint8)
    for k in range(1, n_classes + 1):
        r, g, b = colorsys.hsv_to_rgb((k - 1) / n_classes, 1.0, 1.0)
        palette[k] = (round(255 * r), round(255 * g), round(255 * b))
    return palette


def render_map(label_grid, n_classes):
    """Color an (N, M) grid of class ids into an (N, M, 3) u8 image."""
    grid = np.asarray(label_grid)
    if grid.ndim != 2:
        raise ShapeError(f"label grid must be 2D, got {grid.shape}")
    if grid.min(initial=0) < 0 or grid.max(initial=0) > n_classes:
        raise LabelError(f"grid ids must lie in [0, {n_classes}]")
    return class_palette(n_classes)[grid.astype(np.int64)]


def write_ppm(path, image):
    """Write an (N, M, 3) u8 image as binary PPM (P6, maxval 255)."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ShapeError(f"PPM image must be (N, M, 3) uint8, got {img.shape} {img.dtype}")
    height, width = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def metrics_report(cm):
    """The metrics bundle as a plain dict (JSON-shaped)."""
    return {
        "oa": overall_accuracy(cm),
        "aa": average_accuracy(cm),
        "kappa": kappa(cm),
        "per_class_accuracy": per_class_accuracy(cm),
        "confusion_matrix": cm.counts.tolist(),
    }


def write_metrics_json(path, report):
    with open(path, "w", encoding="ascii") as fh:
        fh.write(json.dumps(report, sort_keys=True, indent=2))
        fh.write("\n")


def write_confusion_csv(path, cm):
    """CSV with a header row of 1-based class ids, then one row per class."""
    ids = [str(k) for k in range(1, cm.n_classes + 1)]
    lines = ["true\\pred," + ",".join(ids)]
    for k, row in enumerate(cm.counts, start=1):
        lines.append(f"{k}," + ",".join(str(int(v)) for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")
