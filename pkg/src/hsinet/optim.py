"""Adam optimization and the mini-batch training loop.

The recipe: per epoch, shuffle the training patches with a seeded
generator, walk them in mini-batches (the final partial batch is kept,
not dropped), compute the mean gradient over each batch, and apply one
Adam update per batch. Dropout runs in train mode during updates; the
loss/accuracy numbers recorded in the history come from eval-mode passes,
so they measure the deterministic network.

Determinism contract: given the same initial parameters, shuffle seed, and
dataset order, training is bitwise reproducible in single-threaded mode.
Everything random (validation carve, epoch permutations, dropout masks)
draws from one generator seeded with shuffle_seed, in a fixed order.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, LabelError, NumericError, ShapeError
from .layers import softmax_cross_entropy
from .pipeline import stratified_indices

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-7


class AdamState:
    """First/second moment estimates per parameter plus the step counter."""

    def __init__(self, params, learning_rate=0.001, beta1=ADAM_BETA1,
                 beta2=ADAM_BETA2, epsilon=ADAM_EPSILON):
        if learning_rate < 0:
            raise ConfigError(f"learning rate must be >= 0, got {learning_rate}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m = {name: np.zeros_like(arr) for name, arr in params}
        self.v = {name: np.zeros_like(arr) for name, arr in params}


def adam_step(params, grads, state):
    """One Adam update, in place on the parameter arrays.

    params is the model's (name, array) list; grads maps each name to a
    same-shaped gradient. Uses bias-corrected moment estimates:
    theta -= lr * m_hat / (sqrt(v_hat) + eps).
    """
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, arr in params:
        g = grads[name]
        if g.shape != arr.shape:
            raise ShapeError(f"{name}: gradient shape {g.shape} != parameter {arr.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
        arr -= state.learning_rate * update


@dataclass
class TrainConfig:
    batch_size: int = 256
    epochs: int = 100
    learning_rate: float = 0.001
    shuffle_seed: int = 202
    validation_fraction: float = 0.1

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0.0 <= self.validation_fraction < 1.0:
            raise ConfigError(
                f"validation_fraction must be in [0, 1), got {self.validation_fraction}")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float
    seconds: float


@dataclass
class History:
    """One record per completed epoch; val fields are None without a split."""

    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def append(self, record):
        self.records.append(record)

    def to_csv(self, path):
        def cell(v):
            return "" if v is None else format(v, ".8g")

        lines = ["epoch,train_loss,train_acc,val_loss,val_acc,seconds"]
        for r in self.records:
            lines.append(",".join([
                str(r.epoch), cell(r.train_loss), cell(r.train_acc),
                cell(r.val_loss), cell(r.val_acc), cell(r.seconds)]))
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")


def evaluate(model, patchset, batch_size=256):
    """Eval-mode pass: (mean loss, accuracy, predicted class indices).

    Prediction is the argmax logit; ties resolve to the lowest index.
    """
    n = len(patchset)
    if n == 0:
        raise DataError("cannot evaluate an empty patch set")
    losses = np.empty(n, dtype=np.float64)
    preds = np.empty(n, dtype=np.int64)
    for lo in range(0, n, batch_size):
        hi = min(n, lo + batch_size)
        logits = model.forward(patchset.patches[lo:hi], mode="eval")
        loss_vec, _ = softmax_cross_entropy(logits, patchset.labels[lo:hi])
        losses[lo:hi] = loss_vec
        preds[lo:hi] = np.argmax(logits, axis=1)
    accuracy = float(np.mean(preds == patchset.labels))
    return float(losses.mean()), accuracy, preds


def train(model, patchset, config, progress=None):
    """Run the training loop; mutates the model, returns (model, History).

    A validation subset (config.validation_fraction of the given patches,
    stratified, possibly empty) is carved off before training and only
    measured, never trained on. `progress`, if given, is called with each
    EpochRecord as it completes.
    """
    if len(patchset) == 0:
        raise DataError("cannot train on an empty patch set")
    n_classes = model.config.classes
    if patchset.labels.min() < 0 or patchset.labels.max() >= n_classes:
        raise LabelError(
            f"patch labels must lie in [0, {n_classes}), "
            f"got range [{patchset.labels.min()}, {patchset.labels.max()}]")

    rng = np.random.default_rng(config.shuffle_seed)
    val_set = None
    train_set = patchset
    if config.validation_fraction > 0.0:
        val_idx, train_idx = stratified_indices(
            patchset.labels, config.validation_fraction, rng, min_one=False)
        if val_idx.size and train_idx.size:
            val_set = patchset.subset(val_idx)
            train_set = patchset.subset(train_idx)

    params = model.parameters()
    state = AdamState(params, learning_rate=config.learning_rate)
    history = History()
    n = len(train_set)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        perm = rng.permutation(n)
        for lo in range(0, n, config.batch_size):
            idx = perm[lo:lo + config.batch_size]
            xb = train_set.patches[idx]
            yb = train_set.labels[idx]
            logits = model.forward(xb, mode="train", rng=rng)
            _, grad = softmax_cross_entropy(logits, yb)
            grad /= grad.shape[0]
            grads = model.backward(grad)
            adam_step(params, grads, state)
        train_loss, train_acc, _ = evaluate(model, train_set, config.batch_size)
        if not np.isfinite(train_loss):
            raise NumericError(f"training loss is not finite at epoch {epoch}")
        val_loss = val_acc = None
        if val_set is not None:
            val_loss, val_acc, _ = evaluate(model, val_set, config.batch_size)
        record = EpochRecord(
            epoch=epoch, train_loss=train_loss, train_acc=train_acc,
            val_loss=val_loss, val_acc=val_acc,
            seconds=time.perf_counter() - t0)
        history.append(record)
        if progress is not None:
            progress(record)
    return model, history
