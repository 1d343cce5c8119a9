"""Training loop, optimizer, metrics and map rendering."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tree
from .data import SceneCube, extract_patch
from .errors import NumericError
from .model import (ModelConfig, ModelParams, init_params, model_backward,
                    model_forward, save_checkpoint)


def cross_entropy(logits, label):
    """Loss -log softmax(logits)[label] and its gradient wrt logits.

    label is 1-based (class ids as stored in the label map).
    """
    shifted = logits - logits.max()
    lse = np.log(np.sum(np.exp(shifted)))
    probs = np.exp(shifted - lse)
    loss = lse - shifted[label - 1]
    grad = probs.copy()
    grad[label - 1] -= 1.0
    return float(loss), grad


def lr_at_epoch(epoch, lr0, gamma):
    return lr0 * gamma ** epoch


class AdamW:
    """Decoupled weight decay plus Adam with bias-corrected moments.

    Decay is applied to the weights before the Adam update of each step.
    """

    def __init__(self, params: ModelParams, beta1=0.9, beta2=0.999,
                 eps=1e-8, weight_decay=0.0):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.m = tree.zeros_like(params)
        self.v = tree.zeros_like(params)
        self.t = 0

    def step(self, grads: ModelParams, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1 ** self.t
        c2 = 1.0 - b2 ** self.t
        it = zip(tree.iter_arrays(self.params), tree.iter_arrays(grads),
                 tree.iter_arrays(self.m), tree.iter_arrays(self.v))
        for (_, w), (_, g), (_, m), (_, v) in it:
            if self.weight_decay:
                w -= lr * self.weight_decay * w
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            w -= lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass
class TrainConfig:
    model: ModelConfig
    lr0: float = 1e-4
    lr_gamma: float = 0.995
    epochs: int = 400
    batch: int = 64
    weight_decay: float = 1e-4
    seed: int = 0
    stop_at_full_accuracy: bool = False

    def validate(self):
        if self.lr0 <= 0 or not 0 < self.lr_gamma <= 1:
            raise ValueError("lr0 must be > 0 and lr_gamma in (0, 1]")
        if self.epochs < 1 or self.batch < 1:
            raise ValueError("epochs and batch must be >= 1")


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    lr: float
    accuracy: float


def _gather_patches(cube: SceneCube, indices, patch_size):
    rows, cols = np.unravel_index(indices, cube.labels.shape)
    patches = np.empty((len(indices), patch_size, patch_size, cube.bands),
                       dtype=np.float32)
    labels = np.empty(len(indices), dtype=np.int32)
    for i, (r, c) in enumerate(zip(rows, cols)):
        p = extract_patch(cube, int(r), int(c), patch_size)
        patches[i] = p.values
        labels[i] = p.label
    return patches, labels


def train(cube: SceneCube, train_indices, config: TrainConfig,
          checkpoint_path=None, log_path=None, params=None,
          dtype=np.float32):
    """Mini-batch training over the given pixels.

    Returns (params, history). Shuffling and initialization come from
    config.seed; gradient accumulation sums in fixed index order, so runs
    with equal config and seed are byte-identical.
    """
    config.validate()
    mc = config.model
    if params is None:
        params = init_params(mc, seed=config.seed, dtype=dtype)
    patches, labels = _gather_patches(cube, np.asarray(train_indices),
                                      mc.patch)
    n = len(labels)
    rng = np.random.default_rng(config.seed + 1)
    opt = AdamW(params, weight_decay=config.weight_decay)
    history = []
    for epoch in range(config.epochs):
        lr = lr_at_epoch(epoch, config.lr0, config.lr_gamma)
        order = rng.permutation(n)
        epoch_loss = 0.0
        correct = 0
        for start in range(0, n, config.batch):
            batch = order[start:start + config.batch]
            grads = tree.zeros_like(params)
            batch_loss = 0.0
            for idx in batch:
                logits, tape = model_forward(patches[idx], params, mc)
                loss, g_logits = cross_entropy(logits, int(labels[idx]))
                if not np.isfinite(loss):
                    raise NumericError(
                        f"non-finite loss at epoch {epoch}, sample {idx}")
                batch_loss += loss
                correct += int(np.argmax(logits) + 1 == labels[idx])
                g, _ = model_backward(tape, g_logits / len(batch))
                tree.add_in_place(grads, g)
            epoch_loss += batch_loss
            opt.step(grads, lr)
        mean_loss = epoch_loss / n
        acc = correct / n
        history.append(EpochRecord(epoch, mean_loss, lr, acc))
        if config.stop_at_full_accuracy and acc == 1.0:
            break
    if log_path is not None:
        with open(log_path, "w") as fh:
            for rec in history:
                fh.write(f"{rec.epoch}\t{rec.loss:.10g}\t{rec.lr:.10g}\n")
    if checkpoint_path is not None:
        save_checkpoint(checkpoint_path, mc, params)
    return params, history


# ---------------------------------------------------------------------------
# evaluation


def predict(cube: SceneCube, indices, params: ModelParams,
            config: ModelConfig):
    """Predicted class id (1-based) per pixel index."""
    preds = np.empty(len(indices), dtype=np.int32)
    rows, cols = np.unravel_index(np.asarray(indices), cube.labels.shape)
    for i, (r, c) in enumerate(zip(rows, cols)):
        patch = extract_patch(cube, int(r), int(c), config.patch)
        logits, _ = model_forward(patch.values, params, config)
        preds[i] = int(np.argmax(logits)) + 1
    return preds


def confusion_matrix(truth, preds, classes):
    """C x C counts, rows = ground truth, cols = prediction (1-based ids)."""
    conf = np.zeros((classes, classes), dtype=np.int64)
    np.add.at(conf, (np.asarray(truth) - 1, np.asarray(preds) - 1), 1)
    return conf


def metrics_from_confusion(conf):
    """(OA, AA, kappa, per-class recall) from a confusion matrix.

    Classes without any test sample are excluded from AA with a warning;
    their per-class entry is NaN.
    """
    conf = np.asarray(conf, dtype=np.float64)
    total = conf.sum()
    oa = np.trace(conf) / total
    row = conf.sum(axis=1)
    col = conf.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.diag(conf) / row
    if np.any(row == 0):
        empty = np.flatnonzero(row == 0) + 1
        warnings.warn(f"classes {empty.tolist()} have no test samples; "
                      "excluded from AA")
    aa = np.nanmean(per_class)
    pe = np.sum(row * col) / (total * total)
    kappa = (oa - pe) / (1.0 - pe) if pe < 1.0 else 1.0
    return oa, aa, kappa, per_class


def evaluate(cube: SceneCube, test_indices, params: ModelParams,
             config: ModelConfig):
    """Confusion matrix and OA/AA/kappa over the test pixels."""
    indices = np.asarray(test_indices)
    truth = cube.labels.reshape(-1)[indices]
    preds = predict(cube, indices, params, config)
    conf = confusion_matrix(truth, preds, config.classes)
    oa, aa, kappa, per_class = metrics_from_confusion(conf)
    return {
        "confusion": conf,
        "oa": float(oa),
        "aa": float(aa),
        "kappa": float(kappa),
        "per_class": per_class.tolist(),
    }


def render_class_map(cube: SceneCube, params: ModelParams,
                     config: ModelConfig, palette, out_path,
                     all_pixels=False):
    """Write an 8-bit RGB map of predictions; unlabeled pixels are black."""
    from .errors import ConfigError
    if len(palette) != config.classes:
        raise ConfigError(
            f"palette has {len(palette)} entries but model has "
            f"{config.classes} classes")
    flat_labels = cube.labels.reshape(-1)
    if all_pixels:
        indices = np.arange(flat_labels.size)
        preds = np.empty(flat_labels.size, dtype=np.int32)
        rows, cols = np.unravel_index(indices, cube.labels.shape)
        for i, (r, c) in enumerate(zip(rows, cols)):
            half = config.patch // 2
            vals = cube.values[np.ix_(
                [_reflect(r + dr, cube.height)
                 for dr in range(-half, half + 1)],
                [_reflect(c + dc, cube.width)
                 for dc in range(-half, half + 1)])]
            logits, _ = model_forward(vals, params, config)
            preds[i] = int(np.argmax(logits)) + 1
    else:
        indices = np.flatnonzero(flat_labels > 0)
        preds = predict(cube, indices, params, config)
    img = np.zeros((cube.height, cube.width, 3), dtype=np.uint8)
    colors = np.asarray(palette, dtype=np.uint8)
    rows, cols = np.unravel_index(indices, cube.labels.shape)
    img[rows, cols] = colors[preds - 1]
    _write_image(img, out_path)
    return img


def _reflect(i, n):
    from .data import _reflect_index
    return _reflect_index(i, n)


def _write_image(img, out_path):
    try:
        from PIL import Image
        Image.fromarray(img).save(out_path)
    except ImportError:
        with open(out_path, "wb") as fh:  # PPM fallback
            fh.write(f"P6\n{img.shape[1]} {img.shape[0]}\n255\n"
                     .encode("ascii"))
            fh.write(img.tobytes())
