"""Scene storage, normalization, patch extraction and split construction.

File formats (all little-endian):

- cube:   magic ``HSICUBE1``, u32 H, W, K, then H*W*K float32 values in
  row-major order with bands interleaved per pixel;
- labels: magic ``HSILBL1\\0``, u32 H, W, then H*W u16 class ids
  (0 = unlabeled);
- manifest: UTF-8 JSON with class names, RGB palette, per-class split
  counts and optional explicit split masks (flat row-major indices).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (ConsistencyError, ConfigError, DegenerateBandError,
                     FormatError, SplitError)

CUBE_MAGIC = b"HSICUBE1"
LABEL_MAGIC = b"HSILBL1\0"


@dataclass
class SceneCube:
    """An H x W x K scene plus its H x W label map (0 = unlabeled)."""

    values: np.ndarray  # (H, W, K) float
    labels: np.ndarray  # (H, W) int

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def bands(self) -> int:
        return self.values.shape[2]

    def validate(self, num_classes=None):
        if self.values.shape[:2] != self.labels.shape:
            raise ConsistencyError(
                f"cube dims {self.values.shape[:2]} != label dims "
                f"{self.labels.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConsistencyError("cube contains non-finite values")
        if num_classes is not None and self.labels.max(initial=0) > num_classes:
            raise ConsistencyError(
                f"label id {int(self.labels.max())} exceeds class count "
                f"{num_classes}")


@dataclass
class Patch:
    values: np.ndarray  # (P, P, K)
    center_row: int
    center_col: int
    label: int


@dataclass
class SplitSpec:
    train_counts: list  # per class, index 0 = class 1
    test_counts: list
    seed: int = 0
    mode: str = "disjoint"


@dataclass
class Manifest:
    class_names: list
    palette: list  # list of [r, g, b]
    train_counts: list
    test_counts: list
    train_indices: list | None = None  # explicit masks override sampling
    test_indices: list | None = None
    name: str = ""

    @property
    def num_classes(self) -> int:
        return len(self.class_names)


# ---------------------------------------------------------------------------
# binary IO


def _read_exact(fh, n, what):
    buf = fh.read(n)
    if len(buf) != n:
        raise FormatError(f"truncated file: expected {n} bytes of {what}, "
                          f"got {len(buf)}")
    return buf


def write_cube(path, values):
    values = np.asarray(values, dtype=np.float32)
    H, W, K = values.shape
    with open(path, "wb") as fh:
        fh.write(CUBE_MAGIC)
        fh.write(struct.pack("<III", H, W, K))
        fh.write(np.ascontiguousarray(values).tobytes())


def write_labels(path, labels):
    labels = np.asarray(labels, dtype=np.uint16)
    H, W = labels.shape
    with open(path, "wb") as fh:
        fh.write(LABEL_MAGIC)
        fh.write(struct.pack("<II", H, W))
        fh.write(np.ascontiguousarray(labels).tobytes())


def load_scene(cube_path, labels_path=None) -> SceneCube:
    """Read a cube file (and its label file) into a SceneCube.

    With labels_path omitted, ``<cube stem>.hsilbl`` next to the cube is
    used.
    """
    cube_path = Path(cube_path)
    if labels_path is None:
        labels_path = cube_path.with_suffix(".hsilbl")
    with open(cube_path, "rb") as fh:
        magic = fh.read(8)
        if magic != CUBE_MAGIC:
            raise FormatError(f"bad cube magic {magic!r}")
        H, W, K = struct.unpack("<III", _read_exact(fh, 12, "cube header"))
        raw = _read_exact(fh, 4 * H * W * K, "cube payload")
        values = np.frombuffer(raw, dtype="<f4").reshape(H, W, K).copy()
    with open(labels_path, "rb") as fh:
        magic = fh.read(8)
        if magic != LABEL_MAGIC:
            raise FormatError(f"bad label magic {magic!r}")
        lh, lw = struct.unpack("<II", _read_exact(fh, 8, "label header"))
        raw = _read_exact(fh, 2 * lh * lw, "label payload")
        labels = np.frombuffer(raw, dtype="<u2").reshape(lh, lw) \
            .astype(np.int32)
    if (lh, lw) != (H, W):
        raise ConsistencyError(
            f"label dims ({lh}, {lw}) != cube dims ({H}, {W})")
    return SceneCube(values=values, labels=labels)


def load_manifest(path) -> Manifest:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return Manifest(
        class_names=doc["class_names"],
        palette=doc["palette"],
        train_counts=doc["train_counts"],
        test_counts=doc["test_counts"],
        train_indices=doc.get("train_indices"),
        test_indices=doc.get("test_indices"),
        name=doc.get("name", ""),
    )


def save_manifest(path, manifest: Manifest):
    doc = {
        "name": manifest.name,
        "class_names": manifest.class_names,
        "palette": manifest.palette,
        "train_counts": manifest.train_counts,
        "test_counts": manifest.test_counts,
    }
    if manifest.train_indices is not None:
        doc["train_indices"] = manifest.train_indices
        doc["test_indices"] = manifest.test_indices
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


# ---------------------------------------------------------------------------
# normalization and patches


def normalize_bands(cube: SceneCube) -> SceneCube:
    """Standardize each band to mean 0, variance 1 over the whole scene."""
    flat = cube.values.reshape(-1, cube.bands).astype(np.float64)
    mean = flat.mean(axis=0)
    var = flat.var(axis=0)
    bad = np.flatnonzero(var == 0.0)
    if bad.size:
        raise DegenerateBandError(
            f"band {int(bad[0])} is constant and cannot be standardized")
    out = (flat - mean) / np.sqrt(var)
    values = out.reshape(cube.values.shape).astype(cube.values.dtype)
    return SceneCube(values=values, labels=cube.labels)


def _reflect_index(i, n):
    """Mirror reflection about the borders: -1 -> 1, n -> n-2."""
    if n == 1:
        return 0
    period = 2 * (n - 1)
    i = i % period
    if i >= n:
        i = period - i
    return i


def extract_patch(cube: SceneCube, row, col, side) -> Patch:
    """P x P x K window centered at (row, col), mirror-padded at borders."""
    if side % 2 == 0:
        raise ConfigError(f"patch size must be odd, got {side}")
    label = int(cube.labels[row, col])
    if label == 0:
        raise SplitError(f"center pixel ({row}, {col}) is unlabeled")
    half = side // 2
    rows = [_reflect_index(r, cube.height)
            for r in range(row - half, row + half + 1)]
    cols = [_reflect_index(c, cube.width)
            for c in range(col - half, col + half + 1)]
    values = cube.values[np.ix_(rows, cols)]
    return Patch(values=values, center_row=row, center_col=col, label=label)


# ---------------------------------------------------------------------------
# splits


def make_split(cube: SceneCube, spec: SplitSpec, manifest: Manifest = None):
    """Per-class disjoint train/test index sets over the flattened scene.

    Explicit masks in the manifest override sampling. Sampling is uniform
    without replacement, driven by one generator seeded from spec.seed, so
    the result is deterministic.
    """
    if manifest is not None and manifest.train_indices is not None:
        train = np.asarray(manifest.train_indices, dtype=np.int64)
        test = np.asarray(manifest.test_indices, dtype=np.int64)
        if np.intersect1d(train, test).size:
            raise SplitError("explicit split masks overlap")
        return train, test
    labels = cube.labels.reshape(-1)
    rng = np.random.default_rng(spec.seed)
    train_parts, test_parts = [], []
    for cls in range(1, len(spec.train_counts) + 1):
        idx = np.flatnonzero(labels == cls)
        n_train = spec.train_counts[cls - 1]
        n_test = spec.test_counts[cls - 1]
        if n_train + n_test > idx.size:
            raise SplitError(
                f"class {cls}: requested {n_train}+{n_test} samples but only "
                f"{idx.size} labeled pixels exist")
        perm = rng.permutation(idx)
        train_parts.append(np.sort(perm[:n_train]))
        test_parts.append(np.sort(perm[n_train:n_train + n_test]))
    return np.concatenate(train_parts), np.concatenate(test_parts)


# ---------------------------------------------------------------------------
# synthetic fixtures (used by tests and demos; no real scene required)


def synthetic_scene(height=32, width=32, bands=16, classes=4, seed=0,
                    unlabeled_fraction=0.1) -> SceneCube:
    """A scene whose classes have distinct spectral signatures plus noise."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(1, classes + 1, size=(height, width))
    labels[rng.random((height, width)) < unlabeled_fraction] = 0
    signatures = rng.normal(0.0, 1.0, size=(classes + 1, bands))
    values = signatures[labels] + 0.1 * rng.normal(
        0.0, 1.0, size=(height, width, bands))
    return SceneCube(values=values.astype(np.float32),
                     labels=labels.astype(np.int32))
