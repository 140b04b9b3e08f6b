"""Labeled image collections, gray-level quantization, and seeded splits.

Datasets live on disk as ``<root>/<class_name>/<image file>``, or are
described by a CSV manifest with header ``id,label,path``.  Images are
reduced to luminance (ITU BT.601 weights) and held as float intensities
in [0, 1].  Splits are drawn with a PCG64 generator so partitions
reproduce across platforms for a given seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, DataError, SplitError
from .validation import as_intensity_grid

# BT.601 luma weights for RGB -> gray reduction.
_LUMA = np.array([0.299, 0.587, 0.114])

MIN_IMAGE_SIDE = 16


@dataclass
class ImageSample:
    """One labeled grayscale image with intensities in [0, 1]."""

    id: str
    label: str
    pixels: np.ndarray

    def __post_init__(self):
        if not self.label:
            raise DataError(f"sample {self.id!r} has an empty label")
        self.pixels = as_intensity_grid(self.pixels, name=f"sample {self.id!r}")
        h, w = self.pixels.shape
        if h < MIN_IMAGE_SIDE or w < MIN_IMAGE_SIDE:
            raise DataError(
                f"sample {self.id!r} is {h}x{w}; at least "
                f"{MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE} required"
            )


@dataclass
class QuantizedImage:
    """Integer gray-level grid with values in [0, levels - 1]."""

    levels: int
    data: np.ndarray

    def __post_init__(self):
        if self.levels < 2:
            raise ValueError(f"levels must be >= 2, got {self.levels}")
        self.data = np.asarray(self.data)
        if self.data.ndim != 2:
            raise ValueError(f"quantized data must be 2-D, got shape {self.data.shape}")
        if not np.issubdtype(self.data.dtype, np.integer):
            raise ValueError("quantized data must be an integer array")
        if self.data.size and (self.data.min() < 0 or self.data.max() >= self.levels):
            raise DataError(
                f"quantized values must lie in [0, {self.levels - 1}]"
            )


@dataclass
class SplitSpec:
    """Seeded train/test partition parameters."""

    seed: int
    train_fraction: float = 0.6

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )


def _to_gray(img: Image.Image) -> np.ndarray:
    """Decode a PIL image into [0, 1] luminance."""
    if img.mode in ("RGB", "RGBA", "P", "CMYK"):
        arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
        return arr @ _LUMA
    if img.mode in ("I;16", "I;16B", "I;16L"):
        return np.asarray(img, dtype=np.float64) / 65535.0
    if img.mode == "I":
        arr = np.asarray(img, dtype=np.float64)
        return arr / max(arr.max(), 1.0)
    if img.mode == "F":
        return np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    # L, LA, 1 and friends
    return np.asarray(img.convert("L"), dtype=np.float64) / 255.0


def _load_image_file(path: Path, sample_id: str, label: str) -> ImageSample:
    try:
        with Image.open(path) as img:
            pixels = _to_gray(img)
    except (UnidentifiedImageError, OSError) as exc:
        raise DataError(f"cannot decode image file {path}: {exc}") from exc
    return ImageSample(id=sample_id, label=label, pixels=pixels)


def load_dataset(root_path) -> list[ImageSample]:
    """Load samples from a ``<root>/<class>/<file>`` directory layout.

    Labels come from the class directory name and ids are the file path
    relative to the root.  If the root contains a ``manifest.csv`` it is
    used instead of directory discovery (see load_manifest).
    """
    root = Path(root_path)
    if not root.is_dir():
        raise ConfigError(f"dataset root {root} is not a directory")

    manifest = root / "manifest.csv"
    if manifest.is_file():
        return load_manifest(manifest)

    class_dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataError(f"dataset root {root} contains no class directories")

    samples = []
    for class_dir in class_dirs:
        files = sorted(p for p in class_dir.iterdir() if p.is_file())
        if not files:
            raise DataError(f"class directory {class_dir} contains no images")
        for path in files:
            rel = path.relative_to(root).as_posix()
            samples.append(_load_image_file(path, sample_id=rel, label=class_dir.name))
    return samples


def load_manifest(manifest_path) -> list[ImageSample]:
    """Load samples from a CSV manifest with header ``id,label,path``.

    Relative paths in the manifest resolve against the manifest's own
    directory.
    """
    manifest = Path(manifest_path)
    if not manifest.is_file():
        raise ConfigError(f"manifest {manifest} does not exist")
    base = manifest.parent
    samples = []
    with open(manifest, newline="") as fh:
        reader = csv.DictReader(fh)
        expected = ["id", "label", "path"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ConfigError(
                f"manifest {manifest} must have header 'id,label,path', "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            path = Path(row["path"])
            if not path.is_absolute():
                path = base / path
            samples.append(_load_image_file(path, sample_id=row["id"], label=row["label"]))
    if not samples:
        raise DataError(f"manifest {manifest} lists no samples")
    return samples


def quantize(sample: ImageSample | np.ndarray, levels: int) -> QuantizedImage:
    """Uniform-width quantization of [0, 1] intensities to ``levels`` bins.

    Cell value is floor(intensity * levels) clamped to levels - 1, which
    is monotone in intensity.
    """
    if not 2 <= levels <= 256:
        raise ValueError(f"levels must be in [2, 256], got {levels}")
    pixels = sample.pixels if isinstance(sample, ImageSample) else np.asarray(sample)
    pixels = as_intensity_grid(pixels)
    data = np.minimum(np.floor(pixels * levels).astype(np.int64), levels - 1)
    return QuantizedImage(levels=levels, data=data)


def split_ids(
    labels_by_id: dict[str, str], spec: SplitSpec
) -> tuple[list[str], list[str]]:
    """Deterministic seeded shuffle of labeled ids into (train, test).

    The partition is a function of the id set and the seed only: ids are
    sorted, shuffled with PCG64(seed), and the first
    round(train_fraction * N) go to training (round half up).  A split
    that leaves some class absent from training raises SplitError; no
    automatic re-draw is attempted.
    """
    if len(set(labels_by_id.values())) < 2:
        raise DataError("at least 2 classes are required for a split")

    ids = sorted(labels_by_id)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    order = rng.permutation(len(ids))
    n_train = math.floor(spec.train_fraction * len(ids) + 0.5)
    train_ids = [ids[i] for i in order[:n_train]]
    test_ids = [ids[i] for i in order[n_train:]]

    train_classes = {labels_by_id[i] for i in train_ids}
    missing = sorted(set(labels_by_id.values()) - train_classes)
    if missing:
        raise SplitError(
            f"seed {spec.seed} leaves classes {missing} absent from training"
        )
    return train_ids, test_ids


def permute_split(
    samples: list[ImageSample], spec: SplitSpec
) -> tuple[list[str], list[str]]:
    """Seeded train/test partition of a sample list; see split_ids."""
    labels = {}
    for s in samples:
        if s.id in labels:
            raise DataError(f"duplicate sample id {s.id!r}")
        labels[s.id] = s.label
    return split_ids(labels, spec)
