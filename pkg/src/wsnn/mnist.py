"""MNIST IDX parsing and brightness balancing."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049
GZIP_MAGIC = b"\x1f\x8b"


class IdxError(ValueError):
    pass


class BadMagic(IdxError):
    pass


class TruncatedFile(IdxError):
    pass


class CountMismatch(IdxError):
    pass


@dataclass
class RawDataset:
    images: np.ndarray  # (n, rows, cols) uint8
    labels: np.ndarray  # (n,) uint8
    split: str = "train"

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise CountMismatch(f"{len(self.images)} images vs {len(self.labels)} labels")
        if self.labels.size and self.labels.max() > 9:
            raise ValueError("labels must be digits 0..9")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "RawDataset":
        return RawDataset(self.images[idx], self.labels[idx], self.split)


@dataclass
class NormalizedDataset:
    images: np.ndarray  # (n, rows, cols) float64 in [0, 1]
    labels: np.ndarray
    target_total: float
    split: str = "train"

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "NormalizedDataset":
        return NormalizedDataset(self.images[idx], self.labels[idx], self.target_total, self.split)


def _read_bytes(path) -> bytes:
    data = Path(path).read_bytes()
    if data[:2] == GZIP_MAGIC:
        data = gzip.decompress(data)
    return data


def _parse(data: bytes, magic: int, ndim: int, path) -> np.ndarray:
    header_len = 4 + 4 * ndim
    if len(data) < 4:
        raise TruncatedFile(f"{path}: header needs {header_len} bytes, got {len(data)}")
    found = struct.unpack(">I", data[:4])[0]
    if found != magic:
        raise BadMagic(f"{path}: magic {found}, expected {magic}")
    if len(data) < header_len:
        raise TruncatedFile(f"{path}: header needs {header_len} bytes, got {len(data)}")
    dims = struct.unpack(f">{ndim}I", data[4:header_len])
    n_bytes = int(np.prod(dims))
    payload = data[header_len:header_len + n_bytes]
    if len(payload) < n_bytes:
        raise TruncatedFile(f"{path}: payload has {len(payload)} bytes, header promises {n_bytes}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims).copy()


def load_idx(images_path, labels_path, split: str = "train") -> RawDataset:
    """Read an IDX image/label file pair (raw or gzipped)."""
    images = _parse(_read_bytes(images_path), IMAGE_MAGIC, 3, images_path)
    labels = _parse(_read_bytes(labels_path), LABEL_MAGIC, 1, labels_path)
    return RawDataset(images, labels, split)


def idx_bytes(array: np.ndarray) -> bytes:
    """Serialize a uint8 array of rank 1 or 3 to IDX bytes."""
    magic = {1: LABEL_MAGIC, 3: IMAGE_MAGIC}[array.ndim]
    header = struct.pack(f">I{array.ndim}I", magic, *array.shape)
    return header + np.ascontiguousarray(array, dtype=np.uint8).tobytes()


def save_idx(dataset: RawDataset, images_path, labels_path) -> None:
    Path(images_path).write_bytes(idx_bytes(dataset.images))
    Path(labels_path).write_bytes(idx_bytes(dataset.labels))


def find_split(directory, split: str) -> tuple[Path, Path]:
    """Locate the standard MNIST file pair for ``split`` ('train' or 't10k'/'test')."""
    prefix = "train" if split == "train" else "t10k"
    directory = Path(directory)
    for suffix in ("", ".gz"):
        for sep in ("-", "."):
            img = directory / f"{prefix}-images{sep}idx3-ubyte{suffix}"
            lab = directory / f"{prefix}-labels{sep}idx1-ubyte{suffix}"
            if img.exists() and lab.exists():
                return img, lab
    raise FileNotFoundError(f"no {prefix} IDX pair in {directory}")


def equalize(images: np.ndarray, target_total: float, chunk: int = 4096) -> np.ndarray:
    """Scale each image so its intensity sum hits ``target_total``, clamping at 1.

    The scale factor is solved exactly for the clamped sum
    ``sum(min(s * p, 1)) == target_total``. Images whose nonzero pixels cannot
    reach the target even when saturated end up with all nonzero pixels at 1.
    All-zero images pass through unchanged.
    """
    shape = images.shape
    flat = np.asarray(images, dtype=np.float64).reshape(len(images), -1)
    out = np.empty_like(flat)
    for start in range(0, len(flat), chunk):
        x = flat[start:start + chunk]
        p = -np.sort(-x, axis=1)
        clamped_mass = np.concatenate([np.zeros((len(p), 1)), np.cumsum(p, axis=1)[:, :-1]], axis=1)
        total = p.sum(axis=1, keepdims=True)
        k = np.arange(p.shape[1])
        free = total - clamped_mass
        valid = (p > 0) & (free > 0)
        # sum(min(s p, 1)) is the lower envelope of k + s * free_k; its root is the largest per-k root
        with np.errstate(divide="ignore", invalid="ignore"):
            roots = np.where(valid, (target_total - k) / free, -np.inf)
        scale = roots.max(axis=1)
        scale = np.where(np.isfinite(scale) & (scale > 0), scale, 1.0)
        nonzero = x > 0
        y = np.minimum(x * scale[:, None], 1.0)
        # saturated case: root set by the last nonzero pixel may leave it fractionally short of 1
        saturate = nonzero.sum(axis=1) <= target_total
        y[saturate] = nonzero[saturate].astype(np.float64)
        out[start:start + chunk] = y
    return out.reshape(shape)


def normalize(data, target_total: float | None = None) -> NormalizedDataset:
    """Scale pixels to [0, 1] and equalize per-image intensity sums.

    ``target_total`` defaults to the mean intensity sum of ``data`` (or the
    stored target of an already normalized dataset); pass the training
    split's value when normalizing a test split.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    if isinstance(data, NormalizedDataset):
        images = data.images
        if target_total is None:
            target_total = data.target_total
    else:
        images = data.images.astype(np.float64) / 255.0
    if target_total is None:
        target_total = float(images.reshape(len(images), -1).sum(axis=1).mean())
    return NormalizedDataset(equalize(images, target_total), data.labels, float(target_total), data.split)
