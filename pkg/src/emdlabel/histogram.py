"""Normalized luminance histograms and the transport ground-cost matrix."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dataset import ImageRecord

MASS_TOL = 1e-9

# Rec. 601 luma weights; any fixed convention works, this one is bit-stable.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class Histogram:
    """Nonnegative mass over ``bins`` equal-width luminance buckets, summing to 1."""

    mass: np.ndarray
    bins: int

    def __post_init__(self):
        m = self.mass
        if m.ndim != 1 or len(m) != self.bins:
            raise ValueError(f"mass length {m.shape} does not match bins={self.bins}")
        if np.any(m < 0):
            raise ValueError("histogram mass must be nonnegative")
        total = float(m.sum())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"histogram mass sums to {total}, expected 1")


@dataclass(frozen=True)
class CostMatrix:
    """Square nonnegative ground-distance matrix with zero diagonal."""

    costs: np.ndarray
    symmetric: bool

    def __post_init__(self):
        c = self.costs
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError(f"cost matrix must be square, got shape {c.shape}")
        if np.any(c < 0):
            raise ValueError("costs must be nonnegative")
        if np.any(np.diagonal(c) != 0):
            raise ValueError("cost matrix diagonal must be zero")
        if self.symmetric and not np.array_equal(c, c.T):
            raise ValueError("cost matrix flagged symmetric but is not")

    @property
    def bins(self) -> int:
        return self.costs.shape[0]


def luminance(pixels: np.ndarray) -> np.ndarray:
    """Integer luminance per pixel: raw value for grayscale, rounded Rec. 601 for RGB."""
    if pixels.ndim == 2:
        return pixels.astype(np.int64)
    r, g, b = LUMA_WEIGHTS
    lum = r * pixels[..., 0] + g * pixels[..., 1] + b * pixels[..., 2]
    return np.rint(lum).astype(np.int64)


def to_histogram(image: ImageRecord, bins: int = 64) -> Histogram:
    """Bucket the image's luminance into ``bins`` equal-width bins over [0, 255].

    Counts are divided by the pixel count, so the result is invariant to
    image size and pixel order.
    """
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    lum = luminance(image.pixels).ravel()
    # exact integer bucketing: value v lands in bin v * bins // 256
    idx = (lum * bins) // 256
    counts = np.bincount(idx, minlength=bins)
    mass = counts / counts.sum()
    return Histogram(mass=mass, bins=bins)


def bin_distance_costs(bins: int, exponent: int = 1) -> CostMatrix:
    """Ground cost |i - j|**exponent between bin indices (exponent 1 or 2)."""
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if exponent not in (1, 2):
        raise ValueError(f"unsupported exponent {exponent!r}, expected 1 or 2")
    idx = np.arange(bins)
    costs = np.abs(idx[:, None] - idx[None, :]).astype(float) ** exponent
    return CostMatrix(costs=costs, symmetric=True)


def write_histograms_csv(path, ids, histograms) -> None:
    """Dump one row per image (``id,b0,...``) for external verification."""
    histograms = list(histograms)
    ids = list(ids)
    if len(ids) != len(histograms):
        raise ValueError("ids and histograms must have equal length")
    bins = histograms[0].bins if histograms else 0
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id"] + [f"b{k}" for k in range(bins)])
        for image_id, hist in zip(ids, histograms):
            writer.writerow([image_id] + [repr(v) for v in hist.mass.tolist()])
