"""Manifest parsing and image loading.

Labeled real images and unlabeled synthetic images are listed in two CSV
manifests (``path,label`` and ``path`` respectively) and decoded into 8-bit
pixel records. Row numbers in error messages count file lines, header
included.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError


class ManifestError(ValueError):
    """A manifest file is missing or violates the CSV schema."""


class ImageDecodeError(ValueError):
    """An image file is missing, truncated, or not 8-bit PNG/JPEG."""


@dataclass(frozen=True)
class ImageRecord:
    """One decoded image: grayscale (h, w) or RGB (h, w, 3) uint8 pixels."""

    id: str
    pixels: np.ndarray
    width: int
    height: int
    role: str  # "real" | "synthetic"

    def __post_init__(self):
        if self.role not in ("real", "synthetic"):
            raise ValueError(f"role must be 'real' or 'synthetic', got {self.role!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"zero-area image {self.id!r}")
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.dtype != np.uint8:
            raise ValueError(f"pixels of {self.id!r} must be a uint8 array")
        expected = {(self.height, self.width), (self.height, self.width, 3)}
        if px.shape not in expected:
            raise ValueError(
                f"pixel buffer shape {px.shape} does not match declared "
                f"{self.height}x{self.width} for image {self.id!r}"
            )

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]


@dataclass
class Manifest:
    """Validated file lists for one labeling run.

    ``real_entries`` pairs each labeled image path with its 0/1 label;
    label 0 means ``reference_class_name`` and label 1 means
    ``positive_class_name``. ``synthetic_entries`` lists unlabeled paths.
    """

    real_entries: list[tuple[str, int]]
    synthetic_entries: list[str]
    attribute_name: str = "attribute"
    positive_class_name: str = "1"
    reference_class_name: str = "0"

    def __post_init__(self):
        seen: dict[str, str] = {}
        for path, label in self.real_entries:
            if label not in (0, 1):
                raise ManifestError(f"label outside {{0,1}} for {path!r}")
            if path in seen:
                raise ManifestError(f"duplicate id {path!r}")
            seen[path] = "real"
        for path in self.synthetic_entries:
            if path in seen:
                if seen[path] == "real":
                    raise ManifestError(
                        f"path {path!r} appears in both real and synthetic lists"
                    )
                raise ManifestError(f"duplicate id {path!r}")
            seen[path] = "synthetic"
        labels = {label for _, label in self.real_entries}
        for cls in (0, 1):
            if cls not in labels:
                raise ManifestError(f"class {cls} absent from real entries")

    @property
    def labels(self) -> list[int]:
        return [label for _, label in self.real_entries]

    def class_name(self, label: int) -> str:
        return self.positive_class_name if label == 1 else self.reference_class_name


def load_manifest(
    real_path,
    synthetic_path,
    attribute_name: str = "attribute",
    positive_class_name: str = "1",
    reference_class_name: str = "0",
) -> Manifest:
    """Parse the real and synthetic manifest CSVs into a validated Manifest.

    Raises ManifestError with the offending row number on any schema
    violation (bad header, bad label, duplicate path, missing class).
    """
    real_entries = []
    for row_no, row in _read_csv(real_path, ("path", "label")):
        path, label = row
        if label not in ("0", "1"):
            raise ManifestError(
                f"label outside {{0,1}} at row {row_no} of {real_path}: {label!r}"
            )
        real_entries.append((path, int(label)))
    synthetic_entries = [row[0] for _, row in _read_csv(synthetic_path, ("path",))]
    try:
        return Manifest(
            real_entries=real_entries,
            synthetic_entries=synthetic_entries,
            attribute_name=attribute_name,
            positive_class_name=positive_class_name,
            reference_class_name=reference_class_name,
        )
    except ManifestError as exc:
        raise ManifestError(f"{exc} (manifests {real_path}, {synthetic_path})") from exc


def save_manifest(manifest: Manifest, real_path, synthetic_path) -> None:
    """Write the two manifest CSVs back out (inverse of load_manifest)."""
    with open(real_path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label"])
        writer.writerows(manifest.real_entries)
    with open(synthetic_path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path"])
        writer.writerows([p] for p in manifest.synthetic_entries)


def load_images(manifest: Manifest) -> list[ImageRecord]:
    """Decode every manifest entry, reals first, in manifest order."""
    records = [
        _decode(path, "real") for path, _ in manifest.real_entries
    ]
    records.extend(_decode(path, "synthetic") for path in manifest.synthetic_entries)
    return records


def _read_csv(path, expected_header):
    if not Path(path).is_file():
        raise ManifestError(f"manifest file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ManifestError(f"empty manifest file: {path}") from None
        if tuple(h.strip() for h in header) != expected_header:
            raise ManifestError(
                f"bad header at row 1 of {path}: expected {','.join(expected_header)}"
            )
        rows = []
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(expected_header):
                raise ManifestError(
                    f"expected {len(expected_header)} fields at row {row_no} of {path}"
                )
            rows.append((row_no, tuple(cell.strip() for cell in row)))
    return rows


def _decode(path: str, role: str) -> ImageRecord:
    if not Path(path).is_file():
        raise ImageDecodeError(f"image file not found: {path}")
    try:
        with Image.open(path) as img:
            img.load()
            if img.mode != "L":
                img = img.convert("RGB")
            pixels = np.asarray(img, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"cannot decode image {path}: {exc}") from exc
    if pixels.size == 0:
        raise ImageDecodeError(f"zero-area image: {path}")
    height, width = pixels.shape[:2]
    return ImageRecord(id=path, pixels=pixels, width=width, height=height, role=role)
