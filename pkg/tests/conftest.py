import csv
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from emdlabel.dataset import ImageRecord


def gray_record(values, width, height, image_id="img", role="real"):
    """ImageRecord from a flat list of 8-bit luminance values."""
    pixels = np.asarray(values, dtype=np.uint8).reshape(height, width)
    return ImageRecord(id=image_id, pixels=pixels, width=width, height=height, role=role)


def write_gray_png(path, pixels):
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="L").save(path)


def class_image(rng, mean, size=16, spread=22.0):
    """One grayscale image whose pixel intensities cluster around ``mean``."""
    shift = rng.normal(0.0, 8.0)
    pixels = rng.normal(mean + shift, spread, size=(size, size))
    return np.clip(pixels, 0, 255).astype(np.uint8)


def make_planted_dataset(
    root,
    seed=0,
    n_real_per_class=30,
    n_syn_per_class=32,
    size=16,
    reference_class="classA",
    positive_class="classB",
):
    """Write a two-prototype image dataset with known synthetic classes.

    Class A images are dark (pixel mean 90), class B images bright (mean
    165); synthetics are fresh noisy draws from the same prototypes, so
    their true class is known by construction. Returns the two manifest
    paths and the planted class per synthetic id.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    means = {reference_class: 90.0, positive_class: 165.0}

    real_rows = []
    for k in range(n_real_per_class * 2):
        label = k % 2
        cls = positive_class if label else reference_class
        path = root / f"real_{k:03d}.png"
        write_gray_png(path, class_image(rng, means[cls], size))
        real_rows.append((str(path), label))

    syn_rows = []
    plants = {}
    for k in range(n_syn_per_class * 2):
        cls = positive_class if k % 2 else reference_class
        path = root / f"syn_{k:03d}.png"
        write_gray_png(path, class_image(rng, means[cls], size))
        syn_rows.append(str(path))
        plants[str(path)] = cls

    real_csv = root / "real.csv"
    with open(real_csv, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path", "label"])
        writer.writerows(real_rows)
    syn_csv = root / "synthetic.csv"
    with open(syn_csv, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["path"])
        writer.writerows([p] for p in syn_rows)
    return real_csv, syn_csv, plants


@pytest.fixture
def planted_dataset(tmp_path):
    return make_planted_dataset(tmp_path / "data", seed=117)


@pytest.fixture
def tiny_dataset(tmp_path):
    """4 labeled reals, 2 synthetics; enough for a smoke run with folds=2."""
    return make_planted_dataset(
        tmp_path / "tiny", seed=5, n_real_per_class=2, n_syn_per_class=1, size=8
    )
