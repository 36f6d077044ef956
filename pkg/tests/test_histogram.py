import numpy as np
import pytest

from emdlabel.histogram import (
    CostMatrix,
    Histogram,
    bin_distance_costs,
    luminance,
    to_histogram,
    write_histograms_csv,
)

from conftest import gray_record


def test_all_black_image():
    img = gray_record([0, 0, 0, 0], width=2, height=2)
    hist = to_histogram(img, bins=4)
    assert hist.mass.tolist() == [1.0, 0.0, 0.0, 0.0]


def test_half_black_half_white():
    img = gray_record([0, 0, 255, 255], width=2, height=2)
    hist = to_histogram(img, bins=2)
    assert hist.mass.tolist() == [0.5, 0.5]


def test_mass_sums_to_one():
    rng = np.random.default_rng(0)
    for _ in range(20):
        h, w = rng.integers(1, 9, size=2)
        img = gray_record(rng.integers(0, 256, size=h * w), width=w, height=h)
        hist = to_histogram(img, bins=int(rng.integers(2, 65)))
        assert abs(hist.mass.sum() - 1.0) <= 1e-9
        assert np.all(hist.mass >= 0)


def test_permutation_invariance():
    rng = np.random.default_rng(1)
    values = rng.integers(0, 256, size=24)
    img = gray_record(values, width=6, height=4)
    shuffled = gray_record(rng.permutation(values), width=4, height=6)
    assert np.array_equal(to_histogram(img, 16).mass, to_histogram(shuffled, 16).mass)


def test_tiling_invariance():
    rng = np.random.default_rng(2)
    values = rng.integers(0, 256, size=12)
    img = gray_record(values, width=4, height=3)
    doubled = gray_record(np.concatenate([values, values]), width=4, height=6)
    assert np.array_equal(to_histogram(img, 8).mass, to_histogram(doubled, 8).mass)


def test_rgb_luminance_rounding():
    # pure red: round(0.299 * 255) = 76 -> bin 76 * 64 // 256 = 19
    pixels = np.zeros((1, 1, 3), dtype=np.uint8)
    pixels[0, 0, 0] = 255
    assert luminance(pixels)[0, 0] == 76
    from emdlabel.dataset import ImageRecord

    img = ImageRecord(id="red", pixels=pixels, width=1, height=1, role="real")
    hist = to_histogram(img, bins=64)
    assert hist.mass[19] == 1.0


def test_bins_validation():
    img = gray_record([0], width=1, height=1)
    with pytest.raises(ValueError, match="bins"):
        to_histogram(img, bins=1)


def test_cost_matrix_small_cases():
    c = bin_distance_costs(3, exponent=1)
    assert c.costs.tolist() == [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
    assert c.symmetric
    c2 = bin_distance_costs(2, exponent=2)
    assert c2.costs.tolist() == [[0, 1], [1, 0]]


def test_cost_matrix_invariants():
    for bins in (2, 5, 17):
        c = bin_distance_costs(bins)
        assert np.all(np.diagonal(c.costs) == 0)
        assert np.array_equal(c.costs, c.costs.T)
        assert np.all(c.costs >= 0)
    with pytest.raises(ValueError, match="exponent"):
        bin_distance_costs(4, exponent=3)


def test_histogram_type_validation():
    with pytest.raises(ValueError, match="nonnegative"):
        Histogram(mass=np.array([1.5, -0.5]), bins=2)
    with pytest.raises(ValueError, match="sums to"):
        Histogram(mass=np.array([0.6, 0.6]), bins=2)
    with pytest.raises(ValueError, match="diagonal"):
        CostMatrix(costs=np.array([[1.0, 0.0], [0.0, 1.0]]), symmetric=True)
    with pytest.raises(ValueError, match="symmetric"):
        CostMatrix(costs=np.array([[0.0, 2.0], [1.0, 0.0]]), symmetric=True)


def test_histogram_csv_dump(tmp_path):
    img = gray_record([0, 255], width=2, height=1)
    hist = to_histogram(img, bins=2)
    out = tmp_path / "hists.csv"
    write_histograms_csv(out, ["img"], [hist])
    lines = out.read_text().splitlines()
    assert lines[0] == "id,b0,b1"
    assert lines[1] == "img,0.5,0.5"
