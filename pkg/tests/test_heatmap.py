import numpy as np
import pytest

from oracles import otsu_brute_force
from wsoleval.heatmap import (
    DegenerateMapError,
    MapFormatError,
    ThresholdGrid,
    binarize,
    find_map,
    load_map,
    normalize,
    otsu_threshold,
    read_wslm,
    write_wslm,
)


@pytest.mark.parametrize("raw,expected", [
    ([[0, 5, 10]], [[0, 0.5, 1]]),
    ([[-2, 0, 2]], [[0, 0.5, 1]]),
])
def test_normalize_examples(raw, expected):
    n = normalize(raw)
    assert n.values.tolist() == expected and not n.degenerate


def test_normalize_constant_is_flagged():
    n = normalize([[3, 3, 3]])
    assert n.degenerate and n.values.tolist() == [[0, 0, 0]]


def test_normalize_rejects_bad_input():
    with pytest.raises(ValueError):
        normalize([[1, float("nan")]])
    with pytest.raises(ValueError):
        normalize([1, 2, 3])


def test_normalize_affine_invariance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        raw = rng.integers(-100, 100, size=(6, 7)).astype(float)
        scale = 2.0 ** int(rng.integers(-4, 5))
        shifted = raw * scale + float(rng.integers(-50, 50))
        assert np.array_equal(normalize(raw).values, normalize(shifted).values)


def test_binarize_examples():
    n = normalize([[0, 5, 10]])
    assert binarize(n, 0.0).all()
    assert binarize(n, 0.5).tolist() == [[False, True, True]]
    m = normalize([[0, 0.49, 1]])
    assert binarize(m, 0.5).tolist() == [[False, False, True]]
    with pytest.raises(ValueError):
        binarize(n, 1.5)


def test_threshold_grid():
    g = ThresholdGrid(4)
    assert g.thresholds.tolist() == [0, 0.25, 0.5, 0.75]
    assert len(ThresholdGrid()) == 1000
    with pytest.raises(ValueError):
        ThresholdGrid(0)


def test_otsu_bimodal_has_zero_within_variance():
    vals = np.array([0.1] * 50 + [0.9] * 50).reshape(10, 10)
    n = normalize(vals)  # becomes 0 / 1
    t = otsu_threshold(n)
    assert 0.0 < t <= 1.0
    assert binarize(n, t).sum() == 50
    # on the raw, un-normalized values the split also lands between modes
    raw = type(n)(vals)
    t_raw = otsu_threshold(raw)
    assert 0.1 < t_raw <= 0.9
    assert binarize(raw, t_raw).sum() == 50


def test_otsu_constant_map_raises():
    with pytest.raises(DegenerateMapError, match="constant map has no Otsu threshold"):
        otsu_threshold(normalize(np.full((3, 3), 7.0)))


def test_otsu_matches_brute_force():
    rng = np.random.default_rng(11)
    for i in range(150):
        shape = tuple(rng.integers(2, 12, size=2))
        if i % 3 == 0:
            raw = rng.integers(0, 6, size=shape).astype(float)  # many exact ties
        else:
            raw = rng.random(shape) ** rng.uniform(0.3, 3)
        n = normalize(raw)
        if n.degenerate:
            continue
        assert otsu_threshold(n) == otsu_brute_force(n.values)


def test_otsu_is_affine_invariant():
    rng = np.random.default_rng(5)
    for _ in range(30):
        raw = rng.integers(0, 50, size=(8, 8)).astype(float)
        a = normalize(raw)
        b = normalize(raw * 4.0 - 17.0)
        if a.degenerate:
            continue
        assert otsu_threshold(a) == otsu_threshold(b)


def test_wslm_round_trip(tmp_path):
    arr = np.arange(12, dtype=np.float32).reshape(3, 4) / 7
    p = tmp_path / "a.wslm"
    write_wslm(p, arr)
    assert np.array_equal(read_wslm(p), arr.astype(np.float64))
    assert find_map(tmp_path, "a") == p
    assert np.array_equal(load_map(p), read_wslm(p))


def test_wslm_bad_magic_and_truncation(tmp_path):
    p = tmp_path / "bad.wslm"
    write_wslm(p, np.ones((2, 2)))
    data = p.read_bytes()
    p.write_bytes(b"XXXX" + data[4:])
    with pytest.raises(MapFormatError, match="bad magic"):
        read_wslm(p)
    p.write_bytes(data[:-3])
    with pytest.raises(MapFormatError, match="expected"):
        read_wslm(p)


def test_png_maps(tmp_path):
    from PIL import Image

    arr8 = np.array([[0, 255], [51, 102]], dtype=np.uint8)
    Image.fromarray(arr8, mode="L").save(tmp_path / "m8.png")
    assert np.allclose(load_map(tmp_path / "m8.png"), arr8 / 255.0)
    arr16 = np.array([[0, 65535], [1000, 30000]], dtype=np.uint16)
    Image.fromarray(arr16).save(tmp_path / "m16.png")
    assert np.allclose(load_map(tmp_path / "m16.png"), arr16 / 65535.0)
    Image.new("RGB", (2, 2)).save(tmp_path / "rgb.png")
    with pytest.raises(MapFormatError):
        load_map(tmp_path / "rgb.png")
    with pytest.raises(FileNotFoundError):
        find_map(tmp_path, "missing")


def test_peak_ties_go_to_lowest_index():
    n = normalize([[0, 1, 0], [1, 0, 0]])
    assert n.peak() == (0, 1)
