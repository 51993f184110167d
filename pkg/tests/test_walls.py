import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomcloud.errors import GeometryError, NoWallsError
from roomcloud.geom import rasterize_polygon
from roomcloud.walls import (
    Normalization,
    WallGrid,
    extract_walls,
    normalize_points,
    pixels_to_points,
    project_histogram,
    subsample_points,
    wall_threshold,
    write_sidecar,
)


def grid(counts):
    c = np.asarray(counts, dtype=np.int64)
    return WallGrid(counts=c, extent=(0.0, 0.0, float(c.shape[0]), float(c.shape[0])))


def test_four_bin_centers():
    cloud = np.array([(0.5, 0.5, 0), (1.5, 0.5, 0), (0.5, 1.5, 0), (1.5, 1.5, 0),
                      (0, 0, 0), (2, 2, 0)], dtype=float)
    g = project_histogram(cloud, d=2)
    # corners (0,0) and (2,2) land in the outer bins; max edge belongs to the last bin
    assert g.counts.tolist() == [[1, 2], [2, 1]]
    assert g.counts.sum() == 6


def test_north_up_rows():
    cloud = np.array([(0, 0, 0), (0, 0, 0), (1, 1, 0)], dtype=float)
    g = project_histogram(cloud, d=2)
    # y minimum is the bottom row of the image
    assert g.counts.tolist() == [[0, 1], [2, 0]]


def test_single_bin_and_conservation():
    cloud = np.zeros((17, 3)) + [3.0, 4.0, 1.0]
    g = project_histogram(cloud, d=8)
    assert g.counts.max() == 17 and g.counts.sum() == 17


def test_million_points_conserved():
    cloud = np.random.default_rng(0).uniform(-5, 5, size=(1_000_000, 3))
    assert project_histogram(cloud, d=128).counts.sum() == 1_000_000


def test_square_extent():
    cloud = np.array([(0, 0, 0), (4, 1, 0)], dtype=float)
    g = project_histogram(cloud, d=4)
    assert g.extent == (0.0, -1.5, 4.0, 2.5)
    assert g.bin_size == 1.0


def test_fixed_bin_size():
    cloud = np.array([(0, 0, 0), (1.0, 0.5, 0)], dtype=float)
    g = project_histogram(cloud, bin_size=0.05)
    assert g.d == 20 and g.bin_size == pytest.approx(0.05)


def test_histogram_errors():
    with pytest.raises(GeometryError):
        project_histogram(np.zeros((0, 3)))
    with pytest.raises(GeometryError):
        project_histogram(np.zeros((3, 3)), d=1)


@settings(max_examples=40)
@given(st.integers(1, 2000), st.integers(2, 64), st.integers(0, 2**31))
def test_conservation_property(n, d, seed):
    cloud = np.random.default_rng(seed).normal(size=(n, 3))
    assert project_histogram(cloud, d=d).counts.sum() == n


def test_threshold_examples():
    img = extract_walls(grid([[100, 30], [24, 10]]))
    assert img.threshold == 25
    assert img.bits.tolist() == [[True, True], [False, False]]
    assert extract_walls(grid([[5, 5], [5, 5]])).bits.all()
    img = extract_walls(grid([[4, 1], [0, 0]]))
    assert img.threshold == 1
    assert img.bits.tolist() == [[True, True], [False, False]]


def test_threshold_ceiling_inclusive():
    # n_max = 10: threshold ceil(2.5) = 3, and a count of exactly 3 is kept
    img = extract_walls(grid([[10, 3], [2, 0]]))
    assert img.threshold == 3
    assert img.bits.tolist() == [[True, True], [False, False]]
    assert wall_threshold(8) == 2 and wall_threshold(9) == 3


def test_empty_grid_raises():
    with pytest.raises(NoWallsError):
        extract_walls(grid([[0, 0], [0, 0]]))


@settings(max_examples=40)
@given(st.integers(0, 2**31))
def test_threshold_monotone(seed):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 50, size=(6, 6))
    counts[0, 0] = 50
    g = grid(counts)
    low = extract_walls(g, ratio=0.2).bits
    high = extract_walls(g, ratio=0.4).bits
    assert np.all(low | ~high)   # high is a subset of low
    # raising one bin above n_max tightens the threshold: remaining bits only shrink
    bumped = counts.copy()
    bumped[3, 3] = 120
    b2 = extract_walls(grid(bumped)).bits
    keep = np.ones_like(b2)
    keep[3, 3] = False
    assert np.all((extract_walls(g).bits | ~b2)[keep])


def test_pixels_to_points_mapping():
    bits = np.zeros((4, 4), bool)
    bits[0, 0] = True
    assert pixels_to_points(bits).tolist() == [[0.0, 3.0]]
    assert len(pixels_to_points(np.ones((2, 2), bool))) == 4
    with pytest.raises(NoWallsError):
        pixels_to_points(np.zeros((3, 3), bool))


def test_normalize_examples():
    assert normalize_points([(0, 0), (10, 10)]).tolist() == [[-1, -1], [1, 1]]
    assert normalize_points([(0, 0), (10, 0)]).tolist() == [[-1, 0], [1, 0]]
    with pytest.raises(GeometryError):
        normalize_points([(1, 1), (1, 1)])


@settings(max_examples=60)
@given(st.integers(0, 2**31), st.integers(2, 50))
def test_normalize_max_is_one(seed, n):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1e3, 1e3, size=(n, 2)) * rng.uniform(1e-3, 10)
    out = normalize_points(pts)
    assert np.max(np.abs(out)) == 1.0
    assert out.min() >= -1.0


def test_normalization_round_trip():
    pts = np.random.default_rng(2).uniform(0, 50, size=(30, 2))
    norm = Normalization.fit(pts)
    assert np.allclose(norm.invert(norm.apply(pts)), pts)


def test_raster_points_normalize_is_similarity():
    poly = np.array([(10, 20), (90, 20), (90, 60), (50, 100), (10, 60)], dtype=float)
    bits = rasterize_polygon(poly, 128, 128, "outline")
    pts = pixels_to_points(bits)
    out = normalize_points(pts)
    i, j = np.triu_indices(len(pts), 1)
    d0 = np.linalg.norm(pts[i] - pts[j], axis=1)
    d1 = np.linalg.norm(out[i] - out[j], axis=1)
    ratio = d1 / d0
    assert np.max(np.abs(ratio - ratio[0])) < 1e-9


def test_subsample_semantics():
    pts = np.random.default_rng(0).normal(size=(500, 2))
    out = subsample_points(pts, 300, seed=4)
    assert len(out) == 300
    idx = [int(np.flatnonzero((pts == p).all(axis=1))[0]) for p in out]
    assert len(set(idx)) == 300
    assert len(subsample_points(pts[:50], 300, seed=4)) == 50
    assert np.array_equal(subsample_points(pts, 300, seed=4), out)
    with pytest.raises(ValueError):
        subsample_points(pts, 0)


def test_sidecar(tmp_path):
    g = grid([[100, 30], [24, 10]])
    img = extract_walls(g)
    write_sidecar(tmp_path / "w.txt", g, img, 0.25, source="x")
    text = (tmp_path / "w.txt").read_text()
    assert "threshold = 25" in text and "n_max = 100" in text and "source = x" in text
