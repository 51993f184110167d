import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from roomcloud.errors import GeometryError, SampleRejected
from roomcloud.geom import (
    densify_arcs,
    is_simple,
    lowest_leftmost_index,
    mask_iou,
    polygon_area,
    polygon_iou,
    rasterize_polygon,
    region_area,
)
from roomcloud.synthgen import (
    GenConfig,
    build_sample,
    gen_rectangle,
    generate_dataset,
    generate_scene,
    load_dataset,
    make_ptrnet_sample,
    morph_halfcircle,
    morph_nonright,
    morph_quartercircle,
    morph_rectilinear,
    place_rooms,
    pseudo_sort,
    render_scene,
    true_sort,
)
from roomcloud.synthgen.scene import Room, Scene


def brute_pseudo_sort(pts):
    """Literal list-based nearest-neighbor chain."""
    remaining = list(range(len(pts)))
    out = [remaining.pop(0)]
    while remaining:
        q = pts[out[-1]]
        best = min(remaining, key=lambda i: ((pts[i][0] - q[0]) ** 2 + (pts[i][1] - q[1]) ** 2, i))
        remaining.remove(best)
        out.append(best)
    return out


# ---------------------------------------------------------------- config

def test_config_validation():
    with pytest.raises(ValueError):
        GenConfig(edge_len_range=(3.0, 2.0))
    with pytest.raises(ValueError):
        GenConfig(max_rooms=0)
    with pytest.raises(ValueError):
        GenConfig(b=2)
    with pytest.raises(ValueError):
        GenConfig(jitter_prob=1.5)
    with pytest.raises(ValueError):
        GenConfig(shape_weights={"hexagon": 1.0})


def test_config_round_trip():
    cfg = GenConfig(p_n=100, shape_weights={"curved": 2.0, "rectangular": 1.0})
    assert GenConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


# ---------------------------------------------------------------- shapes

def test_gen_rectangle_examples():
    r = gen_rectangle((0, 0), (1, 0), 4, 2)
    assert r.tolist() == [[0, 0], [4, 0], [4, 2], [0, 2]]
    r = gen_rectangle((0, 0), (0, 1), 2, 1)
    assert np.allclose(r, [(0, 0), (0, 2), (-1, 2), (-1, 0)])
    with pytest.raises(GeometryError):
        gen_rectangle((0, 0), (1, 1), 2, 1)


@given(st.floats(0, 2 * math.pi), st.floats(0.5, 9), st.floats(0.5, 9))
def test_gen_rectangle_area(phi, l, w):
    r = gen_rectangle((1.0, -2.0), (math.cos(phi), math.sin(phi)), l, w)
    assert polygon_area(r) == pytest.approx(l * w, rel=1e-9)


def test_rectilinear_example():
    r = gen_rectangle((0, 0), (1, 0), 4, 2)
    out = morph_rectilinear(r, 0)
    assert out.tolist() == [[2, 0], [4, 0], [4, 2], [0, 2], [0, 1], [2, 1]]
    assert polygon_area(out) == 6.0
    assert is_simple(out)


def test_nonright_example():
    sq = gen_rectangle((0, 0), (1, 0), 4, 4)
    out = morph_nonright(sq, 0, (0.5, 0.5))
    assert out.tolist() == [[2, 0], [4, 0], [4, 4], [0, 4], [0, 2]]
    # the cut edge meets both neighbors at 135 degrees (non-right)
    e_cut = out[0] - out[-1]
    assert abs(np.dot(e_cut, out[1] - out[0])) > 1e-9


@settings(max_examples=200)
@given(st.floats(0, 2 * math.pi), st.floats(2, 8), st.floats(2, 8), st.integers(0, 3),
       st.floats(0.25, 0.75), st.floats(0.25, 0.75))
def test_morph_area_identities(phi, l, w, corner, f1, f2):
    r = gen_rectangle((0.3, 0.7), (math.cos(phi), math.sin(phi)), l, w)
    area = polygon_area(r)
    rl = morph_rectilinear(r, corner)
    assert abs(polygon_area(rl) - 0.75 * area) <= 1e-9 * max(1.0, area)
    assert is_simple(rl)
    nr = morph_nonright(r, corner, (f1, f2))
    assert abs(polygon_area(nr) - (area - f1 * f2 * l * w / 2)) <= 1e-9 * max(1.0, area)
    assert is_simple(nr)


def test_halfcircle_square():
    sq = gen_rectangle((0, 0), (1, 0), 4, 4)
    for e in range(4):
        poly, arc = morph_halfcircle(sq, e)
        assert arc.radius == pytest.approx(2.0)
        a, b = sq[e], sq[(e + 1) % 4]
        assert np.allclose(arc.center, 0.5 * (a + b))
        assert np.allclose(arc.start_point, a) and np.allclose(arc.end_point, b)
        assert region_area(poly, [arc]) == pytest.approx(16 + math.pi * 4 / 2, abs=1e-9)
        # outward: the arc midpoint lies outside the rectangle
        mid = arc.point_at(0.5 * (arc.start_angle + arc.end_angle))
        assert not (0 < mid[0] < 4 and 0 < mid[1] < 4)


def test_quartercircle_rectangle():
    r = gen_rectangle((0, 0), (1, 0), 4, 2)
    for c in range(4):
        poly, arc = morph_quartercircle(r, c)
        assert arc.radius == pytest.approx(1.0)
        assert region_area(poly, [arc]) == pytest.approx(8 - (1 - math.pi / 4), abs=1e-9)
        for t in (arc.start_point, arc.end_point):
            on_edge = (np.isclose(t[0], 0) or np.isclose(t[0], 4) or np.isclose(t[1], 0)
                       or np.isclose(t[1], 2))
            assert on_edge
        assert is_simple(densify_arcs(poly, [arc]))


# ---------------------------------------------------------------- placement and scenes

def test_place_single_room():
    rects = place_rooms(GenConfig(max_rooms=1), np.random.default_rng(0))
    assert len(rects) == 1
    l = np.linalg.norm(rects[0][1] - rects[0][0])
    assert 2.0 - 0.2 <= l <= 8.0 - 0.2


def test_place_deterministic_disjoint():
    cfg = GenConfig()
    a = place_rooms(cfg, np.random.default_rng(11))
    b = place_rooms(cfg, np.random.default_rng(11))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    for x, y in itertools.combinations(a, 2):
        assert polygon_iou(x, y) == 0.0


def test_scene_invariants_many_seeds():
    cfg = GenConfig()
    for seed in range(100):
        rng = np.random.default_rng(seed)
        scene = generate_scene(cfg, rng)
        assert 1 <= len(scene.rooms) <= cfg.max_rooms
        dense = [r.dense() for r in scene.rooms]
        for x, y in itertools.combinations(dense, 2):
            assert polygon_iou(x, y) == 0.0
        for d in dense:
            px = scene.to_raster(d)
            assert px.min() >= 0 and px.max() <= cfg.canvas
            assert is_simple(d)
        keys = [(d[:, 1].min(), d[:, 0].min()) for d in dense]
        assert keys == sorted(keys)


def test_render_noise_off_equals_outline_union():
    cfg = GenConfig(jitter_prob=0.0, dropout_prob=0.0)
    scene = generate_scene(cfg, np.random.default_rng(4))
    out = render_scene(scene, cfg, np.random.default_rng(5))
    union = np.zeros_like(out.wall_image)
    for r in scene.rooms:
        union |= rasterize_polygon(scene.to_raster(r.dense()), cfg.canvas, cfg.canvas, "outline")
    assert np.array_equal(out.wall_image, union)
    for a, b in itertools.combinations(out.room_masks, 2):
        assert mask_iou(a, b) == 0.0


def test_render_full_dropout_empty():
    cfg = GenConfig(dropout_prob=1.0)
    scene = generate_scene(cfg, np.random.default_rng(1))
    out = render_scene(scene, cfg, np.random.default_rng(1))
    assert not out.wall_image.any()
    with pytest.raises(SampleRejected):
        make_ptrnet_sample(scene, cfg, "random", np.random.default_rng(1), out)


def test_jitter_moves_by_at_most_one():
    cfg = GenConfig(jitter_prob=1.0, dropout_prob=0.0)
    scene = generate_scene(cfg, np.random.default_rng(8))
    clean = render_scene(scene, cfg.replace(jitter_prob=0.0), np.random.default_rng(9)).wall_image
    noisy = render_scene(scene, cfg, np.random.default_rng(9)).wall_image
    from scipy import ndimage
    grown = ndimage.binary_dilation(clean, structure=np.ones((3, 3)))
    assert np.all(grown[noisy])


# ---------------------------------------------------------------- orderings

def test_pseudo_sort_example():
    pts = [(0, 0), (5, 5), (1, 0), (6, 5)]
    assert pseudo_sort(pts).tolist() == [0, 2, 1, 3]
    assert pseudo_sort([(3, 4)]).tolist() == [0]
    with pytest.raises(ValueError):
        pseudo_sort(np.zeros((0, 2)))


@settings(max_examples=100)
@given(st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=1, max_size=12))
def test_pseudo_sort_matches_reference(pts):
    order = pseudo_sort(pts)
    assert order.tolist() == brute_pseudo_sort(pts)
    assert sorted(order.tolist()) == list(range(len(pts)))


def test_true_sort_single_square_monotone_angle():
    ang = np.random.default_rng(0).uniform(0, 2 * np.pi, 40)
    pts = np.stack([np.cos(ang), np.sin(ang)], 1) * 0.9
    owners = np.zeros(40, dtype=int)
    start = np.array([0.0, -0.9])
    order = true_sort(pts, owners, [(0.0, 0.0)], [start])
    a = np.mod(np.arctan2(pts[order, 1], pts[order, 0]) - np.arctan2(-0.9, 0.0), 2 * np.pi)
    assert np.all(np.diff(a) >= 0)


def test_true_sort_groups_rooms_and_needs_owners():
    pts = np.array([(5, 0), (0, 1), (5, 1), (0, 0)], dtype=float)
    owners = np.array([1, 0, 1, 0])
    order = true_sort(pts, owners, [(0.5, 0.5), (5.5, 0.5)], [(0, 0), (5, 0)])
    assert owners[order].tolist() == [0, 0, 1, 1]
    with pytest.raises(GeometryError):
        true_sort(pts, None, [(0, 0)], [(0, 0)])
    with pytest.raises(GeometryError):
        true_sort(pts, np.array([0, -1, 0, 0]), [(0, 0)], [(0, 0)])


# ---------------------------------------------------------------- samples

@pytest.mark.parametrize("ordering", ["random", "truesort", "pseudosort"])
def test_sample_invariants(ordering):
    cfg = GenConfig(p_n=100)
    for i in range(20):
        s = build_sample(cfg, i, ordering)
        n = len(s.points)
        assert n <= cfg.p_n
        assert len(s.labels) == cfg.b * s.k_rooms
        assert s.labels.min() >= 0 and s.labels.max() < n
        assert np.abs(s.points).max() <= 1.0
        assert s.ordering == ordering
        if ordering == "truesort":
            assert np.all(np.diff(s.owners) >= 0)
        for a, b in itertools.combinations(s.room_masks, 2):
            assert not (a & b).any()


def test_orderings_share_points_and_geometry():
    cfg = GenConfig(p_n=100)
    base = build_sample(cfg, 3, "random")
    for o in ("truesort", "pseudosort"):
        s = build_sample(cfg, 3, o)
        assert sorted(map(tuple, s.points)) == sorted(map(tuple, base.points))
        # labels still point at the same geometric points
        assert np.array_equal(s.points[s.labels], base.points[base.labels])


def test_labels_start_lowest_leftmost_ccw():
    cfg = GenConfig(p_n=400, max_rooms=1, jitter_prob=0.0, dropout_prob=0.0,
                    shape_weights={"rectangular": 1.0})
    s = build_sample(cfg, 0, "random")
    border = s.points[s.labels]
    assert polygon_area(border) > 0
    assert lowest_leftmost_index(border) in (0, 1, len(border) - 1)


def test_rectangular_only_tags():
    cfg = GenConfig(p_n=50, shape_weights={"rectangular": 1.0})
    for i in range(10):
        assert set(build_sample(cfg, i, "random").shape_tags) == {"rectangular"}


# ---------------------------------------------------------------- dataset files

def test_dataset_deterministic_and_valid(tmp_path):
    cfg = GenConfig(p_n=60, seed=5)
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    generate_dataset(cfg, 100, "pseudosort", a)
    generate_dataset(cfg, 100, "pseudosort", b)
    assert a.read_bytes() == b.read_bytes()
    header, recs = load_dataset(a)
    assert header["format_version"] == 1 and header["gen_config"] == cfg.to_dict()
    assert len(recs) == 100
    for r in recs:
        assert len(r.labels) == r.b * r.k_rooms
        assert r.labels.max() < len(r.points)


def test_dataset_jobs_identical(tmp_path):
    cfg = GenConfig(p_n=40, seed=2)
    generate_dataset(cfg, 24, "random", tmp_path / "a.jsonl", jobs=1)
    generate_dataset(cfg, 24, "random", tmp_path / "b.jsonl", jobs=2)
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()


def test_dataset_masks(tmp_path):
    cfg = GenConfig(p_n=40, seed=1)
    generate_dataset(cfg, 3, "random", tmp_path / "d.jsonl", mask_dir=tmp_path / "m")
    names = sorted(p.name for p in (tmp_path / "m").iterdir())
    assert "000000_walls.pgm" in names and "000000_room0.pgm" in names


def test_dataset_partial_cleanup(tmp_path, monkeypatch):
    import roomcloud.synthgen.dataset as ds

    calls = {"n": 0}
    real = ds._work

    def flaky(args):
        calls["n"] += 1
        if calls["n"] == 5:
            raise OSError("disk full")
        return real(args)

    monkeypatch.setattr(ds, "_work", flaky)
    out = tmp_path / "d.jsonl"
    with pytest.raises(OSError):
        ds.generate_dataset(GenConfig(p_n=30), 10, "random", out)
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []
