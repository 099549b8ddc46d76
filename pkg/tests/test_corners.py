import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from drotrack import corners
from drotrack.core import BBox, Frame, PointF
from drotrack.imgproc import extract_patch, sobel_gradients


def junction_image(size=21, jx=10, jy=10, lo=20, hi=220):
    """Checkerboard junction at (jx, jy): four quadrants, alternating tones."""
    img = np.full((size, size), lo, dtype=np.uint8)
    img[:jy, jx:] = hi
    img[jy:, :jx] = hi
    return img


def as_frame(gray):
    return Frame(index=0, color=np.repeat(gray[:, :, None], 3, axis=2))


def brute_force_min_eig(gray, block_size=3):
    """Independent oracle: eigvalsh of the explicitly assembled tensor."""
    ix, iy = sobel_gradients(gray)
    h, w = gray.shape
    r = block_size // 2
    ixx = np.pad(ix * ix, r, mode="edge")
    ixy = np.pad(ix * iy, r, mode="edge")
    iyy = np.pad(iy * iy, r, mode="edge")
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            a = ixx[y : y + block_size, x : x + block_size].sum()
            b = ixy[y : y + block_size, x : x + block_size].sum()
            c = iyy[y : y + block_size, x : x + block_size].sum()
            out[y, x] = np.linalg.eigvalsh(np.array([[a, b], [b, c]]))[0]
    return out


def test_response_constant_image_zero():
    resp = corners.shi_tomasi_response(np.full((9, 9), 55, dtype=np.uint8))
    assert np.allclose(resp, 0.0)


def test_response_step_edge_interior_zero():
    img = np.zeros((11, 11), dtype=np.uint8)
    img[:, 5:] = 200
    resp = corners.shi_tomasi_response(img)
    # rank-1 tensors along the edge, away from corners of the image
    assert np.allclose(resp[3:-3, :], 0.0, atol=1e-6)


def test_response_matches_eigendecomposition_oracle():
    img = junction_image(size=15, jx=7, jy=7)
    resp = corners.shi_tomasi_response(img, 3)
    oracle = brute_force_min_eig(img, 3)
    np.testing.assert_allclose(resp, oracle, rtol=1e-9, atol=1e-6)
    # the junction out-responds every pure-edge pixel; the discrete peak sits
    # on one of the four pixels touching the quadrant meeting point
    peak_y, peak_x = np.unravel_index(resp.argmax(), resp.shape)
    assert peak_y in (6, 7) and peak_x in (6, 7)


def test_detect_constant_region_empty():
    gray = np.full((20, 20), 100, dtype=np.uint8)
    got = corners.detect_corners(gray, corners.CornerConfig(min_distance=2), BBox(10, 10, 16, 16))
    assert got == []


def test_detect_single_junction():
    img = junction_image(size=21, jx=9, jy=12)
    cfg = corners.CornerConfig(min_distance=3, max_corners=1)
    got = corners.detect_corners(img, cfg, BBox(10, 10, 20, 20))
    assert len(got) == 1
    assert abs(got[0].x - 9) <= 1 and abs(got[0].y - 12) <= 1


def test_detect_suppresses_close_corners():
    # two junctions 2px apart; suppression radius 5 keeps only the stronger
    img = np.full((25, 25), 30, dtype=np.uint8)
    img[:12, 10:] = 200
    img[12:, :10] = 200
    cfg = corners.CornerConfig(min_distance=5, max_corners=4, quality_level=0.2)
    got = corners.detect_corners(img, cfg, BBox(12, 12, 24, 24))
    for i, p in enumerate(got):
        for q in got[i + 1 :]:
            assert (p.x - q.x) ** 2 + (p.y - q.y) ** 2 >= 25

def test_detect_respects_max_corners_and_region():
    img = junction_image(size=31, jx=15, jy=15)
    cfg = corners.CornerConfig(min_distance=1, max_corners=3, quality_level=0.05)
    region = BBox(15, 15, 20, 20)
    got = corners.detect_corners(img, cfg, region)
    assert 0 < len(got) <= 3
    for p in got:
        assert region.x <= p.x <= region.x + region.w
        assert region.y <= p.y <= region.y + region.h


def test_hull_centroid_single_point():
    p = PointF(3.5, -1.0)
    assert corners.convex_hull_centroid([p]) == p


def test_hull_centroid_two_points():
    got = corners.convex_hull_centroid([PointF(0, 0), PointF(4, 2)])
    assert got == PointF(2, 1)


def test_hull_centroid_unit_square():
    pts = [PointF(0, 0), PointF(1, 0), PointF(1, 1), PointF(0, 1)]
    got = corners.convex_hull_centroid(pts)
    assert got.x == pytest.approx(0.5) and got.y == pytest.approx(0.5)


def test_hull_centroid_triangle():
    got = corners.convex_hull_centroid([PointF(0, 0), PointF(4, 0), PointF(0, 3)])
    assert got.x == pytest.approx(4 / 3, rel=1e-12)
    assert got.y == pytest.approx(1.0, rel=1e-12)


def test_hull_centroid_interior_points_ignored():
    pts = [PointF(0, 0), PointF(4, 0), PointF(4, 4), PointF(0, 4), PointF(1, 1), PointF(3, 2)]
    got = corners.convex_hull_centroid(pts)
    assert got.x == pytest.approx(2.0) and got.y == pytest.approx(2.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=1, max_size=12))
def test_hull_centroid_inside_bounding_box(coords):
    pts = [PointF(x, y) for x, y in coords]
    got = corners.convex_hull_centroid(pts)
    eps = 1e-6
    assert min(p.x for p in pts) - eps <= got.x <= max(p.x for p in pts) + eps
    assert min(p.y for p in pts) - eps <= got.y <= max(p.y for p in pts) + eps


def textured_frame(seed=3, size=64):
    rng = np.random.default_rng(seed)
    base = rng.integers(0, 256, (size // 4, size // 4, 3))
    color = np.kron(base, np.ones((4, 4, 1))).astype(np.uint8)
    return Frame(index=0, color=color)


def test_accept_corner_at_center_of_unchanged_frame():
    f = textured_frame()
    rt_box = BBox(32, 32, 20, 20)
    rt_patch = extract_patch(f, rt_box)
    assert corners.accept_corner(rt_box.center, rt_box, rt_patch, f, 0.5, 0.5)


def test_accept_corner_distance_gate():
    f = textured_frame(size=256)
    rt_box = BBox(60, 60, 20, 20)
    rt_patch = extract_patch(f, rt_box)
    beta = 0.5 * (rt_box.w + rt_box.h)
    far = PointF(rt_box.cx + 2 * beta, rt_box.cy)
    assert not corners.accept_corner(far, rt_box, rt_patch, f, 0.5, 0.5)


def test_accept_corner_dissimilar_patch_rejected():
    # red template, blue test area a short distance away
    color = np.zeros((40, 80, 3), dtype=np.uint8)
    color[:, :40, 0] = 255
    color[:, 40:, 2] = 255
    # speckle both halves so histograms are not constant
    color[::7, ::7, 1] = 128
    f = Frame(index=0, color=color)
    rt_box = BBox(20, 20, 16, 16)
    rt_patch = extract_patch(f, rt_box)
    anchor = PointF(60, 20)  # distance 40 > 0.1 * beta but patch is blue
    beta = 0.5 * (rt_box.w + rt_box.h)
    assert 40 <= 2.5 * beta  # distance gate alone would pass
    assert not corners.accept_corner(anchor, rt_box, rt_patch, f, 0.5, 2.5)


def test_accept_corner_flat_histogram_rejected():
    # every intensity bin equally occupied -> zero-variance histogram ->
    # undefined similarity -> reject
    vals = (np.arange(40 * 40).reshape(40, 40) % 32) * 8
    f = Frame(index=0, color=np.repeat(vals[:, :, None], 3, axis=2).astype(np.uint8))
    rt_box = BBox(20, 20, 32, 32)
    rt_patch = extract_patch(f, rt_box)
    assert not corners.accept_corner(rt_box.center, rt_box, rt_patch, f, 0.5, 0.5)


def test_adaptive_select_finds_dominant_corner():
    gray = np.full((64, 64), 40, dtype=np.uint8)
    gray[:30, 30:] = 220
    gray[30:, :30] = 220
    f = as_frame(gray)
    rt_box = BBox(30, 30, 24, 24)
    rt_patch = extract_patch(f, rt_box)
    got = corners.adaptive_select(f, rt_box, rt_patch, corners.CornerConfig())
    assert abs(got.anchor.x - 30) <= 1.5 and abs(got.anchor.y - 30) <= 1.5


def test_adaptive_select_featureless_falls_back_to_center():
    f = Frame(index=0, color=np.full((48, 48, 3), 90, dtype=np.uint8))
    rt_box = BBox(24, 24, 16, 16)
    rt_patch = extract_patch(f, rt_box)
    got = corners.adaptive_select(f, rt_box, rt_patch, corners.CornerConfig())
    assert got.anchor == rt_box.center
    assert got.points == [rt_box.center]


def test_adaptive_select_anchor_stays_in_template():
    f = textured_frame(seed=11, size=96)
    rt_box = BBox(48, 48, 30, 30)
    rt_patch = extract_patch(f, rt_box)
    got = corners.adaptive_select(f, rt_box, rt_patch, corners.CornerConfig())
    assert rt_box.x <= got.anchor.x <= rt_box.x + rt_box.w
    assert rt_box.y <= got.anchor.y <= rt_box.y + rt_box.h


def test_relaxation_schedule_is_monotone():
    seen = []
    original = corners.detect_corners

    def spy(gray, cfg, region):
        seen.append((cfg.quality_level, cfg.max_corners))
        return []

    corners.detect_corners, saved = spy, corners.detect_corners
    try:
        f = Frame(index=0, color=np.full((48, 48, 3), 10, dtype=np.uint8))
        rt_box = BBox(24, 24, 16, 16)
        corners.adaptive_select(f, rt_box, extract_patch(f, rt_box), corners.CornerConfig())
    finally:
        corners.detect_corners = saved
    assert len(seen) == 6
    qualities = [q for q, _ in seen]
    counts = [c for _, c in seen]
    assert all(a > b for a, b in zip(qualities, qualities[1:]))
    assert all(a <= b for a, b in zip(counts, counts[1:]))
    assert max(counts) <= corners.MAX_CORNER_CAP
