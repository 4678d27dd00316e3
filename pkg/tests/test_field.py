import math

import numpy as np
import pytest

from tddm.field import (
    PhaseField,
    extract_contours,
    init_circle,
    init_frank_read,
    init_half_plane,
    neighbor,
    quantize,
    write_csv,
    write_pgm,
)
from tddm.spectral import make_grid

G256 = make_grid(256, np.pi)


def test_circle_area():
    r = 2 * math.pi / 3
    f = init_circle(G256, (0.0, 0.0), r)
    area = f.u.sum() * G256.dx**2
    assert abs(area - math.pi * r * r) < 2 * (2 * math.pi * r) * G256.dx


def test_tiny_circle_allowed_and_too_small_rejected():
    g = make_grid(1024, np.pi)
    assert init_circle(g, (0.0, 0.0), 1.01 * g.dx).u.sum() >= 1
    with pytest.raises(ValueError):
        init_circle(g, (0.0, 0.0), g.dx)


def test_circle_must_fit():
    with pytest.raises(ValueError):
        init_circle(G256, (2.0, 0.0), 1.5)


def test_two_circles_add():
    a = init_circle(G256, (1.2, 0.0), 0.8)
    b = init_circle(G256, (-1.2, 0.0), 0.8)
    both = a + b
    assert both.u.max() == 1 and both.u.sum() == a.u.sum() + b.u.sum()


def test_half_plane_values_and_winding():
    f = init_half_plane(G256, 0.0)
    x, _ = G256.mesh()
    assert np.array_equal(f.u, (x > 0).astype(float))
    assert f.winding == (1, 0)
    uniform = init_half_plane(G256, 0.0, 1, 1)
    assert np.all(uniform.u == 1) and uniform.winding == (0, 0)
    assert extract_contours(uniform, 0.5) == []


def test_half_plane_single_open_contour():
    f = init_half_plane(G256, 0.0)
    cs = extract_contours(f, 0.5)
    assert len(cs) == 1 and not cs[0].closed
    assert np.allclose(cs[0].points[:, 0], 0.5 * G256.dx, atol=1e-12)


def test_half_plane_offset_between_columns():
    f = init_half_plane(G256, G256.dx / 2)
    xs = extract_contours(f, 0.5)[0].points[:, 0]
    assert np.all(np.abs(xs - G256.dx / 2) <= G256.dx)


def test_unwrapped_half_plane_has_two_fronts():
    f = init_half_plane(G256, 0.0, wrap=False)
    assert len(extract_contours(f, 0.5)) == 2


def test_circle_contour():
    r = 2 * math.pi / 3
    cs = extract_contours(init_circle(G256, (0.0, 0.0), r), 0.5)
    assert len(cs) == 1 and cs[0].closed
    c = cs[0]
    dist = np.linalg.norm(c.points - c.centroid(), axis=1).mean()
    assert abs(dist - r) < G256.dx
    assert np.allclose(c.centroid(), 0.0, atol=G256.dx)


def test_loop_across_periodic_boundary_is_closed():
    g = make_grid(128, np.pi)
    x, y = g.mesh()
    # centred on the corner, so it is cut into four pieces by the array edges
    dx_ = np.minimum(np.abs(x + np.pi), 2 * np.pi - np.abs(x + np.pi))
    dy_ = np.minimum(np.abs(y + np.pi), 2 * np.pi - np.abs(y + np.pi))
    f = PhaseField(g, (dx_**2 + dy_**2 < 1.0).astype(float))
    cs = extract_contours(f, 0.5)
    assert len(cs) == 1 and cs[0].closed
    assert cs[0].area() == pytest.approx(math.pi, rel=0.03)


def test_nested_levels():
    a = init_circle(G256, (0.0, 0.0), 2.0)
    b = init_circle(G256, (0.0, 0.0), 1.0)
    f = a + b
    assert len(extract_contours(f, 0.5)) == 1
    assert len(extract_contours(f, 1.5)) == 1


def test_frank_read_strip():
    g = make_grid(2048, 3 * np.pi)
    f = init_frank_read(g, math.pi / 3, 1.0)
    cols = np.nonzero(f.u.any(axis=1))[0]
    rows = np.nonzero(f.u.any(axis=0))[0]
    assert len(cols) == 1
    assert (rows.size - 1) * g.dx == pytest.approx(2.0, abs=2 * g.dx)
    with pytest.raises(ValueError):
        init_frank_read(g, math.pi / 3, 0.5 * g.dx)


def test_neighbor_applies_winding():
    u = np.arange(4.0)[:, None] * np.ones((4, 4))
    nxt = neighbor(u, 0, 1, winding=4)
    assert np.all(nxt[-1] == 4.0)
    prev = neighbor(u, 0, -1, winding=4)
    assert np.all(prev[0] == -1.0)


def test_quantize_idempotent():
    f = PhaseField(G256, np.random.default_rng(0).normal(size=G256.shape))
    q = quantize(f)
    assert np.array_equal(quantize(q).u, q.u)


def test_snapshot_writers(tmp_path):
    f = init_circle(G256, (0.0, 0.0), 1.0)
    pgm = write_pgm(f, tmp_path / "f.pgm")
    data = pgm.read_bytes()
    assert data.startswith(b"P5\n")
    assert len(data) > G256.n**2
    assert (tmp_path / "f.pgm.txt").read_text().startswith("min 0.0")
    back = np.loadtxt(write_csv(f, tmp_path / "f.csv"), delimiter=",")
    assert np.array_equal(back, f.u)


def test_contour_contains():
    g = make_grid(64, np.pi)
    (c,) = extract_contours(init_circle(g, (0.5, 0.0), 1.2), 0.5)
    assert c.contains((0.5, 0.0)) and c.contains((1.5, 0.0))
    assert not c.contains((-1.0, 0.0)) and not c.contains((0.5, 2.0))
