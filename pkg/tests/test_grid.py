import math

import numpy as np
import pytest

from fetchbot.geometry import Pose2D
from fetchbot.grid import (
    COST_INSCRIBED,
    COST_LETHAL,
    Costmap,
    Footprint,
    OccupancyGrid,
    load_grid_pgm,
    save_grid_pgm,
)


def make_grid(width=20, height=10, res=0.05, origin=Pose2D(0, 0, 0)):
    return OccupancyGrid(res, origin, width, height)


class TestWorldToGrid:
    def test_origin_cell(self):
        g = make_grid()
        assert g.world_to_grid(0.0, 0.0) == (0, 0)

    def test_floor_semantics(self):
        g = make_grid()
        assert g.world_to_grid(0.049, 0.049) == (0, 0)
        assert g.world_to_grid(0.05, 0.049) == (1, 0)

    def test_out_of_bounds_signaled(self):
        g = make_grid()
        assert g.world_to_grid(-0.01, 0.0) is None
        assert g.world_to_grid(0.0, 10.0) is None

    def test_cell_center_roundtrip(self):
        g = make_grid(width=7, height=9, res=0.13, origin=Pose2D(-0.4, 0.2, 0.0))
        for ix in range(g.width):
            for iy in range(g.height):
                cx, cy = g.grid_to_world(ix, iy)
                assert g.world_to_grid(cx + g.resolution / 2, cy + g.resolution / 2) == (ix, iy)

    def test_rotated_origin(self):
        g = make_grid(origin=Pose2D(1.0, 1.0, math.pi / 2))
        # grid +x axis points along world +y
        assert g.world_to_grid(1.0 - 0.01, 1.0 + 0.01) == (0, 0)


def test_grid_validation():
    with pytest.raises(ValueError):
        OccupancyGrid(0.0, Pose2D(), 5, 5)
    with pytest.raises(ValueError):
        OccupancyGrid(0.05, Pose2D(), 0, 5)


def test_log_odds_clamp():
    g = make_grid()
    g.cells[0, 0] = 99.0
    g.cells[0, 1] = -99.0
    g.clamp_log_odds()
    assert g.cells[0, 0] == 4.0
    assert g.cells[0, 1] == -4.0


class TestFootprint:
    def test_default_hexagon(self):
        fp = Footprint.regular_hexagon()
        assert len(fp.vertices) == 6
        assert fp.circumradius == pytest.approx(0.35)
        assert fp.inradius == pytest.approx(0.35 * math.cos(math.pi / 6))

    def test_must_be_convex(self):
        with pytest.raises(ValueError):
            Footprint([(0, 0), (1, 0), (0.2, 0.1), (0, 1)])

    def test_must_contain_origin(self):
        with pytest.raises(ValueError):
            Footprint([(1, 1), (2, 1), (2, 2), (1, 2)])

    def test_disc_intersection(self):
        fp = Footprint.regular_hexagon(0.35)
        pose = Pose2D(1.0, 1.0, 0.3)
        assert fp.intersects_disc(pose, 1.0, 1.0, 0.01)          # center inside
        assert fp.intersects_disc(pose, 1.0 + 0.4, 1.0, 0.1)     # overlapping edge
        assert not fp.intersects_disc(pose, 1.0 + 0.8, 1.0, 0.2)

    def test_segment_intersection(self):
        fp = Footprint.regular_hexagon(0.35)
        pose = Pose2D(0, 0, 0)
        assert fp.intersects_segment(pose, -1, 0, 1, 0)      # straight through
        assert fp.intersects_segment(pose, 0, 0, 2, 2)       # endpoint inside
        assert not fp.intersects_segment(pose, -1, 1, 1, 1)  # passes above

    def test_distance_matches_bruteforce(self, rng):
        fp = Footprint.regular_hexagon(0.35)
        pose = Pose2D(0.5, -0.2, 0.7)
        verts = fp.world_vertices(pose)
        ts = np.linspace(0, 1, 400)
        for _ in range(50):
            p = rng.uniform(-1.5, 1.5, 2)
            brute = min(
                float(np.min(np.hypot(*(  # dense sampling along each edge
                    (verts[i] + ts[:, None] * (verts[(i + 1) % 6] - verts[i]) - p).T))))
                for i in range(6)
            )
            d = fp.distance_to_point(pose, p[0], p[1])
            if d == 0.0:
                continue  # inside; brute edge distance is positive
            assert d == pytest.approx(brute, abs=2e-3)


def test_pgm_roundtrip(tmp_path):
    g = make_grid(width=12, height=8)
    g.cells[2, 3] = 2.5    # occupied
    g.cells[5, 7] = -1.0   # free
    path = tmp_path / "map.pgm"
    save_grid_pgm(g, path)
    loaded = load_grid_pgm(path)
    assert loaded.width == 12 and loaded.height == 8
    assert loaded.resolution == g.resolution
    assert loaded.cells[2, 3] == 4.0      # occupied saturates
    assert loaded.cells[5, 7] == -4.0     # free saturates
    assert loaded.cells[0, 0] == 0.0      # unknown stays unknown
    assert (loaded.origin.x, loaded.origin.y) == (g.origin.x, g.origin.y)


def test_pgm_header(tmp_path):
    g = make_grid(width=4, height=3)
    path = tmp_path / "m.pgm"
    save_grid_pgm(g, path)
    raw = path.read_bytes()
    assert raw.startswith(b"P5\n4 3\n255\n")
    assert len(raw) == len(b"P5\n4 3\n255\n") + 12


def test_costmap_lethal_centers():
    costs = np.zeros((4, 5), dtype=np.uint8)
    costs[1, 2] = COST_LETHAL
    costs[3, 4] = COST_INSCRIBED  # not lethal
    cm = Costmap(0.1, Pose2D(1.0, 2.0, 0.0), costs)
    centers = cm.lethal_cell_centers()
    assert centers.shape == (1, 2)
    assert centers[0] == pytest.approx([1.25, 2.15])
