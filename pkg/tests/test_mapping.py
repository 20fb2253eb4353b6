import math

import numpy as np
import pytest

from fetchbot import mapping
from fetchbot.geometry import Pose2D
from fetchbot.grid import COST_INSCRIBED, COST_LETHAL, OccupancyGrid
from fetchbot.mapping import DynamicLayer, build_static_map, inflate, integrate_scan
from fetchbot.sim import LidarScan, WorldModel, cast_lidar


def single_beam_scan(r, max_range=10.0):
    return LidarScan(1, 0.0, max_range, np.array([float(r)]))


def open_grid(w=80, h=40, res=0.05):
    return OccupancyGrid(res, Pose2D(0, 0, 0), w, h)


class TestIntegrateScan:
    def test_hit_marks_endpoint_and_ray(self):
        g = open_grid()
        integrate_scan(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(2.0))
        end = g.world_to_grid(2.025, 1.025)
        assert g.cells[end[1], end[0]] == pytest.approx(0.85)
        ray_cells = g.cells[end[1], :end[0]]
        assert np.allclose(ray_cells, -0.4)

    def test_max_range_no_endpoint(self):
        g = open_grid(w=300, res=0.05)
        integrate_scan(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(10.0))
        assert not np.any(g.cells > 0)
        assert np.any(g.cells < 0)

    def test_saturation_after_repeats(self):
        g = open_grid()
        for _ in range(50):
            integrate_scan(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(2.0))
        end = g.world_to_grid(2.025, 1.025)
        assert g.cells[end[1], end[0]] == 4.0
        assert g.cells[end[1], 0] == -4.0


class TestDynamicLayer:
    def grid_with_wall(self):
        g = open_grid()
        g.cells[:, 60] = 4.0  # static wall column at x=3.0..3.05
        return g

    def test_endpoint_in_occupied_cell_ignored(self):
        g = self.grid_with_wall()
        layer = DynamicLayer()
        layer.update(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(3.0))
        assert len(layer) == 0

    def test_new_endpoint_appears(self):
        g = self.grid_with_wall()
        layer = DynamicLayer()
        layer.update(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(1.0))
        assert layer.occupied_cells() == [(20, 20)]

    def test_expiry_after_exactly_decay_ticks(self):
        g = self.grid_with_wall()
        layer = DynamicLayer(decay_ticks=40)
        layer.update(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(1.0))
        empty = single_beam_scan(10.0)  # miss: ages everything
        for i in range(39):
            layer.update(g, Pose2D(0.025, 1.025, 0.0), empty)
            assert len(layer) == 1, f"expired early at update {i + 1}"
        layer.update(g, Pose2D(0.025, 1.025, 0.0), empty)
        assert len(layer) == 0

    def test_reobservation_resets_age(self):
        g = self.grid_with_wall()
        layer = DynamicLayer(decay_ticks=3)
        beam = single_beam_scan(1.0)
        for _ in range(10):
            layer.update(g, Pose2D(0.025, 1.025, 0.0), beam)
        assert len(layer) == 1

    def test_never_marks_static_occupied(self):
        g = self.grid_with_wall()
        layer = DynamicLayer()
        for r in np.linspace(0.2, 5.0, 120):
            layer.update(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(float(r)))
        for ix, iy in layer.occupied_cells():
            assert g.cells[iy, ix] <= 0.0

    def test_wall_adjacent_noise_gated(self):
        g = self.grid_with_wall()
        layer = DynamicLayer(min_static_clearance=0.075)
        # endpoint one cell short of the wall: within the clearance gate
        layer.update(g, Pose2D(0.025, 1.025, 0.0), single_beam_scan(2.95))
        assert len(layer) == 0


class TestInflate:
    def test_empty_grid_all_zero(self):
        cm = inflate(open_grid(), None, 0.10)
        assert not np.any(cm.costs)

    def test_single_cell_cushion(self):
        g = open_grid(w=21, h=21)
        g.cells[10, 10] = 4.0
        cm = inflate(g, None, 0.10)
        assert cm.costs[10, 10] == COST_LETHAL
        for iy in range(21):
            for ix in range(21):
                d_cells = math.hypot(ix - 10, iy - 10)
                if 0 < d_cells * 0.05 <= 0.10 + 1e-12:
                    assert cm.costs[iy, ix] >= COST_INSCRIBED, (ix, iy)

    def test_decay_profile(self):
        g = open_grid(w=41, h=5)
        g.cells[2, 0] = 4.0
        cm = inflate(g, None, 0.10)
        for ix in range(3, 41):
            d = ix * 0.05
            expected = math.floor(252.0 * math.exp(-5.0 * (d - 0.10)))
            assert cm.costs[2, ix] == expected

    def test_matches_bruteforce_distance(self, rng):
        g = OccupancyGrid(0.05, Pose2D(0, 0, 0), 20, 20)
        occ = rng.random((20, 20)) < 0.1
        g.cells[occ] = 4.0
        if not occ.any():
            g.cells[7, 9] = 4.0
        cm = inflate(g, None, 0.10)
        ys, xs = np.nonzero(g.cells > 0)
        for iy in range(20):
            for ix in range(20):
                d = math.sqrt(np.min((xs - ix) ** 2 + (ys - iy) ** 2)) * 0.05
                if d == 0:
                    assert cm.costs[iy, ix] == COST_LETHAL
                elif d <= 0.10 + 1e-12:
                    assert cm.costs[iy, ix] == COST_INSCRIBED
                else:
                    assert cm.costs[iy, ix] == math.floor(252.0 * math.exp(-5.0 * (d - 0.10)))

    def test_cost_non_increasing_with_distance(self, rng):
        g = OccupancyGrid(0.05, Pose2D(0, 0, 0), 30, 30)
        g.cells[rng.random((30, 30)) < 0.05] = 4.0
        if not (g.cells > 0).any():
            g.cells[15, 15] = 4.0
        cm = inflate(g, None, 0.10)
        ys, xs = np.nonzero(g.cells > 0)
        cells = [(ix, iy, np.min((xs - ix) ** 2 + (ys - iy) ** 2)) for iy in range(30) for ix in range(30)]
        cells.sort(key=lambda c: c[2])
        costs = [cm.costs[iy, ix] for ix, iy, _ in cells]
        assert all(a >= b for a, b in zip(costs, costs[1:]))

    def test_dynamic_layer_cells_lethal(self):
        g = open_grid()
        layer = DynamicLayer()
        layer.ages[(5, 5)] = 0
        cm = inflate(g, layer, 0.10)
        assert cm.costs[5, 5] == COST_LETHAL


class TestStaticMapQuality:
    def test_corridor_wall_classification(self, corridor_scenario, corridor_grid):
        world = corridor_scenario.make_world(0)
        grid = corridor_grid
        occ = grid.occupied_mask()
        wall_cells = {}
        for w in world.walls:
            length = math.hypot(w.bx - w.ax, w.by - w.ay)
            steps = max(1, int(length / (grid.resolution * 0.25)))
            for k in range(steps + 1):
                t = k / steps
                c = grid.world_to_grid(w.ax + t * (w.bx - w.ax), w.ay + t * (w.by - w.ay))
                if c is not None:
                    wall_cells[c] = True
        classified = sum(1 for (ix, iy) in wall_cells if occ[iy, ix])
        assert classified / len(wall_cells) >= 0.99

        # and no occupied cell farther than one cell from a true wall
        for ix, iy in zip(*np.nonzero(occ)[::-1]):
            near = any((ix + dx, iy + dy) in wall_cells for dx in (-1, 0, 1) for dy in (-1, 0, 1))
            assert near, f"spurious occupied cell at {(ix, iy)}"

    def test_map_only_wall_stamped(self, corridor_scenario, corridor_grid):
        # the synthetic barrier is absent from ground truth but present in the map
        world = corridor_scenario.make_world(0)
        barrier = [w for w in world.walls if w.map_only][0]
        mid = corridor_grid.world_to_grid((barrier.ax + barrier.bx) / 2 + 0.01,
                                          (barrier.ay + barrier.by) / 2)
        assert corridor_grid.cells[mid[1], mid[0]] > 0

        scan = cast_lidar(world, Pose2D(barrier.ax - 1.0, 0.44, 0.0))
        fwd = int(np.argmin(np.abs(scan.beam_angles())))
        assert scan.ranges[fwd] > 1.5  # ray passes through where the barrier would be

    def test_empty_world_builds_all_free_map(self):
        world = WorldModel([], [], [], Pose2D(0, 0, 0), seed=0)
        grid = build_static_map(world)
        assert not grid.occupied_mask().any()
        assert np.all(grid.cells < 0)  # every cell observed free
