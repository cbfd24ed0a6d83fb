"""
Exclusion zone and closeness tests
"""
import math

from hypothesis import assume, given, strategies as st

from engine.geometry import (
    in_exclusion_zone, is_close_to, ray_cast_inside, rectangle, winding_inside, winding_number,
)
from models.values import location

L_SHAPE = [(0, 0), (4, 0), (4, 1), (1, 1), (1, 4), (0, 4)]

coords = st.integers(min_value=-6, max_value=6)
grid_points = st.tuples(coords, coords)


def star_polygon(points):
    """Vertices sorted by angle around their centroid (a simple polygon for distinct angles)"""
    cx = sum(p[0] for p in points) / len(points)
    cy = sum(p[1] for p in points) / len(points)
    return sorted(points, key=lambda p: math.atan2(p[1] - cy, p[0] - cx)), (cx, cy)


class TestPointInPolygon:
    """Ray casting"""

    def test_rectangle(self):
        zone = rectangle(0, 0, 2, 2)
        assert ray_cast_inside((1, 1), zone)
        assert not ray_cast_inside((3, 1), zone)
        assert not ray_cast_inside((1, -0.5), zone)

    def test_boundary_counts_as_inside(self):
        zone = rectangle(0, 0, 2, 2)
        assert ray_cast_inside((2, 1), zone)
        assert ray_cast_inside((0, 0), zone)

    def test_concave_polygon(self):
        assert ray_cast_inside((0.5, 3), L_SHAPE)
        assert ray_cast_inside((3, 0.5), L_SHAPE)
        assert not ray_cast_inside((2, 2), L_SHAPE)

    def test_ray_through_a_vertex(self):
        diamond = [(0, -1), (1, 0), (0, 1), (-1, 0)]
        assert ray_cast_inside((-0.5, 0), diamond)
        assert not ray_cast_inside((-2, 0), diamond)

    def test_degenerate_polygons(self):
        assert not ray_cast_inside((0, 0), [])
        assert not ray_cast_inside((0, 0), [(0, 0), (1, 1)])

    def test_winding_orientation(self):
        assert winding_number((1, 1), rectangle(0, 0, 2, 2)) == 1
        assert winding_number((1, 1), list(reversed(rectangle(0, 0, 2, 2)))) == -1

    @given(st.lists(grid_points, min_size=3, max_size=8, unique=True), coords, coords)
    def test_ray_casting_agrees_with_winding(self, points, qx, qy):
        vertices, (cx, cy) = star_polygon(points)
        angles = [math.atan2(p[1] - cy, p[0] - cx) for p in vertices]
        assume(len(set(angles)) == len(angles))
        assume((cx, cy) not in points)
        query = (qx + 0.5, qy + 0.5)
        assert ray_cast_inside(query, vertices) == winding_inside(query, vertices)


class TestZones:
    """Exclusion zones of locations"""

    def test_location_records(self):
        zones = [tuple(location(x, y) for x, y in rectangle(4, 4, 6, 6))]
        assert in_exclusion_zone(location(5, 5), zones)
        assert not in_exclusion_zone(location(1, 1), zones)
        assert not in_exclusion_zone(location(5, 5), [])
        assert not in_exclusion_zone(None, zones)


class TestCloseness:
    """isCloseTo"""

    def test_epsilon(self):
        assert is_close_to(location(0, 0), location(1, 0))
        assert not is_close_to(location(0, 0), location(1, 1))
        assert is_close_to(location(0, 0), location(1, 1), eps=1.5)
        assert not is_close_to(location(0, 0), None)

    @given(grid_points, grid_points, st.floats(min_value=0, max_value=10))
    def test_symmetric(self, a, b, eps):
        pa, pb = location(*a), location(*b)
        assert is_close_to(pa, pb, eps) == is_close_to(pb, pa, eps)
        assert is_close_to(pa, pa, eps)
