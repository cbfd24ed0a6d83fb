"""
Geometry Helpers
Point-in-polygon tests for exclusion zones and the closeness predicate
"""
import math
from typing import Any, Iterable, Sequence, Tuple

import numpy as np

from config import EPSILON_CLOSE
from models.values import location_xy

Point = Tuple[float, float]

EDGE_TOLERANCE = 1e-9


def polygon_array(vertices: Iterable[Any]) -> np.ndarray:
    """Vertices (Location records or (x, y) pairs) as an (n, 2) float array"""
    points = []
    for v in vertices:
        xy = location_xy(v)
        points.append(xy if xy is not None else (float(v[0]), float(v[1])))
    return np.asarray(points, dtype=float).reshape(-1, 2)


def on_boundary(point: Point, poly: np.ndarray) -> bool:
    """True when point lies on one of the polygon edges"""
    if len(poly) < 2:
        return False
    a = poly
    b = np.roll(poly, -1, axis=0)
    px, py = point
    cross = (b[:, 0] - a[:, 0]) * (py - a[:, 1]) - (b[:, 1] - a[:, 1]) * (px - a[:, 0])
    within_x = (np.minimum(a[:, 0], b[:, 0]) - EDGE_TOLERANCE <= px) & (px <= np.maximum(a[:, 0], b[:, 0]) + EDGE_TOLERANCE)
    within_y = (np.minimum(a[:, 1], b[:, 1]) - EDGE_TOLERANCE <= py) & (py <= np.maximum(a[:, 1], b[:, 1]) + EDGE_TOLERANCE)
    return bool(np.any((np.abs(cross) <= EDGE_TOLERANCE) & within_x & within_y))


def ray_cast_inside(point: Point, vertices: Sequence[Any]) -> bool:
    """
    Even-odd ray casting towards +x.

    Each edge counts when it straddles the ray's y (half-open on the upper
    vertex) and the crossing lies right of the point. Points on an edge are
    inside.
    """
    poly = polygon_array(vertices)
    if len(poly) < 3:
        return False
    if on_boundary(point, poly):
        return True
    px, py = point
    a = poly
    b = np.roll(poly, -1, axis=0)
    straddles = (a[:, 1] > py) != (b[:, 1] > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = a[:, 0] + (py - a[:, 1]) * (b[:, 0] - a[:, 0]) / (b[:, 1] - a[:, 1])
    crossings = np.count_nonzero(straddles & (x_cross > px))
    return bool(crossings % 2 == 1)


def winding_number(point: Point, vertices: Sequence[Any]) -> int:
    """Winding number of the polygon around point (independent of ray casting)"""
    poly = polygon_array(vertices)
    px, py = point
    wn = 0
    count = len(poly)
    for i in range(count):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % count]
        is_left = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        if y0 <= py:
            if y1 > py and is_left > 0:
                wn += 1
        elif y1 <= py and is_left < 0:
            wn -= 1
    return wn


def winding_inside(point: Point, vertices: Sequence[Any]) -> bool:
    poly = polygon_array(vertices)
    if len(poly) < 3:
        return False
    if on_boundary(point, poly):
        return True
    return winding_number(point, poly) != 0


def zone_vertices(zone: Any) -> Sequence[Any]:
    """Vertex list of a Zone record (or a bare vertex sequence)"""
    if hasattr(zone, "get") and hasattr(zone, "has") and zone.has("vertices"):
        return zone.get("vertices")
    return zone


def in_exclusion_zone(pos: Any, zones: Iterable[Any]) -> bool:
    xy = location_xy(pos)
    if xy is None:
        return False
    return any(ray_cast_inside(xy, zone_vertices(z)) for z in zones or ())


def is_close_to(a: Any, b: Any, eps: float = EPSILON_CLOSE) -> bool:
    """Euclidean distance of two locations within eps"""
    pa, pb = location_xy(a), location_xy(b)
    if pa is None or pb is None:
        return False
    return math.hypot(pa[0] - pb[0], pa[1] - pb[1]) <= eps


def rectangle(x0: float, y0: float, x1: float, y1: float) -> list:
    """Counter-clockwise vertex list of an axis-aligned rectangle"""
    return [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
