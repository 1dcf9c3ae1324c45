"""2D/3D computational geometry for the deployment simulator.

Points, polygonal building footprints extruded into vertical prisms,
point-in-polygon tests, line-of-sight blockage against buildings, and
polygon area / intersection-area computations.  All coordinates are in
meters in a flat local frame.  Every value here is immutable after
construction and every function is pure, so concurrent use is safe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Tolerance for on-boundary / collinearity predicates, in meters.
# Scene coordinates are O(100 m), so 1e-9 is far below any physical scale.
_EPS = 1e-9


class InvalidGeometryError(ValueError):
    """Raised for degenerate or self-intersecting polygon input."""


@dataclass(frozen=True)
class Point2:
    """Ground-plane point (x, y) in meters."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidGeometryError(f"non-finite coordinates ({self.x}, {self.y})")


@dataclass(frozen=True)
class Point3:
    """3D point (x, y, z) in meters, z is altitude above ground (z >= 0)."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise InvalidGeometryError(f"non-finite coordinates ({self.x}, {self.y}, {self.z})")
        if self.z < 0:
            raise InvalidGeometryError(f"altitude must be >= 0, got {self.z}")


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangular ground region."""

    width: float
    height: float
    origin: Point2 = field(default_factory=lambda: Point2(0.0, 0.0))

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise InvalidGeometryError("region dimensions must be positive")

    def contains(self, x: float, y: float) -> bool:
        return (
            self.origin.x <= x <= self.origin.x + self.width
            and self.origin.y <= y <= self.origin.y + self.height
        )

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


def _as_vertex_array(poly: Sequence) -> np.ndarray:
    """Coerce a vertex sequence (Point2s or (x, y) pairs) to an (N, 2) array."""
    if isinstance(poly, np.ndarray):
        arr = np.asarray(poly, dtype=float)
    else:
        arr = np.array(
            [(p.x, p.y) if isinstance(p, Point2) else (float(p[0]), float(p[1])) for p in poly],
            dtype=float,
        )
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidGeometryError("polygon must be a sequence of 2D vertices")
    return arr


def signed_area(poly: Sequence) -> float:
    """Shoelace signed area; positive for counter-clockwise vertex order."""
    arr = _as_vertex_array(poly)
    if len(arr) < 3:
        raise InvalidGeometryError("polygon needs at least 3 vertices")
    x, y = arr[:, 0], arr[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_area(poly: Sequence) -> float:
    """Absolute shoelace area of a simple polygon, in square meters."""
    return abs(signed_area(poly))


def _segments_intersect(p1, p2, p3, p4) -> bool:
    """True if closed segments p1p2 and p3p4 share any point."""

    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        if v > _EPS:
            return 1
        if v < -_EPS:
            return -1
        return 0

    def on_segment(a, b, c):
        return (
            min(a[0], b[0]) - _EPS <= c[0] <= max(a[0], b[0]) + _EPS
            and min(a[1], b[1]) - _EPS <= c[1] <= max(a[1], b[1]) + _EPS
        )

    o1, o2 = orient(p1, p2, p3), orient(p1, p2, p4)
    o3, o4 = orient(p3, p4, p1), orient(p3, p4, p2)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_segment(p1, p2, p3):
        return True
    if o2 == 0 and on_segment(p1, p2, p4):
        return True
    if o3 == 0 and on_segment(p3, p4, p1):
        return True
    if o4 == 0 and on_segment(p3, p4, p2):
        return True
    return False


def _is_simple(arr: np.ndarray) -> bool:
    """Check that no two non-adjacent edges of the closed ring intersect."""
    n = len(arr)
    edges = [(arr[i], arr[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex by construction
            if _segments_intersect(edges[i][0], edges[i][1], edges[j][0], edges[j][1]):
                return False
    return True


class Building:
    """Extruded building: a simple footprint polygon with a height.

    Vertices are normalized to counter-clockwise order on construction;
    self-intersecting or degenerate footprints are rejected.  The obstacle
    volume is the vertical prism from z = 0 up to ``height``.
    """

    __slots__ = ("vertices", "height", "_arr", "_bbox")

    def __init__(self, vertices: Sequence, height: float):
        arr = _as_vertex_array(vertices)
        if len(arr) < 3:
            raise InvalidGeometryError("building footprint needs at least 3 vertices")
        if not math.isfinite(height) or height <= 0:
            raise InvalidGeometryError(f"building height must be > 0, got {height}")
        sa = signed_area(arr)
        if abs(sa) <= _EPS:
            raise InvalidGeometryError("degenerate (zero-area) footprint")
        if sa < 0:
            arr = arr[::-1].copy()
        if not _is_simple(arr):
            raise InvalidGeometryError("self-intersecting footprint")
        object.__setattr__(self, "vertices", tuple(Point2(float(x), float(y)) for x, y in arr))
        object.__setattr__(self, "height", float(height))
        object.__setattr__(self, "_arr", arr)
        object.__setattr__(
            self, "_bbox", (arr[:, 0].min(), arr[:, 0].max(), arr[:, 1].min(), arr[:, 1].max())
        )

    def __setattr__(self, name, value):
        raise AttributeError("Building is immutable")

    def __repr__(self) -> str:
        return f"Building({len(self.vertices)} vertices, height={self.height:g} m)"

    @property
    def footprint_array(self) -> np.ndarray:
        return self._arr

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the footprint."""
        return self._bbox

    def area(self) -> float:
        return polygon_area(self._arr)

    def contains_xy(self, x: float, y: float) -> bool:
        return point_in_polygon(Point2(x, y), self._arr)


def distance_3d(a: Point3, b: Point3) -> float:
    """Euclidean distance between two 3D points, in meters."""
    return math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2)


def point_in_polygon(p: Point2, poly: Sequence) -> bool:
    """True iff p is inside the simple polygon or on its boundary.

    Boundary points count as inside: building tests use this as a
    conservative collision buffer.
    """
    arr = _as_vertex_array(poly)
    if len(arr) < 3:
        raise InvalidGeometryError("polygon needs at least 3 vertices")
    res = points_in_polygon(np.array([[p.x, p.y]]), arr)
    return bool(res[0])


def points_in_polygon(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Vectorized boundary-inclusive point-in-polygon test.

    points: (N, 2) array; poly: (V, 2) vertex array.  Returns (N,) bool.
    """
    px = points[:, 0]
    py = points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    boundary = np.zeros(len(points), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        # on-edge test: collinear and within the edge's bounding box
        cross = (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1)
        on_line = np.abs(cross) <= _EPS * max(1.0, abs(x2 - x1) + abs(y2 - y1))
        in_box = (
            (px >= min(x1, x2) - _EPS)
            & (px <= max(x1, x2) + _EPS)
            & (py >= min(y1, y2) - _EPS)
            & (py <= max(y1, y2) + _EPS)
        )
        boundary |= on_line & in_box
        # half-open crossing rule avoids double counting at shared vertices
        crosses = (y1 > py) != (y2 > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (px < x_at)
    return inside | boundary


def _sample_count(length: float, step: float) -> int:
    return max(1, int(math.ceil(length / step)))


def _sample_parameters(length: float, step: float) -> np.ndarray:
    """Uniform arc-length sample fractions covering [0, 1] at spacing <= step."""
    n = _sample_count(length, step)
    return np.arange(n + 1) / n


def los_blocked(
    user: Point3,
    drone: Point3,
    buildings: Iterable[Building],
    step: float = 1.0,
) -> bool:
    """True iff the user-drone segment passes through any building prism.

    The closed segment is sampled at uniform spacing <= ``step`` (endpoints
    included); a sample blocks when its ground projection lies within a
    footprint and its altitude does not clear the building height.
    """
    if step <= 0:
        raise ValueError("sampling step must be positive")
    buildings = list(buildings)
    if not buildings:
        return False
    length = distance_3d(user, drone)
    t = _sample_parameters(length, step)
    xs = user.x + t * (drone.x - user.x)
    ys = user.y + t * (drone.y - user.y)
    zs = user.z + t * (drone.z - user.z)
    pts = np.column_stack([xs, ys])
    for b in buildings:
        xmin, xmax, ymin, ymax = b.bbox
        low = zs <= b.height + _EPS
        near = low & (xs >= xmin - _EPS) & (xs <= xmax + _EPS) & (ys >= ymin - _EPS) & (ys <= ymax + _EPS)
        if not near.any():
            continue
        if points_in_polygon(pts[near], b.footprint_array).any():
            return True
    return False


def los_mask(
    users_xy: np.ndarray,
    drone: tuple[float, float, float],
    buildings: Sequence[Building],
    step: float = 1.0,
) -> np.ndarray:
    """Vectorized LoS test from one drone position to many ground users.

    users_xy: (L, 2) array of ground positions (z = 0).  Returns (L,) bool,
    True where the link has line of sight (i.e. NOT blocked).  Semantics
    match :func:`los_blocked` with the same sampling step.
    """
    L = len(users_xy)
    if not buildings:
        return np.ones(L, dtype=bool)
    dx, dy, dz = drone
    dists = np.sqrt(
        (users_xy[:, 0] - dx) ** 2 + (users_xy[:, 1] - dy) ** 2 + dz**2
    )
    # per-link sample fractions k / n_i, identical to the scalar test's
    # sample set so both paths make the same blockage decisions; shorter
    # links clamp at 1, which only duplicates their endpoint sample
    counts = np.maximum(1, np.ceil(dists / step).astype(int))
    k = np.arange(counts.max() + 1)
    t = np.minimum(k[None, :] / counts[:, None], 1.0)  # (L, n+1)
    sx = users_xy[:, 0][:, None] + t * (dx - users_xy[:, 0][:, None])
    sy = users_xy[:, 1][:, None] + t * (dy - users_xy[:, 1][:, None])
    sz = t * dz  # users are at ground level
    blocked = np.zeros(L, dtype=bool)
    for b in buildings:
        xmin, xmax, ymin, ymax = b.bbox
        zmask = sz <= b.height + _EPS
        if not zmask.any():
            continue
        cand = (
            zmask
            & (sx >= xmin - _EPS)
            & (sx <= xmax + _EPS)
            & (sy >= ymin - _EPS)
            & (sy <= ymax + _EPS)
        )
        cand &= ~blocked[:, None]
        idx = np.nonzero(cand)
        if len(idx[0]) == 0:
            continue
        pts = np.column_stack([sx[idx], sy[idx]])
        hit = points_in_polygon(pts, b.footprint_array)
        if hit.any():
            blocked[np.unique(idx[0][hit])] = True
    return ~blocked


# ---------------------------------------------------------------------------
# Polygon intersection area via clipping
# ---------------------------------------------------------------------------


def _clip_convex(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Sutherland-Hodgman: clip a (possibly concave) subject polygon by a
    convex CCW clip polygon.  Returns the clipped vertex list (may be empty).
    """
    output = [tuple(v) for v in subject]
    n = len(clip)
    for i in range(n):
        if not output:
            return np.empty((0, 2))
        cx1, cy1 = clip[i]
        cx2, cy2 = clip[(i + 1) % n]
        ex, ey = cx2 - cx1, cy2 - cy1

        def inside(p):
            return ex * (p[1] - cy1) - ey * (p[0] - cx1) >= -_EPS

        def intersect(s, e):
            dx, dy = e[0] - s[0], e[1] - s[1]
            denom = ex * dy - ey * dx
            if abs(denom) < 1e-30:
                return e
            t = (ex * (s[1] - cy1) - ey * (s[0] - cx1)) / -denom
            return (s[0] + t * dx, s[1] + t * dy)

        input_list = output
        output = []
        s = input_list[-1]
        for e in input_list:
            if inside(e):
                if not inside(s):
                    output.append(intersect(s, e))
                output.append(e)
            elif inside(s):
                output.append(intersect(s, e))
            s = e
    return np.array(output) if output else np.empty((0, 2))


def _triangulate(poly: np.ndarray) -> list[np.ndarray]:
    """Ear-clipping triangulation of a simple polygon (any winding)."""
    arr = poly.copy()
    if signed_area(arr) < 0:
        arr = arr[::-1].copy()
    idx = list(range(len(arr)))
    triangles: list[np.ndarray] = []

    def _is_reflex(k: int) -> bool:
        m = len(idx)
        a, b, c = arr[idx[(k - 1) % m]], arr[idx[k]], arr[idx[(k + 1) % m]]
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]) < -_EPS

    guard = 0
    while len(idx) > 3 and guard < 10000:
        guard += 1
        clipped = False
        m = len(idx)
        reflex = {idx[k] for k in range(m) if _is_reflex(k)}
        for k in range(m):
            ia, ib, ic = idx[(k - 1) % m], idx[k], idx[(k + 1) % m]
            a, b, c = arr[ia], arr[ib], arr[ic]
            cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
            if cross <= _EPS:
                continue  # reflex or collinear corner, not an ear
            # no reflex vertex may lie inside or on the candidate ear; the
            # closed test catches pinches where a reflex corner sits exactly
            # on the ear's diagonal
            ear_ok = True
            for j in idx:
                if j in (ia, ib, ic) or j not in reflex:
                    continue
                p = arr[j]
                d1 = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
                d2 = (c[0] - b[0]) * (p[1] - b[1]) - (c[1] - b[1]) * (p[0] - b[0])
                d3 = (a[0] - c[0]) * (p[1] - c[1]) - (a[1] - c[1]) * (p[0] - c[0])
                if d1 >= -_EPS and d2 >= -_EPS and d3 >= -_EPS:
                    ear_ok = False
                    break
            if ear_ok:
                triangles.append(np.array([a, b, c]))
                idx.pop(k)
                clipped = True
                break
        if not clipped:
            # numerically stuck (collinear runs); drop the flattest corner
            flattest = min(
                range(len(idx)),
                key=lambda k: abs(
                    (arr[idx[k]][0] - arr[idx[(k - 1) % len(idx)]][0])
                    * (arr[idx[(k + 1) % len(idx)]][1] - arr[idx[(k - 1) % len(idx)]][1])
                    - (arr[idx[k]][1] - arr[idx[(k - 1) % len(idx)]][1])
                    * (arr[idx[(k + 1) % len(idx)]][0] - arr[idx[(k - 1) % len(idx)]][0])
                ),
            )
            idx.pop(flattest)
    if len(idx) == 3:
        triangles.append(arr[idx])
    return triangles


def polygon_intersection_area(a: Sequence, b: Sequence) -> float:
    """Area of the intersection of two simple polygons, in square meters.

    The second polygon is triangulated and the first is clipped against
    each (convex) triangle, so concave inputs are handled on both sides.
    """
    arr_a = _as_vertex_array(a)
    arr_b = _as_vertex_array(b)
    if len(arr_a) < 3 or len(arr_b) < 3:
        raise InvalidGeometryError("polygon needs at least 3 vertices")
    if abs(signed_area(arr_a)) <= _EPS or abs(signed_area(arr_b)) <= _EPS:
        raise InvalidGeometryError("degenerate (zero-area) polygon")
    if signed_area(arr_a) < 0:
        arr_a = arr_a[::-1].copy()
    # quick reject on bounding boxes
    if (
        arr_a[:, 0].max() < arr_b[:, 0].min() - _EPS
        or arr_b[:, 0].max() < arr_a[:, 0].min() - _EPS
        or arr_a[:, 1].max() < arr_b[:, 1].min() - _EPS
        or arr_b[:, 1].max() < arr_a[:, 1].min() - _EPS
    ):
        return 0.0
    total = 0.0
    for tri in _triangulate(arr_b):
        clipped = _clip_convex(arr_a, tri)
        if len(clipped) >= 3:
            total += abs(signed_area(clipped))
    return total


# ---------------------------------------------------------------------------
# Polygon file I/O (GeoJSON-compatible, coordinates in region-frame meters)
# ---------------------------------------------------------------------------


def load_polygon_file(path) -> list[tuple[list[Point2], float | None]]:
    """Read footprints (and optional heights) from a polygon JSON file.

    The format is a GeoJSON FeatureCollection of Polygon features with an
    optional numeric ``height`` property.  Only exterior rings are used.
    """
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise InvalidGeometryError("polygon file must be a FeatureCollection")
    out: list[tuple[list[Point2], float | None]] = []
    for feat in doc.get("features", []):
        geom = feat.get("geometry", {})
        if geom.get("type") != "Polygon":
            raise InvalidGeometryError(f"unsupported geometry type {geom.get('type')!r}")
        ring = geom["coordinates"][0]
        if len(ring) >= 2 and ring[0] == ring[-1]:
            ring = ring[:-1]  # drop GeoJSON closing duplicate
        verts = [Point2(float(x), float(y)) for x, y in ring]
        height = feat.get("properties", {}).get("height")
        out.append((verts, float(height) if height is not None else None))
    return out


def load_buildings(path) -> list[Building]:
    """Read a polygon file whose every feature carries a height property."""
    entries = load_polygon_file(path)
    buildings = []
    for i, (verts, height) in enumerate(entries):
        if height is None:
            raise InvalidGeometryError(f"feature {i} has no height property")
        buildings.append(Building(verts, height))
    return buildings


def save_polygon_file(path, footprints: Sequence[Sequence[Point2]], heights=None) -> None:
    """Write footprints (optionally with heights) as a polygon JSON file."""
    features = []
    for i, verts in enumerate(footprints):
        ring = [[float(p.x), float(p.y)] for p in verts]
        ring.append(ring[0])
        props = {}
        if heights is not None and heights[i] is not None:
            props["height"] = float(heights[i])
        features.append(
            {
                "type": "Feature",
                "properties": props,
                "geometry": {"type": "Polygon", "coordinates": [ring]},
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=2)
        fh.write("\n")
