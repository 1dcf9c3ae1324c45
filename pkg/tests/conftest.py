import math

import numpy as np
import pytest
from PIL import Image, ImageDraw

from uavdeploy.extraction import RasterImage
from uavdeploy.geometry import Building, Point2, Point3

MAP_BG = (242, 243, 244)
MAP_BUILDING = (217, 217, 217)


def square(x0: float, y0: float, side: float) -> list[Point2]:
    return [
        Point2(x0, y0),
        Point2(x0 + side, y0),
        Point2(x0 + side, y0 + side),
        Point2(x0, y0 + side),
    ]


def segment_prism_intersects(user: Point3, drone: Point3, building: Building) -> bool:
    """Exact oracle: does the closed 3D segment pass through the vertical
    prism of a CONVEX building footprint?

    The 2D projection of the segment is clipped against the footprint's
    half-planes (CCW polygon, interior on the left of each edge), giving
    the parameter interval where the segment is horizontally inside the
    footprint.  The segment altitude is linear in the parameter, so the
    minimum altitude over the interval is attained at an endpoint.
    """
    arr = building.footprint_array
    t0, t1 = 0.0, 1.0
    dx, dy = drone.x - user.x, drone.y - user.y
    n = len(arr)
    for i in range(n):
        x1, y1 = arr[i]
        x2, y2 = arr[(i + 1) % n]
        ex, ey = x2 - x1, y2 - y1
        # inside(t) = ex*(y(t)-y1) - ey*(x(t)-x1) >= 0, linear in t: a + b*t
        a = ex * (user.y - y1) - ey * (user.x - x1)
        b = ex * dy - ey * dx
        if abs(b) < 1e-15:
            if a < 0:
                return False
            continue
        t_cross = -a / b
        if b > 0:
            t0 = max(t0, t_cross)
        else:
            t1 = min(t1, t_cross)
        if t0 > t1:
            return False
    z_at = lambda t: user.z + t * (drone.z - user.z)
    return min(z_at(t0), z_at(t1)) <= building.height


def random_convex_footprint(rng: np.random.Generator, cx: float, cy: float, r: float) -> list[Point2]:
    """Strictly convex polygon: points on one circle at sorted random angles."""
    k = int(rng.integers(3, 8))
    angles = np.sort(rng.random(k) * 2 * np.pi)
    # well-separated angles keep the polygon far from degenerate
    while np.min(np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))) < 0.2:
        angles = np.sort(rng.random(k) * 2 * np.pi)
    radius = r * (0.6 + 0.4 * rng.random())
    return [Point2(cx + radius * np.cos(a), cy + radius * np.sin(a)) for a in angles]


def draw_map_view(shapes, size=(160, 120), circles=()):
    """Render a map-view style raster: flat background, one building color.

    ``shapes`` are pixel-coordinate polygons, ``circles`` are (cx, cy, r)
    disks.  Rasterization goes through PIL, an independent code path from
    the extraction pipeline under test.
    """
    img = Image.new("RGB", size, MAP_BG)
    d = ImageDraw.Draw(img)
    for s in shapes:
        d.polygon(s, fill=MAP_BUILDING)
    for cx, cy, r in circles:
        d.ellipse([cx - r, cy - r, cx + r, cy + r], fill=MAP_BUILDING)
    return RasterImage(np.asarray(img, dtype=np.uint8), scale=1.0)


def _rect_truth(x0, y0, x1, y1):
    """Filled pixel region of an inclusive pixel-coordinate rectangle."""
    return [
        Point2(x0 - 0.5, y0 - 0.5),
        Point2(x1 + 0.5, y0 - 0.5),
        Point2(x1 + 0.5, y1 + 0.5),
        Point2(x0 - 0.5, y1 + 0.5),
    ]


def map_view_corpus():
    """Five synthetic map-view rasters with ground-truth footprints:
    three rectilinear scenes, one L-shape, one coarse circle."""
    corpus = []
    # 1. one rectangle
    corpus.append(
        (
            draw_map_view([[(20, 20), (59, 20), (59, 39), (20, 39)]]),
            [_rect_truth(20, 20, 59, 39)],
        )
    )
    # 2. two rectangles
    corpus.append(
        (
            draw_map_view(
                [[(15, 15), (54, 15), (54, 44), (15, 44)], [(90, 60), (139, 60), (139, 99), (90, 99)]]
            ),
            [_rect_truth(15, 15, 54, 44), _rect_truth(90, 60, 139, 99)],
        )
    )
    # 3. three rectangles of mixed size
    corpus.append(
        (
            draw_map_view(
                [
                    [(10, 10), (45, 10), (45, 50), (10, 50)],
                    [(70, 20), (130, 20), (130, 45), (70, 45)],
                    [(60, 70), (110, 70), (110, 105), (60, 105)],
                ]
            ),
            [
                _rect_truth(10, 10, 45, 50),
                _rect_truth(70, 20, 130, 45),
                _rect_truth(60, 70, 110, 105),
            ],
        )
    )
    # 4. an L-shaped building
    lshape = [(20, 20), (99, 20), (99, 49), (54, 49), (54, 99), (20, 99)]
    ltruth = [
        Point2(19.5, 19.5),
        Point2(99.5, 19.5),
        Point2(99.5, 49.5),
        Point2(54.5, 49.5),
        Point2(54.5, 99.5),
        Point2(19.5, 99.5),
    ]
    corpus.append((draw_map_view([lshape]), [ltruth]))
    # 5. a coarse circle (polygonal truth with 64 vertices)
    r = 25.5
    ctruth = [
        Point2(60 + r * math.cos(a), 60 + r * math.sin(a))
        for a in np.linspace(0, 2 * math.pi, 64, endpoint=False)
    ]
    corpus.append((draw_map_view([], size=(120, 120), circles=[(60, 60, 25)]), [ctruth]))
    return corpus


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
