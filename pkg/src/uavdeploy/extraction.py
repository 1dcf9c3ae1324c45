"""Building-footprint extraction from map-view style raster images.

Map view renders every building in one flat color on a flat background,
so the pipeline is: color mask -> Canny edge detection -> Hough line
transform -> edge-chain tracing into polygons, with traced segments
snapped onto nearby Hough lines to straighten them.  Extracted footprints
are heightless polygons in world coordinates; heights are attached later
by the scenario layer.

Pixel (col, row) maps to world (origin.x + col * scale, origin.y + row *
scale); the world frame of a raster therefore has its y axis pointing
down the image, which is immaterial to the simulator.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from PIL import Image
from scipy import ndimage

from .geometry import Point2, polygon_area, polygon_intersection_area

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RasterImage:
    """RGB raster with a georeference (meters/pixel scale and world origin)."""

    pixels: np.ndarray  # (H, W, 3) uint8
    scale: float = 1.0
    origin: Point2 = field(default_factory=lambda: Point2(0.0, 0.0))

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError("pixels must be an (H, W, 3) array")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if self.scale <= 0:
            raise ValueError("scale must be > 0 meters/pixel")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def to_world(self, col: float, row: float) -> tuple[float, float]:
        return (self.origin.x + col * self.scale, self.origin.y + row * self.scale)

    def to_pixel(self, x: float, y: float) -> tuple[float, float]:
        return ((x - self.origin.x) / self.scale, (y - self.origin.y) / self.scale)


@dataclass(frozen=True)
class EdgeMap:
    """Binary edge mask, same dimensions as its source image."""

    mask: np.ndarray  # (H, W) bool

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


@dataclass(frozen=True)
class HoughLine:
    """Line in normal form rho = x*cos(theta) + y*sin(theta), pixel units."""

    rho: float
    theta: float
    support: int


@dataclass(frozen=True)
class ExtractionScore:
    """Area-overlap accuracy of extracted footprints against ground truth."""

    correct_area_fraction: float
    false_positive_fraction: float


def read_raster(path, scale: float, origin: Point2 | None = None) -> RasterImage:
    """Load a PNG or PPM raster with its georeference."""
    img = Image.open(path).convert("RGB")
    return RasterImage(
        pixels=np.asarray(img, dtype=np.uint8),
        scale=scale,
        origin=origin or Point2(0.0, 0.0),
    )


def write_raster(path, pixels: np.ndarray) -> None:
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB").save(path)


def color_mask(image: RasterImage, target_rgb, tolerance: float = 0.0) -> np.ndarray:
    """Binary mask of pixels whose every channel is within ``tolerance`` of
    the target color."""
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    px = image.pixels.astype(np.int16)
    target = np.asarray(target_rgb, dtype=np.int16)
    return (np.abs(px - target[None, None, :]) <= tolerance).all(axis=2)


def dominant_building_color(image: RasterImage) -> tuple[int, int, int]:
    """Second-most-common color: map view paints the background with the
    most common color and buildings with the next one."""
    flat = image.pixels.reshape(-1, 3)
    colors, counts = np.unique(flat, axis=0, return_counts=True)
    order = np.argsort(-counts)
    idx = order[1] if len(order) > 1 else order[0]
    return tuple(int(v) for v in colors[idx])


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=float)
_SOBEL_Y = _SOBEL_X.T


def canny_edges(
    image, low: float = 0.1, high: float = 0.3, blur_sigma: float = 0.0
) -> EdgeMap:
    """Canny edge detection on a grayscale image or binary mask.

    ``low`` and ``high`` are hysteresis thresholds as fractions of the
    maximum gradient magnitude.  Gradient filters detect horizontal,
    vertical and diagonal edges; non-maximum magnitudes along the gradient
    direction are suppressed to thin edges to single-pixel chains, then
    weak edges are kept only where 8-connected to a strong edge.  No blur
    is applied by default: map-view rasters are noiseless.
    """
    if not 0 <= low <= high:
        raise ValueError("thresholds must satisfy 0 <= low <= high")
    img = np.asarray(image, dtype=float)
    if img.ndim != 2:
        raise ValueError("expected a 2D grayscale image or mask")
    if blur_sigma > 0:
        img = ndimage.gaussian_filter(img, blur_sigma)
    gx = ndimage.convolve(img, _SOBEL_X, mode="nearest")
    gy = ndimage.convolve(img, _SOBEL_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = mag.max()
    # guard against pure float residue on (near-)constant images
    if peak <= 1e-9 * max(1.0, float(np.abs(img).max())):
        return EdgeMap(mask=np.zeros(img.shape, dtype=bool))

    # non-maximum suppression along the quantized gradient direction; the
    # asymmetric comparison (> backward, >= forward) keeps exactly one side
    # of a symmetric two-pixel ridge
    angle = np.arctan2(gy, gx)
    sector = (np.round(angle / (math.pi / 4)).astype(int)) % 4
    offsets = {0: (0, 1), 1: (1, 1), 2: (1, 0), 3: (1, -1)}
    h, w = mag.shape
    padded = np.pad(mag, 1, mode="constant")
    rows, cols = np.mgrid[0:h, 0:w]
    fwd = np.zeros_like(mag)
    bwd = np.zeros_like(mag)
    for s, (dr, dc) in offsets.items():
        m = sector == s
        fwd[m] = padded[rows[m] + 1 + dr, cols[m] + 1 + dc]
        bwd[m] = padded[rows[m] + 1 - dr, cols[m] + 1 - dc]
    thin = (mag >= fwd) & (mag > bwd) & (mag > 0)

    strong = thin & (mag >= high * peak)
    weak = thin & (mag >= low * peak)
    labels, n = ndimage.label(weak, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return EdgeMap(mask=np.zeros(img.shape, dtype=bool))
    keep = np.zeros(n + 1, dtype=bool)
    keep[np.unique(labels[strong])] = True
    keep[0] = False
    return EdgeMap(mask=keep[labels])


def hough_lines(
    edges: EdgeMap,
    rho_res: float = 1.0,
    theta_res: float = math.pi / 180.0,
    vote_threshold: int = 20,
) -> list[HoughLine]:
    """Voting line detector over (rho, theta) bins.

    Every edge pixel votes along all theta bins; accumulator cells at or
    above the vote threshold that are 3x3 local maxima become lines,
    returned strongest first.
    """
    if rho_res <= 0 or theta_res <= 0:
        raise ValueError("resolutions must be > 0")
    ys, xs = np.nonzero(edges.mask)
    if len(xs) == 0:
        return []
    thetas = np.arange(0.0, math.pi, theta_res)
    diag = math.hypot(edges.width, edges.height)
    n_rho = 2 * int(math.ceil(diag / rho_res)) + 1
    rho_offset = (n_rho - 1) // 2
    acc = np.zeros((n_rho, len(thetas)), dtype=np.int64)
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    for k in range(len(thetas)):
        rho = xs * cos_t[k] + ys * sin_t[k]
        bins = np.round(rho / rho_res).astype(int) + rho_offset
        acc[:, k] = np.bincount(bins, minlength=n_rho)
    local_max = acc == ndimage.maximum_filter(acc, size=3, mode="constant")
    peaks = np.argwhere(local_max & (acc >= vote_threshold))
    lines = [
        HoughLine(
            rho=float((r - rho_offset) * rho_res),
            theta=float(thetas[t]),
            support=int(acc[r, t]),
        )
        for r, t in peaks
    ]
    lines.sort(key=lambda l: (-l.support, l.rho, l.theta))
    return lines


# ---------------------------------------------------------------------------
# Edge-chain tracing
# ---------------------------------------------------------------------------

# clockwise Moore neighborhood ring, starting west; consecutive entries are
# themselves adjacent, which the backtrack bookkeeping below relies on
_MOORE = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)]


def _walk_chain(pixels: set[tuple[int, int]]) -> tuple[list[tuple[int, int]], bool]:
    """Order one connected component of edge pixels into a closed outline.

    Moore boundary tracing with Jacob's stopping criterion: scan the
    neighborhood clockwise from the backtrack cell, step to the first
    component pixel, and stop on re-entering the start pixel from the same
    backtrack cell.  Staircased or locally thick chains trace cleanly;
    genuinely open fragments trace out-and-back into a degenerate outline
    that the area filter later discards.
    """
    start = min(pixels)  # topmost, then leftmost: its west neighbor is background
    if len(pixels) == 1:
        return [start], False
    dir_of = {d: i for i, d in enumerate(_MOORE)}
    current = start
    backtrack = (start[0], start[1] - 1)
    initial = (start, backtrack)
    chain = [start]
    guard = 0
    while guard < 8 * len(pixels) + 16:
        guard += 1
        start_idx = dir_of[(backtrack[0] - current[0], backtrack[1] - current[1])]
        nxt = None
        for k in range(1, 9):
            idx = (start_idx + k) % 8
            cand = (current[0] + _MOORE[idx][0], current[1] + _MOORE[idx][1])
            if cand in pixels:
                nxt = cand
                break
            backtrack = cand
        if nxt is None:
            return chain, False
        current = nxt
        if (current, backtrack) == initial:
            return chain, len(chain) >= 3
        chain.append(current)
    return chain, False


def _perp_distance(p, a, b) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    norm = math.hypot(dx, dy)
    if norm == 0:
        return math.hypot(px - ax, py - ay)
    return abs(dx * (py - ay) - dy * (px - ax)) / norm


def _douglas_peucker(points: list, eps: float) -> list[int]:
    """Indices of the simplified open polyline."""

    def rec(i, j):
        if j <= i + 1:
            return []
        dists = [(_perp_distance(points[k], points[i], points[j]), k) for k in range(i + 1, j)]
        dmax, kmax = max(dists)
        if dmax <= eps:
            return []
        return rec(i, kmax) + [kmax] + rec(kmax, j)

    return [0] + rec(0, len(points) - 1) + [len(points) - 1]


def _simplify_ring(chain: list[tuple[int, int]], eps: float) -> list[tuple[float, float]]:
    """Douglas-Peucker on a closed ring, anchored at two extreme points."""
    pts = [(float(c), float(r)) for r, c in chain]  # (x, y) pixel coords
    n = len(pts)
    if n < 4:
        return pts
    far = max(range(n), key=lambda k: (pts[k][0] - pts[0][0]) ** 2 + (pts[k][1] - pts[0][1]) ** 2)
    seg1 = pts[: far + 1]
    seg2 = pts[far:] + [pts[0]]
    idx1 = _douglas_peucker(seg1, eps)
    idx2 = _douglas_peucker(seg2, eps)
    out = [seg1[i] for i in idx1[:-1]] + [seg2[i] for i in idx2[:-1]]
    return out


def _turn_angle(prev, v, nxt) -> float:
    """Absolute direction change at vertex v, in degrees."""
    a1 = math.atan2(v[1] - prev[1], v[0] - prev[0])
    a2 = math.atan2(nxt[1] - v[1], nxt[0] - v[0])
    d = abs(a2 - a1)
    if d > math.pi:
        d = 2 * math.pi - d
    return math.degrees(d)


def _merge_flat_vertices(poly: list, corner_threshold_deg: float, max_dev: float = 1.5) -> list:
    """Drop vertices where the direction change stays at or below the
    corner threshold, flattest first, keeping at least a triangle.

    A vertex is only dropped when the outline stays within ``max_dev``
    pixels of the shortcut, so gentle rasterization jitter collapses into
    straight edges while smooth curves keep enough vertices to stay true
    to their shape.
    """
    pts = list(poly)
    while len(pts) > 3:
        n = len(pts)
        candidates = []
        for k in range(n):
            turn = _turn_angle(pts[k - 1], pts[k], pts[(k + 1) % n])
            if turn > corner_threshold_deg:
                continue
            dev = _perp_distance(pts[k], pts[k - 1], pts[(k + 1) % n])
            if dev <= max_dev:
                candidates.append((turn, k))
        if not candidates:
            break
        pts.pop(min(candidates)[1])
    return pts


def _merge_short_edges(poly: list, min_edge_len: float) -> list:
    """Collapse edges shorter than the minimum, dropping the flatter endpoint."""
    pts = list(poly)
    while len(pts) > 3:
        n = len(pts)
        lengths = [math.hypot(pts[(k + 1) % n][0] - pts[k][0], pts[(k + 1) % n][1] - pts[k][1]) for k in range(n)]
        k_min = min(range(n), key=lambda k: (lengths[k], k))
        if lengths[k_min] >= min_edge_len:
            break
        a, b = k_min, (k_min + 1) % n
        turn_a = _turn_angle(pts[a - 1], pts[a], pts[(a + 1) % n])
        turn_b = _turn_angle(pts[b - 1], pts[b], pts[(b + 1) % n])
        pts.pop(a if turn_a <= turn_b else b)
    return pts


def _line_point_distance(line: HoughLine, p) -> float:
    return abs(p[0] * math.cos(line.theta) + p[1] * math.sin(line.theta) - line.rho)


def _line_intersection(l1: HoughLine, l2: HoughLine):
    a1, b1 = math.cos(l1.theta), math.sin(l1.theta)
    a2, b2 = math.cos(l2.theta), math.sin(l2.theta)
    det = a1 * b2 - a2 * b1
    if abs(det) < 1e-6:
        return None
    x = (l1.rho * b2 - l2.rho * b1) / det
    y = (a1 * l2.rho - a2 * l1.rho) / det
    return (x, y)


def _project_on_line(line: HoughLine, p):
    c, s = math.cos(line.theta), math.sin(line.theta)
    d = p[0] * c + p[1] * s - line.rho
    return (p[0] - d * c, p[1] - d * s)


def _snap_to_lines(poly: list, lines: Sequence[HoughLine], snap_px: float) -> list:
    """Regularize traced edges with the Hough lines: an edge whose both
    endpoints lie within ``snap_px`` of a detected line is snapped onto it,
    and vertices between two snapped edges move to the line intersection."""
    if not lines or len(poly) < 3:
        return list(poly)
    n = len(poly)
    edge_line: list[HoughLine | None] = []
    for k in range(n):
        a, b = poly[k], poly[(k + 1) % n]
        best = None
        best_key = None
        for line in lines:
            d = max(_line_point_distance(line, a), _line_point_distance(line, b))
            if d > snap_px:
                continue
            key = (d, -line.support)  # closest fit first, then strongest
            if best_key is None or key < best_key:
                best_key = key
                best = line
        edge_line.append(best)
    out = []
    for k in range(n):
        prev_line = edge_line[(k - 1) % n]
        next_line = edge_line[k]
        v = poly[k]
        if prev_line is not None and next_line is not None and prev_line is not next_line:
            inter = _line_intersection(prev_line, next_line)
            if inter is not None and math.hypot(inter[0] - v[0], inter[1] - v[1]) <= 3 * snap_px:
                out.append(inter)
                continue
        if prev_line is not None:
            out.append(_project_on_line(prev_line, v))
        elif next_line is not None:
            out.append(_project_on_line(next_line, v))
        else:
            out.append(v)
    return out


def trace_polygons(
    edges: EdgeMap,
    lines: Sequence[HoughLine] = (),
    corner_threshold_deg: float = 30.0,
    min_edge_len: float = 4.0,
    min_area_px: float = 25.0,
    scale: float = 1.0,
    origin: Point2 | None = None,
    snap_px: float = 2.0,
) -> list[list[Point2]]:
    """Trace closed edge chains into polygon footprints in world coordinates.

    Chains are followed pixel by pixel; vertices are kept where the local
    direction changes by more than the corner threshold, so straight and
    gently staircased runs collapse to single edges while rounded outlines
    keep enough vertices to approximate the curve.  Snapping against the
    supplied Hough lines straightens rasterization jitter.  Open chains
    that cannot close and polygons below the area floor are discarded and
    logged, never fatal.
    """
    if corner_threshold_deg <= 0 or min_edge_len <= 0:
        raise ValueError("thresholds must be > 0")
    origin = origin or Point2(0.0, 0.0)
    labels, n = ndimage.label(edges.mask, structure=np.ones((3, 3), dtype=int))
    polygons: list[list[Point2]] = []
    discarded = 0
    for comp in range(1, n + 1):
        rows, cols = np.nonzero(labels == comp)
        pixels = set(zip(rows.tolist(), cols.tolist()))
        chain, closed = _walk_chain(pixels)
        if not closed or len(chain) < 8:
            discarded += 1
            continue
        ring = _simplify_ring(chain, eps=1.0)
        ring = _merge_flat_vertices(ring, corner_threshold_deg)
        ring = _merge_short_edges(ring, min_edge_len)
        ring = _snap_to_lines(ring, lines, snap_px)
        if len(ring) < 3:
            discarded += 1
            continue
        area = polygon_area(ring)
        if area < min_area_px:
            discarded += 1
            continue
        polygons.append(
            [Point2(origin.x + x * scale, origin.y + y * scale) for x, y in ring]
        )
    if discarded:
        logger.debug("trace_polygons discarded %d fragment(s)", discarded)
    return polygons


def extract_footprints(
    image: RasterImage,
    target_color=None,
    tolerance: float = 10.0,
    canny_low: float = 0.1,
    canny_high: float = 0.3,
    corner_threshold_deg: float = 30.0,
    min_edge_len: float = 4.0,
    min_area_px: float = 25.0,
    hough_vote_threshold: int = 20,
) -> list[list[Point2]]:
    """Full extraction pipeline from a raster to world-frame footprints."""
    if target_color is None:
        target_color = dominant_building_color(image)
    mask = color_mask(image, target_color, tolerance)
    edges = canny_edges(mask.astype(float), canny_low, canny_high)
    lines = hough_lines(edges, vote_threshold=hough_vote_threshold)
    return trace_polygons(
        edges,
        lines,
        corner_threshold_deg=corner_threshold_deg,
        min_edge_len=min_edge_len,
        min_area_px=min_area_px,
        scale=image.scale,
        origin=image.origin,
    )


def score_extraction(
    extracted: Sequence[Sequence[Point2]],
    truth: Sequence[Sequence[Point2]],
) -> ExtractionScore:
    """Area-overlap score of extracted footprints against ground truth.

    correct_area_fraction is the fraction of the true building area that
    the extraction recovered; false_positive_fraction is the extra area
    claimed outside the truth, relative to the same true area.
    """
    truth = list(truth)
    if not truth:
        raise ValueError("ground truth must be non-empty")
    extracted = list(extracted)
    truth_area = sum(polygon_area(t) for t in truth)
    if not extracted:
        return ExtractionScore(0.0, 0.0)
    overlap = 0.0
    extracted_area = 0.0
    for e in extracted:
        extracted_area += polygon_area(e)
        for t in truth:
            overlap += polygon_intersection_area(e, t)
    correct = min(1.0, overlap / truth_area)
    false_positive = max(0.0, (extracted_area - overlap) / truth_area)
    return ExtractionScore(correct, false_positive)
