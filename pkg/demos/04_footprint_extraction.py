"""Building-footprint extraction from a map-view style raster.

Map view paints buildings in one flat color, so extraction is: color mask
-> Canny edges -> Hough lines -> polygon tracing with line snapping.  The
result is written to the same polygon file format the simulator ingests.
"""

import tempfile
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from uavdeploy import canny_edges, color_mask, extract_footprints, hough_lines, score_extraction
from uavdeploy.extraction import RasterImage, write_raster
from uavdeploy.geometry import Point2, load_polygon_file, polygon_area, save_polygon_file

BG = (242, 243, 244)
BUILDING = (217, 217, 217)

# render a small campus: two rectangles and an L-shaped hall
canvas = Image.new("RGB", (200, 150), BG)
draw = ImageDraw.Draw(canvas)
draw.polygon([(20, 20), (79, 20), (79, 49), (20, 49)], fill=BUILDING)
draw.polygon([(120, 30), (179, 30), (179, 89), (120, 89)], fill=BUILDING)
draw.polygon([(30, 70), (99, 70), (99, 99), (64, 99), (64, 134), (30, 134)], fill=BUILDING)
image = RasterImage(np.asarray(canvas, dtype=np.uint8), scale=1.0)

mask = color_mask(image, BUILDING, tolerance=10)
edges = canny_edges(mask.astype(float))
lines = hough_lines(edges, vote_threshold=20)
print(f"mask: {mask.sum()} building pixels")
print(f"edges: {edges.mask.sum()} edge pixels, {len(lines)} Hough lines")

footprints = extract_footprints(image)  # building color auto-detected
print(f"\nextracted {len(footprints)} footprints:")
for fp in footprints:
    print(f"  {len(fp)} vertices, {polygon_area(fp):7.1f} m^2")

truth = [
    [Point2(19.5, 19.5), Point2(79.5, 19.5), Point2(79.5, 49.5), Point2(19.5, 49.5)],
    [Point2(119.5, 29.5), Point2(179.5, 29.5), Point2(179.5, 89.5), Point2(119.5, 89.5)],
    [Point2(29.5, 69.5), Point2(99.5, 69.5), Point2(99.5, 99.5), Point2(64.5, 99.5),
     Point2(64.5, 134.5), Point2(29.5, 134.5)],
]
score = score_extraction(footprints, truth)
print(f"\naccuracy: {score.correct_area_fraction:.1%} of true area recovered, "
      f"{score.false_positive_fraction:.1%} extra claimed")

# round-trip through the polygon file format the simulator reads
with tempfile.TemporaryDirectory() as tmp:
    raster_path = Path(tmp) / "campus.png"
    polygons_path = Path(tmp) / "footprints.json"
    write_raster(raster_path, image.pixels)
    save_polygon_file(polygons_path, footprints)
    print(f"\nwrote {raster_path.name} and {polygons_path.name}; "
          f"reloaded {len(load_polygon_file(polygons_path))} footprints")
