"""Environment-aware deployment of drone base stations.

A deterministic simulator and optimizer for placing UAV base stations
over a ground region with 3D polygonal building obstacles, plus a
building-footprint extraction pipeline for map-view raster images.
"""

from .channel import ChannelParams, LinkState, hover_time, noise_power, p_los, rate, received_power, sinr
from .deployment import (
    Association,
    CandidateGrid,
    DeploymentResult,
    SearchConfig,
    ThresholdMatrix,
    UserNode,
    associate_users,
    build_candidate_grid,
    build_threshold_matrix,
    evaluate_placements,
    greedy_seed,
    maximize_coverage,
    min_drones_full_coverage,
    minimize_hover_time,
    probabilistic_deployment,
    random_deployment,
    refine_placements,
)
from .extraction import (
    EdgeMap,
    ExtractionScore,
    HoughLine,
    RasterImage,
    canny_edges,
    color_mask,
    extract_footprints,
    hough_lines,
    score_extraction,
    trace_polygons,
)
from .geometry import (
    Building,
    Point2,
    Point3,
    Region,
    distance_3d,
    load_buildings,
    load_polygon_file,
    los_blocked,
    point_in_polygon,
    polygon_area,
    polygon_intersection_area,
    save_polygon_file,
)
from .scenario import (
    RunRecord,
    ScenarioConfig,
    SweepSpec,
    assign_heights,
    export_records,
    generate_users,
    run_scenario,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "Association",
    "Building",
    "CandidateGrid",
    "ChannelParams",
    "DeploymentResult",
    "EdgeMap",
    "ExtractionScore",
    "HoughLine",
    "LinkState",
    "Point2",
    "Point3",
    "RasterImage",
    "Region",
    "RunRecord",
    "ScenarioConfig",
    "SearchConfig",
    "SweepSpec",
    "ThresholdMatrix",
    "UserNode",
    "assign_heights",
    "associate_users",
    "build_candidate_grid",
    "build_threshold_matrix",
    "canny_edges",
    "color_mask",
    "distance_3d",
    "evaluate_placements",
    "export_records",
    "extract_footprints",
    "generate_users",
    "greedy_seed",
    "hough_lines",
    "hover_time",
    "load_buildings",
    "load_polygon_file",
    "los_blocked",
    "maximize_coverage",
    "min_drones_full_coverage",
    "minimize_hover_time",
    "noise_power",
    "p_los",
    "point_in_polygon",
    "polygon_area",
    "polygon_intersection_area",
    "probabilistic_deployment",
    "random_deployment",
    "rate",
    "received_power",
    "refine_placements",
    "run_scenario",
    "run_sweep",
    "save_polygon_file",
    "score_extraction",
    "sinr",
    "trace_polygons",
]
