"""Scenario configuration, seeded generation, experiment sweeps and export.

A scenario is one JSON document whose defaults reproduce the reference
setup (200 m x 200 m region, 200 users, 1 W / 2 GHz / 1 MHz downlink,
-170 dBm/Hz noise floor, 10 Mb per-user load, building heights uniform in
[10, 20] m), so an empty config override runs the baseline experiment.
Every run derives all of its randomness from one integer seed, making
records exactly reproducible.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
import zlib
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Sequence

import numpy as np

from .channel import ChannelParams
from .deployment import (
    InfeasibleError,
    SearchConfig,
    UserNode,
    maximize_coverage,
    min_drones_full_coverage,
    minimize_hover_time,
)
from .geometry import Building, Point2, Region, load_polygon_file

SCENARIO_KINDS = ("max-coverage", "min-drones", "min-hover")
SWEEP_PARAMS = ("sinr_threshold_db", "fleet_size", "building_count", "user_count")
_PARAM_ALIASES = {
    "gamma_th": "sinr_threshold_db",
    "sinr": "sinr_threshold_db",
    "m": "fleet_size",
    "drones": "fleet_size",
    "buildings": "building_count",
    "users": "user_count",
}


class ConfigError(ValueError):
    """Bad or inconsistent scenario configuration."""


class GenerationInfeasibleError(ValueError):
    """Random generation could not satisfy its constraints."""


def derive_seed(seed: int, *tags) -> int:
    """Stable child seed from a master seed and a tag path."""
    parts = [int(seed) & 0xFFFFFFFF]
    for t in tags:
        parts.append(zlib.crc32(str(t).encode()) if isinstance(t, str) else int(t) & 0xFFFFFFFF)
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


@dataclass(frozen=True)
class SyntheticBuildings:
    """Random rectangular footprints, generated one at a time so that a
    smaller count is always a prefix of a larger one for the same seed."""

    count: int = 3
    min_side: float = 30.0
    max_side: float = 60.0
    margin: float = 10.0


@dataclass(frozen=True)
class ScenarioConfig:
    region: Region = field(default_factory=lambda: Region(200.0, 200.0))
    kind: str = "max-coverage"
    seed: int = 0
    user_count: int = 200
    load_bits: float = 1e7
    fleet_size: int = 5
    max_fleet_size: int = 10
    channel: ChannelParams = field(default_factory=ChannelParams)
    search: SearchConfig = field(default_factory=SearchConfig)
    buildings_file: str | None = None
    synthetic_buildings: SyntheticBuildings | None = None
    height_range: tuple[float, float] = (10.0, 20.0)
    use_file_heights: bool = False

    def __post_init__(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise ConfigError(f"scenario kind must be one of {SCENARIO_KINDS}, got {self.kind!r}")
        if self.user_count < 1:
            raise ConfigError("user_count must be >= 1")
        if self.load_bits <= 0:
            raise ConfigError("load_bits must be > 0")
        if self.height_range[0] > self.height_range[1]:
            raise ConfigError("height_range must satisfy min <= max")
        if self.buildings_file is not None and self.synthetic_buildings is not None:
            raise ConfigError("specify either buildings_file or synthetic_buildings, not both")

    def to_dict(self) -> dict:
        return {
            "region": {
                "width": self.region.width,
                "height": self.region.height,
                "origin": [self.region.origin.x, self.region.origin.y],
            },
            "kind": self.kind,
            "seed": self.seed,
            "users": {"count": self.user_count, "load_bits": self.load_bits},
            "fleet": {"size": self.fleet_size, "max_size": self.max_fleet_size},
            "channel": {
                "tx_power_w": self.channel.tx_power_w,
                "path_loss_exponent": self.channel.path_loss_exponent,
                "path_loss_ref_gain": self.channel.path_loss_ref_gain,
                "noise_psd_dbm_hz": self.channel.noise_psd_dbm_hz,
                "bandwidth_hz": self.channel.bandwidth_hz,
                "carrier_hz": self.channel.carrier_hz,
                "sinr_threshold_db": self.channel.sinr_threshold_db,
                "nlos_penalty_db": self.channel.nlos_penalty_db,
                "plos_b1": self.channel.plos_b1,
                "plos_b2": self.channel.plos_b2,
            },
            "search": {
                "spacing": self.search.spacing,
                "altitudes": list(self.search.altitudes),
                "radius": self.search.radius,
                "fine_spacing": self.search.fine_spacing,
                "pass_limit": self.search.pass_limit,
                "p_min_w": self.search.p_min_w,
                "los_step": self.search.los_step,
                "exhaustive_budget": self.search.exhaustive_budget,
            },
            "buildings": (
                {"file": self.buildings_file}
                if self.buildings_file is not None
                else {
                    "synthetic": {
                        "count": self.synthetic_buildings.count,
                        "min_side": self.synthetic_buildings.min_side,
                        "max_side": self.synthetic_buildings.max_side,
                        "margin": self.synthetic_buildings.margin,
                    }
                }
                if self.synthetic_buildings is not None
                else {"bundled": True}
            ),
            "height_range": list(self.height_range),
            "use_file_heights": self.use_file_heights,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


def _take(d: dict, allowed: set[str], ctx: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown {ctx} keys: {sorted(unknown)}")


def config_from_dict(doc: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed JSON document; every field is
    optional and falls back to the reference defaults."""
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _take(
        doc,
        {"region", "kind", "seed", "users", "fleet", "channel", "search",
         "buildings", "height_range", "use_file_heights"},
        "config",
    )
    kwargs: dict = {}
    if "region" in doc:
        r = doc["region"]
        _take(r, {"width", "height", "origin"}, "region")
        origin = r.get("origin", [0.0, 0.0])
        kwargs["region"] = Region(
            float(r.get("width", 200.0)), float(r.get("height", 200.0)),
            Point2(float(origin[0]), float(origin[1])),
        )
    if "kind" in doc:
        kwargs["kind"] = doc["kind"]
    if "seed" in doc:
        kwargs["seed"] = int(doc["seed"])
    if "users" in doc:
        u = doc["users"]
        _take(u, {"count", "load_bits"}, "users")
        if "count" in u:
            kwargs["user_count"] = int(u["count"])
        if "load_bits" in u:
            kwargs["load_bits"] = float(u["load_bits"])
    if "fleet" in doc:
        f = doc["fleet"]
        _take(f, {"size", "max_size"}, "fleet")
        if "size" in f:
            kwargs["fleet_size"] = int(f["size"])
        if "max_size" in f:
            kwargs["max_fleet_size"] = int(f["max_size"])
    if "channel" in doc:
        c = dict(doc["channel"])
        _take(
            c,
            {"tx_power_w", "path_loss_exponent", "path_loss_ref_gain", "noise_psd_dbm_hz",
             "bandwidth_hz", "carrier_hz", "sinr_threshold_db", "nlos_penalty_db",
             "plos_b1", "plos_b2"},
            "channel",
        )
        try:
            kwargs["channel"] = ChannelParams(**c)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad channel parameters: {e}") from e
    if "search" in doc:
        s = dict(doc["search"])
        _take(
            s,
            {"spacing", "altitudes", "radius", "fine_spacing", "pass_limit",
             "p_min_w", "los_step", "exhaustive_budget"},
            "search",
        )
        if "altitudes" in s:
            s["altitudes"] = tuple(float(a) for a in s["altitudes"])
        try:
            kwargs["search"] = SearchConfig(**s)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad search parameters: {e}") from e
    if "buildings" in doc:
        b = doc["buildings"]
        _take(b, {"file", "synthetic", "bundled"}, "buildings")
        if "file" in b and "synthetic" in b:
            raise ConfigError("buildings: specify file or synthetic, not both")
        if "file" in b:
            kwargs["buildings_file"] = str(b["file"])
        elif "synthetic" in b:
            sb = dict(b["synthetic"])
            _take(sb, {"count", "min_side", "max_side", "margin"}, "synthetic buildings")
            kwargs["synthetic_buildings"] = SyntheticBuildings(**sb)
    if "height_range" in doc:
        hr = doc["height_range"]
        kwargs["height_range"] = (float(hr[0]), float(hr[1]))
    if "use_file_heights" in doc:
        kwargs["use_file_heights"] = bool(doc["use_file_heights"])
    return ScenarioConfig(**kwargs)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config file: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {e}") from e
    return config_from_dict(doc)


def bundled_footprints() -> list[tuple[list[Point2], float | None]]:
    """The packaged three-building campus-like footprint set."""
    path = resources.files("uavdeploy").joinpath("data/three_buildings.json")
    with resources.as_file(path) as p:
        return load_polygon_file(p)


# ---------------------------------------------------------------------------
# Seeded generation
# ---------------------------------------------------------------------------


def generate_users(
    region: Region,
    buildings: Sequence[Building],
    count: int,
    seed: int,
    load_bits: float = 1e7,
) -> list[UserNode]:
    """Uniform ground users (z = 0), rejection-sampled outside footprints."""
    if count < 1:
        raise ValueError("user count must be >= 1")
    rng = np.random.default_rng(seed)
    users: list[UserNode] = []
    attempts = 0
    while len(users) < count:
        attempts += 1
        if attempts > 10000 * count:
            raise GenerationInfeasibleError("buildings leave no room for users")
        x = region.origin.x + rng.random() * region.width
        y = region.origin.y + rng.random() * region.height
        if any(b.contains_xy(x, y) for b in buildings):
            continue
        users.append(UserNode(id=len(users), position=Point2(x, y), load_bits=load_bits))
    return users


def assign_heights(
    footprints: Sequence[Sequence[Point2]], h_min: float, h_max: float, seed: int
) -> list[Building]:
    """Give each footprint an independent uniform height in [h_min, h_max]."""
    if h_min > h_max:
        raise ValueError("h_min must be <= h_max")
    rng = np.random.default_rng(seed)
    heights = h_min + rng.random(len(footprints)) * (h_max - h_min)
    return [Building(fp, float(h)) for fp, h in zip(footprints, heights)]


def synthesize_footprints(
    region: Region, spec: SyntheticBuildings, seed: int
) -> list[list[Point2]]:
    """Disjoint random rectangles inside the region.

    Rectangles are drawn one at a time with rejection against overlap, so
    the first k footprints are identical for any requested count >= k.
    """
    rng = np.random.default_rng(seed)
    placed: list[tuple[float, float, float, float]] = []
    out: list[list[Point2]] = []
    for _ in range(spec.count):
        for _attempt in range(20000):
            w = spec.min_side + rng.random() * (spec.max_side - spec.min_side)
            h = spec.min_side + rng.random() * (spec.max_side - spec.min_side)
            x0 = region.origin.x + spec.margin + rng.random() * max(
                1e-9, region.width - w - 2 * spec.margin
            )
            y0 = region.origin.y + spec.margin + rng.random() * max(
                1e-9, region.height - h - 2 * spec.margin
            )
            gap = 5.0  # keep corridors between buildings
            if all(
                x0 + w + gap < px or px + pw + gap < x0 or y0 + h + gap < py or py + ph + gap < y0
                for px, py, pw, ph in placed
            ):
                placed.append((x0, y0, w, h))
                out.append(
                    [Point2(x0, y0), Point2(x0 + w, y0), Point2(x0 + w, y0 + h), Point2(x0, y0 + h)]
                )
                break
        else:
            raise GenerationInfeasibleError("could not place requested building count")
    return out


def resolve_buildings(config: ScenarioConfig, run_seed: int) -> list[Building]:
    """Materialize the building set for one run."""
    if config.synthetic_buildings is not None:
        footprints = synthesize_footprints(
            config.region, config.synthetic_buildings, derive_seed(run_seed, "footprints")
        )
        heights = [None] * len(footprints)
    else:
        if config.buildings_file is not None:
            entries = load_polygon_file(config.buildings_file)
        else:
            entries = bundled_footprints()
        footprints = [fp for fp, _ in entries]
        heights = [h for _, h in entries]
    if config.use_file_heights and all(h is not None for h in heights):
        return [Building(fp, h) for fp, h in zip(footprints, heights)]
    return assign_heights(
        footprints, config.height_range[0], config.height_range[1],
        derive_seed(run_seed, "heights"),
    )


# ---------------------------------------------------------------------------
# Runs, sweeps and export
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple[float, ...]
    replications: int = 1

    def __post_init__(self) -> None:
        canonical = _PARAM_ALIASES.get(self.param, self.param)
        object.__setattr__(self, "param", canonical)
        if canonical not in SWEEP_PARAMS:
            raise ConfigError(f"swept parameter must be one of {SWEEP_PARAMS}, got {self.param!r}")
        if not self.values:
            raise ConfigError("sweep needs a non-empty value list")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")


@dataclass(frozen=True)
class RunRecord:
    config_hash: str
    seed: int
    kind: str
    swept_param: str | None
    swept_value: float | None
    covered_fraction: float
    total_hover: float
    fleet_size: int
    user_count: int
    building_count: int
    feasible: bool
    placements: tuple[tuple[float, float, float], ...]
    wall_ms: float

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "seed": self.seed,
            "kind": self.kind,
            "swept_param": self.swept_param,
            "swept_value": self.swept_value,
            "covered_fraction": self.covered_fraction,
            "total_hover": self.total_hover,
            "fleet_size": self.fleet_size,
            "user_count": self.user_count,
            "building_count": self.building_count,
            "feasible": self.feasible,
            "placements": [list(p) for p in self.placements],
            "wall_ms": self.wall_ms,
        }


def _apply_sweep_value(config: ScenarioConfig, param: str, value: float) -> ScenarioConfig:
    if param == "sinr_threshold_db":
        return replace(config, channel=replace(config.channel, sinr_threshold_db=float(value)))
    if param == "fleet_size":
        return replace(config, fleet_size=int(value))
    if param == "user_count":
        return replace(config, user_count=int(value))
    if param == "building_count":
        synth = config.synthetic_buildings or SyntheticBuildings()
        return replace(config, buildings_file=None,
                       synthetic_buildings=replace(synth, count=int(value)))
    raise ConfigError(f"unknown sweep parameter {param!r}")


def run_scenario(
    config: ScenarioConfig,
    seed: int | None = None,
    swept_param: str | None = None,
    swept_value: float | None = None,
) -> RunRecord:
    """Run one scenario end to end; solver infeasibility is recorded in the
    returned record rather than raised."""
    run_seed = config.seed if seed is None else int(seed)
    buildings = resolve_buildings(config, run_seed)
    users = generate_users(
        config.region, buildings, config.user_count,
        derive_seed(run_seed, "users"), config.load_bits,
    )
    t0 = time.perf_counter()
    feasible = True
    try:
        if config.kind == "max-coverage":
            result = maximize_coverage(
                config.region, users, buildings, config.channel,
                config.fleet_size, config.search,
            )
        elif config.kind == "min-drones":
            result = min_drones_full_coverage(
                config.region, users, buildings, config.channel,
                config.max_fleet_size, config.search,
            )
        else:
            result = minimize_hover_time(
                config.region, users, buildings, config.channel,
                config.fleet_size, config.search,
            )
    except InfeasibleError:
        feasible = False
        result = None
    wall_ms = (time.perf_counter() - t0) * 1000.0
    if result is not None:
        covered_fraction = result.covered_count / len(users)
        total_hover = result.total_hover
        fleet = len(result.placements)
        placements = tuple((p.x, p.y, p.z) for p in result.placements)
    else:
        covered_fraction = math.nan
        total_hover = math.nan
        fleet = config.max_fleet_size if config.kind == "min-drones" else config.fleet_size
        placements = ()
    return RunRecord(
        config_hash=config.config_hash(),
        seed=run_seed,
        kind=config.kind,
        swept_param=swept_param,
        swept_value=swept_value,
        covered_fraction=covered_fraction,
        total_hover=total_hover,
        fleet_size=fleet,
        user_count=len(users),
        building_count=len(buildings),
        feasible=feasible,
        placements=placements,
        wall_ms=wall_ms,
    )


def run_sweep(config: ScenarioConfig, sweep: SweepSpec) -> list[RunRecord]:
    """Cartesian product of swept values and replication seeds.

    Replication r uses the same derived seed across all swept values, so
    per-seed comparisons along the sweep axis are paired.  Per-point
    infeasibility is recorded and the sweep continues.
    """
    records: list[RunRecord] = []
    for value in sweep.values:
        point_config = _apply_sweep_value(config, sweep.param, value)
        for rep in range(sweep.replications):
            run_seed = derive_seed(config.seed, "rep", rep)
            records.append(
                run_scenario(point_config, seed=run_seed,
                             swept_param=sweep.param, swept_value=float(value))
            )
    return records


_CSV_HEADER = "swept_value,seed,covered_fraction,total_hover,M,L,building_count,wall_ms"


def _sort_key(r: RunRecord):
    return (r.swept_value if r.swept_value is not None else -math.inf, r.seed)


def records_to_csv(records: Sequence[RunRecord], include_wall_ms: bool = False) -> str:
    """Render records as the deterministic CSV contract.

    Ordering is byte-stable (sorted by swept value then seed).  The
    wall_ms column is written as 0 unless measured timing is explicitly
    requested, so that repeated identical invocations produce
    byte-identical files; measured timing always lives in the JSON export.
    """
    lines = [_CSV_HEADER]
    for r in sorted(records, key=_sort_key):
        swept = "" if r.swept_value is None else f"{r.swept_value:g}"
        wall = f"{r.wall_ms:.3f}" if include_wall_ms else "0"
        lines.append(
            f"{swept},{r.seed},{r.covered_fraction:.6f},{r.total_hover:.6f},"
            f"{r.fleet_size},{r.user_count},{r.building_count},{wall}"
        )
    return "\n".join(lines) + "\n"


def records_to_json(records: Sequence[RunRecord]) -> str:
    docs = [r.to_dict() for r in sorted(records, key=_sort_key)]
    return json.dumps(docs, indent=2, sort_keys=True) + "\n"


def export_records(records: Sequence[RunRecord], fmt: str, path) -> None:
    """Write records to a CSV or JSON file."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    text = records_to_csv(records) if fmt == "csv" else records_to_json(records)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as e:
        raise OSError(f"cannot write {path}: {e}") from e
