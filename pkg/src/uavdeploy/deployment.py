"""Placement solvers for drone base stations.

Implements the candidate-grid heuristic (coarse grid, binary power
threshold matrix, greedy seeding, local refinement with full interference
coupling) and the three deployment scenarios built on it: coverage
maximization for a fixed fleet, minimum fleet for full coverage, and
hover-time minimization.  Random and probabilistic-LoS baselines are
provided for comparison.

All solvers are deterministic for a fixed configuration and seed: grids
are enumerated in a fixed order and every tie is broken by lowest index.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import ChannelParams, noise_power, p_los
from .geometry import Building, Point2, Point3, Region, los_mask, points_in_polygon


class EmptyGridError(ValueError):
    """No candidate positions remain after exclusions."""


class InfeasibleError(ValueError):
    """The requested deployment cannot be set up (bad fleet size etc.)."""


class InfeasibleCoverageError(InfeasibleError):
    """Full coverage could not be reached by the search."""


@dataclass(frozen=True)
class UserNode:
    """Ground user at z = 0 with a downlink data load in bits."""

    id: int
    position: Point2
    load_bits: float = 1e7

    def __post_init__(self) -> None:
        if self.load_bits <= 0:
            raise ValueError("user load must be > 0 bits")


@dataclass(frozen=True)
class SearchConfig:
    """Knobs of the placement search.

    ``p_min_w`` is the power threshold of the seeding matrix; None selects
    the received power of a link reaching a quarter of the region diagonal
    at the lowest candidate altitude, so each candidate claims a
    neighborhood of users rather than all or none of them.
    """

    spacing: float = 25.0
    altitudes: tuple[float, ...] = (40.0, 60.0, 80.0, 100.0)
    radius: float = 40.0
    fine_spacing: float = 10.0
    pass_limit: int = 10
    p_min_w: float | None = None
    los_step: float = 1.0
    exhaustive_budget: int = 20000

    def __post_init__(self) -> None:
        if self.spacing <= 0 or self.fine_spacing <= 0:
            raise ValueError("grid spacings must be > 0")
        if self.radius < self.fine_spacing:
            raise ValueError("refinement radius must be >= fine_spacing")
        if not self.altitudes or any(a <= 0 for a in self.altitudes):
            raise ValueError("candidate altitudes must be a non-empty set of positive values")
        if self.pass_limit < 1:
            raise ValueError("pass_limit must be >= 1")


@dataclass(frozen=True)
class CandidateGrid:
    """Discretized drone positions: a lattice at one or more altitudes."""

    points: np.ndarray  # (N, 3) float array
    spacing: float
    altitudes: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class ThresholdMatrix:
    """Binary candidate x user matrix of interference-free power reach."""

    entries: np.ndarray  # (N_candidates, L) bool


@dataclass(frozen=True)
class Association:
    """Per-user serving assignment under the strongest-SINR rule.

    ``indicator[i, j]`` is 1 iff user i is served by drone j; a user has at
    most one serving drone and only when its best SINR clears the
    threshold.  ``serving[i]`` is that drone index, or -1 when uncovered.
    """

    indicator: np.ndarray  # (L, M) bool
    serving: np.ndarray  # (L,) int, -1 when not covered
    sinr_db: np.ndarray  # (L,) best-drone SINR per user


@dataclass(frozen=True)
class DeploymentResult:
    placements: tuple[Point3, ...]
    association: Association
    covered_count: int
    per_drone_hover: tuple[float, ...]
    total_hover: float


def _lattice_axis(start: float, extent: float, spacing: float) -> np.ndarray:
    n = int(math.floor(extent / spacing + 1e-9)) + 1
    return start + spacing * np.arange(n)


def _build_lattice(
    region: Region,
    buildings: Sequence[Building],
    spacing: float,
    altitudes: Sequence[float],
) -> np.ndarray:
    """Lattice of (x, y, z) points over the region, excluding positions whose
    ground projection falls inside (or on) a building footprint."""
    xs = _lattice_axis(region.origin.x, region.width, spacing)
    ys = _lattice_axis(region.origin.y, region.height, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")
    xy = np.column_stack([gx.ravel(), gy.ravel()])
    keep = np.ones(len(xy), dtype=bool)
    for b in buildings:
        keep &= ~points_in_polygon(xy, b.footprint_array)
    xy = xy[keep]
    pts = [
        np.column_stack([xy, np.full(len(xy), float(alt))])
        for alt in altitudes
    ]
    return np.vstack(pts) if pts else np.empty((0, 3))


def build_candidate_grid(
    region: Region,
    buildings: Sequence[Building],
    spacing: float,
    altitudes: Sequence[float],
) -> CandidateGrid:
    """Discretize the region into candidate drone positions."""
    if spacing <= 0:
        raise ValueError("spacing must be > 0")
    if not altitudes:
        raise ValueError("altitudes must be non-empty")
    if spacing > region.width or spacing > region.height:
        raise EmptyGridError("spacing exceeds region dimensions")
    pts = _build_lattice(region, buildings, spacing, altitudes)
    if len(pts) == 0:
        raise EmptyGridError("no candidate positions outside building footprints")
    return CandidateGrid(points=pts, spacing=spacing, altitudes=tuple(altitudes))


def _users_xy(users: Sequence[UserNode]) -> np.ndarray:
    return np.array([[u.position.x, u.position.y] for u in users], dtype=float)


def _users_loads(users: Sequence[UserNode]) -> np.ndarray:
    return np.array([u.load_bits for u in users], dtype=float)


def build_threshold_matrix(
    grid: CandidateGrid,
    users: Sequence[UserNode],
    params: ChannelParams,
    p_min_w: float,
) -> ThresholdMatrix:
    """Seeding matrix: entry (m, n) = 1 iff user n would receive more than
    ``p_min_w`` from candidate m, assuming LoS and ignoring interference
    and noise."""
    xy = _users_xy(users)
    c = grid.points
    d2 = (
        (c[:, 0][:, None] - xy[:, 0][None, :]) ** 2
        + (c[:, 1][:, None] - xy[:, 1][None, :]) ** 2
        + (c[:, 2][:, None]) ** 2
    )
    rp = params.ref_gain * params.tx_power_w * d2 ** (-params.path_loss_exponent / 2.0)
    return ThresholdMatrix(entries=rp > p_min_w)


def greedy_seed(threshold: ThresholdMatrix, fleet_size: int) -> list[int]:
    """Incrementally pick the candidates with the most unclaimed potential
    links; claimed users are removed before the next pick.  Ties go to the
    lowest candidate index."""
    T = threshold.entries
    n_cand = T.shape[0]
    if fleet_size < 1:
        raise InfeasibleError("fleet size must be >= 1")
    if fleet_size > n_cand:
        raise InfeasibleError(f"fleet size {fleet_size} exceeds {n_cand} candidates")
    unclaimed = np.ones(T.shape[1], dtype=bool)
    used = np.zeros(n_cand, dtype=bool)
    chosen: list[int] = []
    for _ in range(fleet_size):
        counts = T[:, unclaimed].sum(axis=1).astype(np.int64)
        counts[used] = -1
        pick = int(np.argmax(counts))
        chosen.append(pick)
        used[pick] = True
        unclaimed &= ~T[pick]
    return chosen


def default_p_min(region: Region, params: ChannelParams, cfg: SearchConfig) -> float:
    """Default seeding power threshold: the LoS received power of a link
    whose horizontal reach is a quarter of the region diagonal at the
    lowest candidate altitude.  This keeps the threshold matrix
    discriminating (each candidate claims a neighborhood, not the whole
    region), which is what gives the greedy seeding its signal."""
    if cfg.p_min_w is not None:
        return cfg.p_min_w
    d = math.hypot(region.diagonal / 4.0, min(cfg.altitudes))
    return params.ref_gain * params.tx_power_w * d ** (-params.path_loss_exponent)


class PlacementEvaluator:
    """Caches per-position link budgets so placements can be scored fast.

    For every drone position visited, the received power toward each user
    (including the geometric LoS/NLoS state of that link) is computed once
    and reused.  Scoring a placement is then pure array arithmetic over
    those cached rows, with the interference term recomputed from the full
    placement every time.

    ``los_model`` selects how blockage is decided: ``"geometric"`` samples
    the user-drone segment against building prisms, ``"bernoulli"`` draws
    each link's LoS state once from the elevation-angle probability model
    (seeded per position, so the draw is independent of visit order).
    """

    def __init__(
        self,
        users: Sequence[UserNode],
        buildings: Sequence[Building],
        params: ChannelParams,
        los_step: float = 1.0,
        los_model: str = "geometric",
        seed: int = 0,
    ):
        if los_model not in ("geometric", "bernoulli"):
            raise ValueError(f"unknown los_model {los_model!r}")
        self.users = list(users)
        self.buildings = list(buildings)
        self.params = params
        self.los_step = los_step
        self.los_model = los_model
        self.seed = seed
        self.xy = _users_xy(self.users)
        self.loads = _users_loads(self.users)
        self.sigma2 = noise_power(params)
        self._rows: dict[tuple[float, float, float], np.ndarray] = {}

    def _los_row(self, point: tuple[float, float, float]) -> np.ndarray:
        if self.los_model == "geometric":
            return los_mask(self.xy, point, self.buildings, self.los_step)
        # Bernoulli model: seeded per position so lazy evaluation order
        # cannot change the draw
        x, y, z = point
        horiz = np.hypot(self.xy[:, 0] - x, self.xy[:, 1] - y)
        theta = np.arctan2(z, horiz)
        probs = np.array([p_los(self.params, float(th)) for th in theta])
        key = [self.seed] + [int(round(c * 1000.0)) + 2**31 for c in point]
        rng = np.random.default_rng(np.random.SeedSequence(key))
        return rng.random(len(probs)) < probs

    def rp_row(self, point: tuple[float, float, float]) -> np.ndarray:
        """Received power (W) from a drone at ``point`` toward every user."""
        key = (float(point[0]), float(point[1]), float(point[2]))
        row = self._rows.get(key)
        if row is None:
            x, y, z = key
            d2 = (self.xy[:, 0] - x) ** 2 + (self.xy[:, 1] - y) ** 2 + z**2
            p = self.params
            rp = p.ref_gain * p.tx_power_w * d2 ** (-p.path_loss_exponent / 2.0)
            los = self._los_row(key)
            row = np.where(los, rp, rp * p.nlos_factor)
            self._rows[key] = row
        return row

    def rp_matrix(self, points: Sequence[tuple[float, float, float]]) -> np.ndarray:
        return np.vstack([self.rp_row(p) for p in points])

    def associate(self, points: Sequence[tuple[float, float, float]]) -> Association:
        """Strongest-SINR association with full interference coupling."""
        rp = self.rp_matrix(points)  # (M, L)
        total = rp.sum(axis=0)
        gamma = rp / (total[None, :] - rp + self.sigma2)
        best = np.argmax(gamma, axis=0)  # ties -> lowest drone index
        gamma_best = gamma[best, np.arange(rp.shape[1])]
        covered = gamma_best >= self.params.sinr_threshold_linear
        serving = np.where(covered, best, -1)
        indicator = np.zeros((rp.shape[1], rp.shape[0]), dtype=bool)
        indicator[covered, best[covered]] = True
        with np.errstate(divide="ignore"):
            sinr_db = 10.0 * np.log10(gamma_best)
        return Association(indicator=indicator, serving=serving, sinr_db=sinr_db)

    def result(self, points: Sequence[tuple[float, float, float]]) -> DeploymentResult:
        """Full deployment scoring: association, coverage, hover times."""
        assoc = self.associate(points)
        covered = assoc.serving >= 0
        gamma = 10.0 ** (assoc.sinr_db / 10.0)
        rates = self.params.bandwidth_hz * np.log2(1.0 + gamma)
        per_drone = np.zeros(len(points))
        if covered.any():
            t = self.loads[covered] / rates[covered]
            np.add.at(per_drone, assoc.serving[covered], t)
        placements = tuple(Point3(float(x), float(y), float(z)) for x, y, z in points)
        return DeploymentResult(
            placements=placements,
            association=assoc,
            covered_count=int(covered.sum()),
            per_drone_hover=tuple(float(v) for v in per_drone),
            total_hover=float(per_drone.sum()),
        )

    def scores(
        self, points: Sequence[tuple[float, float, float]], objective: str
    ) -> tuple[int, float]:
        """(primary, secondary) objective pair for one placement; see
        :func:`_batch_scores` for the ordering semantics."""
        prim, sec = self._batch(np.array([self.rp_matrix(points)]), objective)
        return int(prim[0]), float(sec[0])

    def _batch(self, rp_all: np.ndarray, objective: str) -> tuple[np.ndarray, np.ndarray]:
        """Score a (P, M, L) stack of received-power tensors.

        Returns (primary, secondary) per placement.  Primary is always the
        covered-user count.  For the hover objective the secondary is the
        negated total hover time of fully covering placements (so that
        lexicographic maximization prefers full coverage first, then the
        shortest service time); otherwise it is zero.
        """
        total = rp_all.sum(axis=1)  # (P, L)
        gamma = rp_all / (total[:, None, :] - rp_all + self.sigma2)
        gamma_best = gamma.max(axis=1)  # (P, L); ties irrelevant for value
        covered = gamma_best >= self.params.sinr_threshold_linear
        primary = covered.sum(axis=1)
        secondary = np.zeros(len(rp_all))
        if objective == "hover":
            full = covered.all(axis=1)
            if full.any():
                rates = self.params.bandwidth_hz * np.log2(1.0 + gamma_best[full])
                hover = (self.loads[None, :] / rates).sum(axis=1)
                secondary[full] = -hover
            secondary[~full] = 0.0
        return primary, secondary


def _enumerate_exact(
    evaluator: PlacementEvaluator,
    seed_points: list[tuple[float, float, float]],
    candidates: list[tuple[float, float, float]],
    objective: str,
) -> list[tuple[float, float, float]]:
    """Joint exhaustive search over all m-subsets of the candidate points.

    Used when the subset count fits the exhaustive budget: on small
    instances the solvers are exact, matching brute-force enumeration.
    The seed placement is kept unless some subset is strictly better, and
    equal-value subsets resolve to the lexicographically first one.
    """
    m = len(seed_points)
    rows = [evaluator.rp_row(p) for p in candidates]
    combos = list(itertools.combinations(range(len(candidates)), m))
    best_combo = None
    best_score = evaluator.scores(seed_points, objective)
    chunk = max(1, 200000 // max(1, m * len(evaluator.users)))
    for start in range(0, len(combos), chunk):
        block = combos[start : start + chunk]
        rp_all = np.empty((len(block), m, len(evaluator.users)))
        for i, combo in enumerate(block):
            for j, ci in enumerate(combo):
                rp_all[i, j, :] = rows[ci]
        primary, secondary = evaluator._batch(rp_all, objective)
        order = np.lexsort((np.arange(len(block)), -secondary, -primary))
        top = int(order[0])
        score = (int(primary[top]), float(secondary[top]))
        if score > best_score:
            best_score = score
            best_combo = block[top]
    if best_combo is None:
        return list(seed_points)
    return [candidates[i] for i in best_combo]


def _refine(
    evaluator: PlacementEvaluator,
    seed_points: list[tuple[float, float, float]],
    lattice: np.ndarray,
    cfg: SearchConfig,
    objective: str,
) -> list[tuple[float, float, float]]:
    """Local search over the fine lattice.

    When the joint placement space is small enough to enumerate within the
    exhaustive budget, the optimum over the lattice is found exactly.
    Otherwise each drone in round-robin order considers every lattice
    point within ``cfg.radius`` of its current ground position (at any
    candidate altitude) and moves only on a strict lexicographic
    improvement of the objective; passes repeat until a full pass makes no
    move or the pass limit is reached.
    """
    if len(lattice) == 0:
        raise EmptyGridError("refinement lattice is empty")
    current = [tuple(float(v) for v in p) for p in seed_points]
    m = len(current)
    pool = [tuple(float(v) for v in p) for p in lattice]
    pool += [p for p in current if p not in pool]
    if math.comb(len(pool), m) <= cfg.exhaustive_budget:
        return _enumerate_exact(evaluator, current, pool, objective)
    cur_primary, cur_secondary = evaluator.scores(current, objective)
    M = len(current)
    for _ in range(cfg.pass_limit):
        moved = False
        for d in range(M):
            cx, cy, _ = current[d]
            near = (lattice[:, 0] - cx) ** 2 + (lattice[:, 1] - cy) ** 2 <= cfg.radius**2 + 1e-9
            cand = [tuple(float(v) for v in p) for p in lattice[near]]
            if current[d] not in cand:
                cand.append(current[d])
            rows = np.stack([evaluator.rp_row(p) for p in cand])  # (P, L)
            fixed = [evaluator.rp_row(p) for j, p in enumerate(current) if j != d]
            rp_all = np.empty((len(cand), M, len(evaluator.users)))
            for j, row in enumerate(fixed[:d]):
                rp_all[:, j, :] = row
            rp_all[:, d, :] = rows
            for j, row in enumerate(fixed[d:]):
                rp_all[:, d + 1 + j, :] = row
            primary, secondary = evaluator._batch(rp_all, objective)
            order = np.lexsort((np.arange(len(cand)), -secondary, -primary))
            best = int(order[0])
            if (primary[best], secondary[best]) > (cur_primary, cur_secondary):
                current[d] = cand[best]
                cur_primary, cur_secondary = int(primary[best]), float(secondary[best])
                moved = True
        if not moved:
            break
    return current


def associate_users(
    placements: Sequence[Point3],
    users: Sequence[UserNode],
    buildings: Sequence[Building],
    params: ChannelParams,
    los_step: float = 1.0,
) -> Association:
    """Associate each user with its strongest-SINR drone, computing each
    link's SINR with geometric LoS and every other drone as interference."""
    if not placements:
        raise InfeasibleError("at least one placement is required")
    ev = PlacementEvaluator(users, buildings, params, los_step)
    return ev.associate([(p.x, p.y, p.z) for p in placements])


def evaluate_placements(
    placements: Sequence[Point3],
    users: Sequence[UserNode],
    buildings: Sequence[Building],
    params: ChannelParams,
    los_step: float = 1.0,
) -> DeploymentResult:
    """Score fixed placements against ground-truth geometry."""
    if not placements:
        raise InfeasibleError("at least one placement is required")
    ev = PlacementEvaluator(users, buildings, params, los_step)
    return ev.result([(p.x, p.y, p.z) for p in placements])


def refine_placements(
    seeds: Sequence[Point3],
    grid: CandidateGrid,
    users: Sequence[UserNode],
    buildings: Sequence[Building],
    params: ChannelParams,
    region: Region,
    radius: float,
    fine_spacing: float,
    cfg: SearchConfig | None = None,
) -> list[Point3]:
    """Local coverage-maximizing search around seed placements."""
    base = cfg or SearchConfig()
    cfg = SearchConfig(
        spacing=base.spacing,
        altitudes=grid.altitudes,
        radius=radius,
        fine_spacing=fine_spacing,
        pass_limit=base.pass_limit,
        p_min_w=base.p_min_w,
        los_step=base.los_step,
    )
    ev = PlacementEvaluator(users, buildings, params, cfg.los_step)
    lattice = _build_lattice(region, buildings, fine_spacing, grid.altitudes)
    pts = _refine(ev, [(p.x, p.y, p.z) for p in seeds], lattice, cfg, "coverage")
    return [Point3(*p) for p in pts]


def _solve(
    region: Region,
    users: Sequence[UserNode],
    buildings: Sequence[Building],
    params: ChannelParams,
    fleet_size: int,
    cfg: SearchConfig,
    objective: str,
    evaluator: PlacementEvaluator | None = None,
    grid: CandidateGrid | None = None,
    lattice: np.ndarray | None = None,
) -> DeploymentResult:
    if fleet_size < 1:
        raise InfeasibleError("fleet size must be >= 1")
    if not users:
        raise InfeasibleError("at least one user is required")
    if grid is None:
        grid = build_candidate_grid(region, buildings, cfg.spacing, cfg.altitudes)
    if fleet_size > len(grid):
        raise InfeasibleError(f"fleet size {fleet_size} exceeds {len(grid)} candidates")
    T = build_threshold_matrix(grid, users, params, default_p_min(region, params, cfg))
    seeds_idx = greedy_seed(T, fleet_size)
    seed_points = [tuple(float(v) for v in grid.points[i]) for i in seeds_idx]
    if evaluator is None:
        evaluator = PlacementEvaluator(users, buildings, params, cfg.los_step)
    if lattice is None:
        lattice = _build_lattice(region, buildings, cfg.fine_spacing, cfg.altitudes)
    pts = _refine(evaluator, seed_points, lattice, cfg, objective)
    return evaluator.result(pts)


def maximize_coverage(
    region: Region,
    users: Sequence[UserNode],
    buildings: Sequence[Building],
    params: ChannelParams,
    fleet_size: int,
    cfg: SearchConfig | None = None,
) -> DeploymentResult:
    """Place a fixed fleet to maximize the number of covered users."""
    return _solve(region, users, buildings, params, fleet_size, cfg or SearchConfig(), "coverage")


def min_drones_full_coverage(
    region: Region,
    users: Sequence[UserNode],
    buildings: Sequence[Building],
    params: ChannelParams,
    max_fleet_size: int,
    cfg: SearchConfig | None = None,
) -> DeploymentResult:
    """Smallest fleet in [1, max] whose optimized placement covers everyone.

    Coverage is not monotone in fleet size (interference), so fleet sizes
    are scanned in ascending order rather than binary-searched.
    """
    cfg = cfg or SearchConfig()
    if max_fleet_size < 1:
        raise InfeasibleError("max fleet size must be >= 1")
    grid = build_candidate_grid(region, buildings, cfg.spacing, cfg.altitudes)
    evaluator = PlacementEvaluator(users, buildings, params, cfg.los_step)
    lattice = _build_lattice(region, buildings, cfg.fine_spacing, cfg.altitudes)
    for m in range(1, min(max_fleet_size, len(grid)) + 1):
        result = _solve(
            region, users, buildings, params, m, cfg, "coverage",
            evaluator=evaluator, grid=grid, lattice=lattice,
        )
        if result.covered_count == len(users):
            return result
    raise InfeasibleCoverageError(
        f"no fleet of up to {max_fleet_size} drones reached full coverage"
    )


def minimize_hover_time(
    region: Region,
    users: Sequence[UserNode],
    buildings: Sequence[Building],
    params: ChannelParams,
    fleet_size: int,
    cfg: SearchConfig | None = None,
) -> DeploymentResult:
    """Place a fleet to minimize total hover time with every user covered."""
    result = _solve(
        region, users, buildings, params, fleet_size, cfg or SearchConfig(), "hover"
    )
    if result.covered_count != len(users):
        raise InfeasibleCoverageError(
            f"search covered {result.covered_count}/{len(users)} users; "
            "full coverage is required for hover-time minimization"
        )
    return result


def random_deployment(
    region: Region,
    buildings: Sequence[Building],
    fleet_size: int,
    seed: int,
    altitude_range: tuple[float, float] = (40.0, 100.0),
) -> list[Point3]:
    """Uniform random placements over the region and altitude range,
    rejection-sampled outside building footprints."""
    if fleet_size < 1:
        raise InfeasibleError("fleet size must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = altitude_range
    out: list[Point3] = []
    attempts = 0
    while len(out) < fleet_size:
        attempts += 1
        if attempts > 10000 * fleet_size:
            raise InfeasibleError("rejection sampling failed; buildings cover the region")
        x = region.origin.x + rng.random() * region.width
        y = region.origin.y + rng.random() * region.height
        z = lo + rng.random() * (hi - lo)
        if any(b.contains_xy(x, y) for b in buildings):
            continue
        out.append(Point3(x, y, z))
    return out


def probabilistic_deployment(
    region: Region,
    users: Sequence[UserNode],
    params: ChannelParams,
    fleet_size: int,
    seed: int,
    cfg: SearchConfig | None = None,
) -> DeploymentResult:
    """Coverage-maximizing pipeline that never sees the buildings.

    Link blockage is drawn from the elevation-angle LoS probability model
    instead of geometry, so placements are chosen blind to obstacles.  The
    returned result is scored under that sampled model; evaluate the
    ``placements`` with :func:`evaluate_placements` to score them against
    the true geometry.
    """
    cfg = cfg or SearchConfig()
    if fleet_size < 1:
        raise InfeasibleError("fleet size must be >= 1")
    evaluator = PlacementEvaluator(
        users, [], params, cfg.los_step, los_model="bernoulli", seed=seed
    )
    return _solve(
        region, users, [], params, fleet_size, cfg, "coverage", evaluator=evaluator
    )
