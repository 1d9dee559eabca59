"""
Distance pipeline: ab-initio solve, seeding, pose sweep and branch minima.

For every branch of an interpretation the generic solutions are computed once
at random complex parameters (and cached), moved to a complex seed pose of the
motion, and then swept to each real pose. Real critical configurations are
scored with the interpretation's metric; per-branch minima combine into the
singularity distance. Closed-form branches skip continuation entirely.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
import pybreaker
from prometheus_client import write_to_textfile

from .homotopy import (
    REGISTRY,
    MonodromyStalled,
    SolutionSet,
    TrackerSettings,
    filter_real,
    monodromy_solve,
    newton_residual,
    parameter_sweep,
    seed_by_parameter_reversal,
    total_degree_solve,
)
from .lagrangian import (
    BranchKind,
    CriticalSystem,
    build_system,
    case1_feasible,
    parameter_values,
    pedal_projection,
)
from .metrics import distance, rrr_dist2
from .model import (
    Body,
    Configuration,
    DesignParams,
    Interpretation,
    MotionSpec,
    RRRDesign,
    UnreachablePose,
    pose_config,
    rrr_pose_config,
)
from .varieties import ConstraintKind, eval_variety

logger = logging.getLogger(__name__)

cache_breaker = pybreaker.CircuitBreaker(fail_max=5, reset_timeout=60)

TOTAL_DEGREE_LIMIT = 256
SEED_ATTEMPTS = 3
RRR_BRANCHES = (BranchKind.RRR_PARALLEL, BranchKind.RRR_LEG_1, BranchKind.RRR_LEG_2, BranchKind.RRR_LEG_3)


class CountMismatch(RuntimeError):
    """Raised when an ab-initio solve does not reach its generic root count."""

    def __init__(self, key: str, achieved: int, expected: int):
        super().__init__(f"{key}: found {achieved} solutions, expected {expected}")
        self.key = key
        self.achieved = achieved
        self.expected = expected


class SeedTrackingFailure(RuntimeError):
    """Raised when ab-initio solutions cannot all be moved to the seed pose."""


@dataclass(frozen=True)
class BranchMinimum:
    """
    Closest real critical configuration of one branch at one pose.

    ``distance`` is None for a gap (no real critical point) and for an
    infeasible branch.
    """

    branch: str
    distance: float | None
    minimizer: Configuration | None = None
    n_real: int = 0
    n_tracked: int = 0
    n_failed: int = 0
    residual: float = math.nan
    sign: int | None = None
    feasible: bool = True


@dataclass(frozen=True)
class DistanceResult:
    """Singularity distance of one pose with its per-branch breakdown."""

    phi: float
    interpretation: str
    branches: tuple
    distance: float | None
    branch: str | None
    sign: int | None = None
    minimizer: Configuration | None = None

    @property
    def signed_distance(self) -> float | None:
        if self.distance is None:
            return None
        return self.distance * (self.sign if self.sign is not None else 1)

    def branch_minimum(self, branch: str) -> BranchMinimum:
        return next(b for b in self.branches if b.branch == branch)


@dataclass(frozen=True)
class BranchPlan:
    """One branch to evaluate: system kind, Case-1 variant and solver route."""

    kind: BranchKind
    variant: int = 0
    closed_form: str | None = None

    @property
    def label(self) -> str:
        if self.variant:
            return f"{self.kind.value}{'+' if self.variant > 0 else '-'}"
        return self.kind.value


def applicable_branches(interp: Interpretation) -> list[BranchPlan]:
    """
    Branches feeding the overall minimum of an interpretation.

    Args:
        interp (Interpretation): Platform/base reading.

    Returns:
        list[BranchPlan]: Branches in evaluation order.
    """
    if interp.is_preliminary:
        return [BranchPlan(BranchKind.PRELIMINARY)]
    platform, base = interp.platform, interp.base
    plans = [BranchPlan(BranchKind.SING_VARIETY)]
    if platform is Body.TRIANGLE:
        plans.append(BranchPlan(BranchKind.COLLINEARITY_P, closed_form=None if base is Body.RIGID else "platform"))
    if base is Body.TRIANGLE:
        plans.append(BranchPlan(BranchKind.COLLINEARITY_B, closed_form=None if platform is Body.RIGID else "base"))
    if platform is not Body.TRIANGLE and base is not Body.TRIANGLE:
        if platform is Body.RIGID and base is Body.RIGID:
            plans += [BranchPlan(BranchKind.SING_POINT_CASE1, 1), BranchPlan(BranchKind.SING_POINT_CASE1, -1)]
        else:
            plans.append(BranchPlan(BranchKind.SING_POINT_CASE1))
    if platform is Body.TRIANGLE and base is Body.RIGID:
        plans.append(BranchPlan(BranchKind.COLLAPSED_P))
    if base is Body.TRIANGLE and platform is Body.RIGID:
        plans.append(BranchPlan(BranchKind.COLLAPSED_B))
    return plans


def derived_seed(seed: int, key: str) -> int:
    return int(np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(key.encode())]).integers(2 ** 31))


def fingerprint(critical: CriticalSystem) -> str:
    return hashlib.sha256(critical.dump().encode()).hexdigest()


def cache_path(cache_dir: Path, critical: CriticalSystem) -> Path:
    return Path(cache_dir) / (critical.key.replace(":", "_").replace("/", "__") + ".json")


@cache_breaker
def _read_cache_file(path: Path) -> dict:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


@cache_breaker
def _write_cache_file(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)
    tmp.replace(path)


def load_cached(cache_dir: Path | None, critical: CriticalSystem) -> SolutionSet | None:
    """
    Cached ab-initio solutions of a system, or None.

    Missing, corrupt and stale entries (fingerprint mismatch) all read as None,
    as does an open cache breaker.
    """
    if cache_dir is None:
        return None
    path = cache_path(cache_dir, critical)
    if not path.exists():
        return None
    try:
        payload = _read_cache_file(path)
    except pybreaker.CircuitBreakerError:
        logger.warning("cache breaker open, recomputing %s", critical.key)
        return None
    except (OSError, ValueError) as exc:
        logger.warning("unreadable cache entry %s: %s", path, exc)
        return None
    if payload.get("fingerprint") != fingerprint(critical):
        logger.warning("stale cache entry %s, recomputing", path)
        return None
    try:
        return SolutionSet.from_json(payload["solutions"])
    except (KeyError, TypeError, ValueError) as exc:
        logger.warning("corrupt cache entry %s: %s", path, exc)
        return None


def store_cached(cache_dir: Path | None, critical: CriticalSystem, solutions: SolutionSet) -> bool:
    if cache_dir is None:
        return False
    payload = {
        "key": critical.key,
        "fingerprint": fingerprint(critical),
        "expected_count": critical.expected_count,
        "solutions": solutions.to_json(),
    }
    try:
        _write_cache_file(cache_path(cache_dir, critical), payload)
        return True
    except pybreaker.CircuitBreakerError:
        logger.warning("cache breaker open, %s not cached", critical.key)
    except OSError as exc:
        logger.warning("could not cache %s: %s", critical.key, exc)
    return False


def run_ab_initio(critical: CriticalSystem, settings: TrackerSettings | None = None, seed: int = 0,
                  cache_dir: Path | None = None, workers: int = 1) -> SolutionSet:
    """
    Generic solutions of a family at random complex parameters.

    Small systems are solved by a total-degree homotopy, the others by
    monodromy from a parameter-reversal seed. The result is cached per key.

    Args:
        critical (CriticalSystem): Family to solve.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int): Random seed.
        cache_dir (Path, optional): Cache directory; no caching when None.
        workers (int): Parallel jobs.

    Returns:
        SolutionSet: Solutions with their parameter vector.

    Raises:
        CountMismatch: The count differs from ``critical.expected_count``.
    """
    cached = load_cached(cache_dir, critical)
    if cached is not None:
        logger.debug("%s: %d cached solutions", critical.key, len(cached))
        return cached
    settings = settings or TrackerSettings()
    expected = critical.expected_count
    rng = np.random.default_rng(seed)
    params, x0 = seed_by_parameter_reversal(critical, rng)
    paths = int(np.prod([max(d, 1) for d in critical.system.degrees()]))
    if paths <= TOTAL_DEGREE_LIMIT:
        solutions = total_degree_solve(critical.system, params, settings, seed, workers)
    else:
        try:
            solutions = monodromy_solve(critical, expected, settings, seed, workers, base=(params, x0))
        except MonodromyStalled as exc:
            raise CountMismatch(critical.key, exc.achieved, exc.target) from exc
    if expected is not None and len(solutions) != expected:
        raise CountMismatch(critical.key, len(solutions), expected)
    logger.info("%s: %d generic solutions%s", critical.key, len(solutions),
                "" if expected is None else f" (expected {expected})")
    store_cached(cache_dir, critical, solutions)
    return solutions


def seed_phase(critical: CriticalSystem, ab_initio: SolutionSet, seed_params, settings: TrackerSettings | None = None,
               seed: int = 0, workers: int = 1) -> tuple[np.ndarray, SolutionSet]:
    """
    Move the generic solutions to the parameters of a complex seed pose.

    A sweep that loses or merges solutions is repeated with detour constants
    from a derived seed, up to :data:`SEED_ATTEMPTS` times.

    Args:
        critical (CriticalSystem): The family.
        ab_initio (SolutionSet): Generic solutions with their parameters.
        seed_params: Parameter vector of the seed pose.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int): Random seed.
        workers (int): Parallel jobs.

    Returns:
        tuple: (seed parameters, complete solutions at them).

    Raises:
        SeedTrackingFailure: No attempt brought every solution to the seed pose.
    """
    seed_params = np.asarray(seed_params, dtype=complex)
    for attempt in range(SEED_ATTEMPTS):
        attempt_seed = seed if attempt == 0 else derived_seed(seed, f"{critical.key}#{attempt}")
        (tracked,) = parameter_sweep(critical, ab_initio.params, ab_initio, [seed_params], settings, attempt_seed,
                                     workers)
        if len(tracked) == len(ab_initio) and not tracked.n_failed:
            logger.info("%s: %d seed solutions", critical.key, len(tracked))
            return seed_params, tracked
        logger.warning("%s: %d of %d solutions reached the seed pose, reseeding",
                       critical.key, len(tracked), len(ab_initio))
    raise SeedTrackingFailure(
        f"{critical.key}: {len(tracked)} of {len(ab_initio)} solutions reached the seed pose"
    )


def _sign(value) -> int:
    return int(np.sign(np.real(value)))


def _sign_kind(kind: BranchKind, leg: int | None = None) -> ConstraintKind:
    if kind is BranchKind.COLLINEARITY_P:
        return ConstraintKind.CP
    if kind is BranchKind.COLLINEARITY_B:
        return ConstraintKind.CB
    if kind.is_rrr and kind is not BranchKind.RRR_PARALLEL:
        return ConstraintKind.leg(int(kind.value[-1]))
    return ConstraintKind.V


def _score(critical: CriticalSystem, real: SolutionSet, K: Configuration, interp: Interpretation | None):
    best = (None, None, math.nan)
    params = real.params.real
    for x in real.points:
        candidate = critical.configuration(x.real, params)
        if interp is None:
            d = math.sqrt(max(float(np.real(rrr_dist2(K, candidate))), 0.0))
        else:
            d = distance(interp, K, candidate)
        if best[0] is None or d < best[0]:
            best = (d, candidate, newton_residual(critical.compiled, x, params))
    return best


@dataclass
class _BranchRun:
    critical: CriticalSystem
    seed_params: np.ndarray
    seeds: SolutionSet
    counts: dict = field(default_factory=dict)


def prepare_branch(critical: CriticalSystem, seed_config: Configuration, design: DesignParams | None,
                   settings: TrackerSettings, seed: int, workers: int, cache_dir: Path | None) -> _BranchRun:
    """Ab-initio solve (or cache hit) followed by the seed phase."""
    branch_seed = derived_seed(seed, critical.key)
    seed_params = critical.parameter_vector(parameter_values(critical, seed_config, design))
    ab_initio = run_ab_initio(critical, settings, branch_seed, cache_dir, workers)
    seed_params, seeds = seed_phase(critical, ab_initio, seed_params, settings, branch_seed, workers)
    return _BranchRun(critical, seed_params, seeds, {
        "expected": critical.expected_count, "achieved": len(ab_initio),
    })


def _seed_pose(motion: MotionSpec, seed: int) -> complex:
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0x5EED])
    alpha = complex(rng.standard_normal(), rng.standard_normal())
    return motion.seed_pose(alpha)


def _homotopy_minima(run: _BranchRun, label: str, configs: Sequence[Configuration | None], design,
                     interp, settings, seed, workers, signed) -> list[BranchMinimum]:
    critical = run.critical
    live = [i for i, K in enumerate(configs) if K is not None]
    targets = [critical.parameter_vector(parameter_values(critical, configs[i], design)) for i in live]
    sweeps = dict(zip(live, parameter_sweep(critical, run.seed_params, run.seeds, targets, settings, seed, workers)))
    minima = []
    for i, K in enumerate(configs):
        if K is None:
            minima.append(BranchMinimum(label, None))
            continue
        solutions = sweeps[i]
        real = filter_real(solutions, critical.compiled)
        d, minimizer, residual = _score(critical, real, K, interp)
        sign = _sign(eval_variety(_sign_kind(critical.branch), K)) if signed else None
        if d is None:
            logger.warning("%s: no real critical point at pose %d", critical.key, i)
        minima.append(BranchMinimum(
            label, d, minimizer, len(real), solutions.n_tracked, solutions.n_failed, residual, sign,
        ))
    return minima


def _closed_form_minima(plan: BranchPlan, interp: Interpretation, configs, signed) -> list[BranchMinimum]:
    minima = []
    for K in configs:
        if K is None:
            minima.append(BranchMinimum(plan.label, None))
            continue
        minimizer = pedal_projection(K, interp, plan.closed_form)
        sign = _sign(eval_variety(_sign_kind(plan.kind), K)) if signed else None
        minima.append(BranchMinimum(plan.label, distance(interp, K, minimizer), minimizer, 1, sign=sign, residual=0.0))
    return minima


def _combine(phi, label, per_branch, K, signed, overall_kind=ConstraintKind.V) -> DistanceResult:
    present = [b for b in per_branch if b.distance is not None]
    if not present:
        return DistanceResult(phi, label, tuple(per_branch), None, None)
    best = min(present, key=lambda b: b.distance)
    if signed and K is not None:
        sign = best.sign if overall_kind is None else _sign(eval_variety(overall_kind, K))
    else:
        sign = None
    return DistanceResult(phi, label, tuple(per_branch), best.distance, best.branch, sign, best.minimizer)


def evaluate_poses(interp: Interpretation, design: DesignParams, motion: MotionSpec, phis: Sequence[float], *,
                   signed: bool = False, branches: Sequence[BranchPlan] | None = None,
                   settings: TrackerSettings | None = None, seed: int = 0, workers: int = 1,
                   cache_dir: Path | None = None, counts: dict | None = None) -> list[DistanceResult]:
    """
    Singularity distances of a 3-RPR manipulator at the given poses.

    Args:
        interp (Interpretation): Platform/base reading.
        design (DesignParams): Anchor geometry.
        motion (MotionSpec): Motion.
        phis (Sequence[float]): Real poses.
        signed (bool): Attach signs of the constraint polynomials.
        branches (Sequence[BranchPlan], optional): Defaults to the applicability matrix.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int): Run seed.
        workers (int): Parallel jobs.
        cache_dir (Path, optional): Start-solution cache.
        counts (dict, optional): Filled with ab-initio counts per system key.

    Returns:
        list[DistanceResult]: One result per pose, in pose order.
    """
    settings = settings or TrackerSettings()
    plans = list(branches) if branches is not None else applicable_branches(interp)
    configs = [pose_config(design, motion, phi) for phi in phis]
    seed_config = pose_config(design, motion, _seed_pose(motion, seed))
    columns = []
    for plan in plans:
        if plan.closed_form:
            columns.append(_closed_form_minima(plan, interp, configs, signed))
            continue
        if plan.kind is BranchKind.SING_POINT_CASE1 and not case1_feasible(interp, design):
            logger.info("%s: collinear singular point infeasible for this design", interp.label)
            columns.append([BranchMinimum(plan.label, None, feasible=False) for _ in configs])
            continue
        critical = build_system(interp, plan.kind, plan.variant)
        run = prepare_branch(critical, seed_config, design, settings, seed, workers, cache_dir)
        if counts is not None:
            counts[critical.key] = run.counts
        columns.append(_homotopy_minima(run, plan.label, configs, design, interp, settings, seed, workers, signed))
        logger.info("%s: swept %d poses", critical.key, len(configs))
    return [
        _combine(float(phi), interp.label, [column[i] for column in columns], configs[i], signed)
        for i, phi in enumerate(phis)
    ]


def sweep_distance(interp: Interpretation, design: DesignParams, motion: MotionSpec, **kwargs) -> list[DistanceResult]:
    """Distances at the motion's sampled poses; options as :func:`evaluate_poses`."""
    return evaluate_poses(interp, design, motion, motion.poses(), **kwargs)


def single_distance(interp: Interpretation, design: DesignParams, motion: MotionSpec, phi: float,
                    **kwargs) -> DistanceResult:
    """Distance at one pose; options as :func:`evaluate_poses`."""
    return evaluate_poses(interp, design, motion, [phi], **kwargs)[0]


def rrr_sweep(design: RRRDesign, motion: MotionSpec, branches: Sequence[BranchKind] = RRR_BRANCHES, *,
              phis: Sequence[float] | None = None, signed: bool = True, settings: TrackerSettings | None = None,
              seed: int = 0, workers: int = 1, cache_dir: Path | None = None,
              counts: dict | None = None) -> list[DistanceResult]:
    """
    Signed distances of a 3-RRR manipulator to its parallel and leg singularities.

    Args:
        design (RRRDesign): Geometry and working mode.
        motion (MotionSpec): Usually a circular translation.
        branches (Sequence[BranchKind]): RRR branches to evaluate.
        phis (Sequence[float], optional): Poses; the motion's samples by default.
        signed (bool): Signs from V or the leg collinearity determinants.

    Returns:
        list[DistanceResult]: Overall result is the branch of least magnitude.
    """
    settings = settings or TrackerSettings()
    phis = motion.poses() if phis is None else phis
    configs = []
    for phi in phis:
        try:
            configs.append(rrr_pose_config(design, motion, phi))
        except UnreachablePose as exc:
            logger.warning("%s", exc)
            configs.append(None)
    seed_config = rrr_pose_config(design, motion, _seed_pose(motion, seed))
    columns = []
    for kind in branches:
        critical = build_system(None, kind)
        run = prepare_branch(critical, seed_config, None, settings, seed, workers, cache_dir)
        if counts is not None:
            counts[critical.key] = run.counts
        columns.append(_homotopy_minima(run, kind.value, configs, None, None, settings, seed, workers, signed))
    return [
        _combine(float(phi), "rrr", [column[i] for column in columns], configs[i], signed, overall_kind=None)
        for i, phi in enumerate(phis)
    ]


def _coordinate_columns(count: int) -> list[str]:
    return [f"{axis}{i}" for i in range(1, count + 1) for axis in ("c", "d")]


def results_frame(results: Sequence[DistanceResult]) -> pd.DataFrame:
    """
    Long table of distance results: one row per branch plus an ``overall`` row.

    Columns are phi, interpretation, branch, distance, sign, the minimizer
    coordinates, n_real, n_tracked and n_failed.
    """
    width = 6
    for result in results:
        for b in result.branches:
            if b.minimizer is not None:
                width = max(width, len(b.minimizer))
    coordinate_columns = _coordinate_columns(width)
    rows = []
    for result in results:
        entries = [(b.branch, b.distance, b.sign, b.minimizer, b.n_real, b.n_tracked, b.n_failed) for b in result.branches]
        entries.append((
            "overall", result.distance, result.sign, result.minimizer,
            sum(b.n_real for b in result.branches),
            sum(b.n_tracked for b in result.branches),
            sum(b.n_failed for b in result.branches),
        ))
        for branch, dist, sign, minimizer, n_real, n_tracked, n_failed in entries:
            row = {"phi": result.phi, "interpretation": result.interpretation, "branch": branch,
                   "distance": dist, "sign": sign}
            coords = minimizer.coordinates() if minimizer is not None else [None] * len(coordinate_columns)
            row.update(zip(coordinate_columns, coords))
            row.update(n_real=n_real, n_tracked=n_tracked, n_failed=n_failed)
            rows.append(row)
    frame = pd.DataFrame(rows, columns=["phi", "interpretation", "branch", "distance", "sign",
                                        *coordinate_columns, "n_real", "n_tracked", "n_failed"])
    frame["sign"] = frame["sign"].astype("Int64")
    return frame


def write_distances_csv(results: Sequence[DistanceResult], path: Path) -> pd.DataFrame:
    frame = results_frame(results)
    frame.to_csv(path, index=False, float_format="%.9g")
    return frame


def write_results_json(results: Sequence[DistanceResult], path: Path, counts: dict | None = None):
    """Full per-branch detail, plus ab-initio counts when given."""

    def config(c):
        return None if c is None else [list(map(float, p)) for p in np.real(c.points)]

    payload = {
        "ab_initio": counts or {},
        "results": [
            {
                "phi": r.phi,
                "interpretation": r.interpretation,
                "distance": r.distance,
                "branch": r.branch,
                "sign": r.sign,
                "minimizer": config(r.minimizer),
                "branches": [
                    {
                        "branch": b.branch, "distance": b.distance, "sign": b.sign, "feasible": b.feasible,
                        "minimizer": config(b.minimizer), "n_real": b.n_real, "n_tracked": b.n_tracked,
                        "n_failed": b.n_failed, "residual": None if math.isnan(b.residual) else b.residual,
                    }
                    for b in r.branches
                ],
            }
            for r in results
        ],
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2)


def write_metrics(out_dir: Path) -> Path:
    path = Path(out_dir) / "metrics.prom"
    write_to_textfile(str(path), REGISTRY)
    return path
