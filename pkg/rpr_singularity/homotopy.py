"""
Numerical continuation engine.

Path tracking (RK4 predictor, Newton corrector, adaptive steps) along
parameter homotopies with a gamma detour and along total-degree homotopies;
monodromy population of the generic solutions of a parameterized family;
parameter sweeps from a seed to many target parameter vectors; and the final
real filtering of endpoints.

Path statistics are counted on :data:`REGISTRY` so runs can write them with
``prometheus_client.write_to_textfile``.
"""

from __future__ import annotations

import itertools
import logging
import time
import zlib
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np
from joblib import Parallel, delayed
from prometheus_client import CollectorRegistry, Counter, Histogram

from .polynomials import CompiledSystem, ParameterizedSystem

logger = logging.getLogger(__name__)

REGISTRY = CollectorRegistry()
PATHS_TRACKED = Counter(
    "rpr_paths_tracked_total", "Tracked homotopy paths", ["phase", "status"], registry=REGISTRY
)
SOLVE_LATENCY = Histogram(
    "rpr_solve_seconds", "Wall time of solver phases", ["phase"], registry=REGISTRY
)

DIVERGING_NORM = 1e6


class BudgetExceeded(RuntimeError):
    """Raised when a total-degree start system has too many paths."""

    def __init__(self, paths: int, budget: int):
        super().__init__(f"total-degree homotopy needs {paths} paths, budget is {budget}")
        self.paths = paths
        self.budget = budget


class MonodromyStalled(RuntimeError):
    """Raised when monodromy stops growing below its target count."""

    def __init__(self, achieved: int, target: int):
        super().__init__(f"monodromy stalled at {achieved} of {target} solutions")
        self.achieved = achieved
        self.target = target


class PathStatus(Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    STEP_FAILURE = "step_failure"


@dataclass(frozen=True)
class TrackerSettings:
    """
    Path-tracker configuration.

    Attributes:
        tol_before_endgame (float): Corrector tolerance while m > endgame_start.
        tol_during_endgame (float): Corrector tolerance near the target, and the
            residual bound for a converged endpoint.
        initial_step (float): First step in the homotopy parameter.
        min_step (float): Step underflow threshold.
        max_step (float): Upper bound for step doubling.
        max_newton (int): Newton iterations per correction.
        contraction (float): Largest accepted ratio of successive Newton updates.
        max_steps (int): Step budget of one path.
        divergence_bound (float): Endpoint norm treated as a path at infinity.
        endgame_start (float): Remaining homotopy length where the endgame starts.
        gamma (complex | None): Fixed detour constant; random per path family when None.
        dedupe_tol (float): Relative infinity-norm distance identifying endpoints.
        budget (int): Maximal number of total-degree paths.
        stall_limit (int): Monodromy loops without growth before giving up.
        max_retries (int): Rounds of re-tracking failed or colliding sweep paths.
    """

    tol_before_endgame: float = 1e-8
    tol_during_endgame: float = 1e-8
    initial_step: float = 0.05
    min_step: float = 1e-14
    max_step: float = 0.1
    max_newton: int = 3
    contraction: float = 0.5
    max_steps: int = 100_000
    divergence_bound: float = 1e10
    endgame_start: float = 0.1
    gamma: complex | None = None
    dedupe_tol: float = 1e-8
    budget: int = 100_000
    stall_limit: int = 20
    max_retries: int = 3

    def __post_init__(self):
        if not 0 < self.min_step < self.initial_step <= self.max_step <= 0.1:
            raise ValueError("need 0 < min_step < initial_step <= max_step <= 0.1")
        if self.tol_before_endgame <= 0 or self.tol_during_endgame <= 0:
            raise ValueError("tolerances must be positive")
        if self.gamma is not None and not np.isclose(abs(self.gamma), 1.0):
            raise ValueError("gamma must have unit modulus")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction must lie in (0, 1)")

    def tightened(self) -> "TrackerSettings":
        """Tolerances and initial step reduced tenfold, maximal step halved."""
        initial_step = max(self.initial_step / 10, self.min_step * 10)
        return replace(
            self,
            tol_before_endgame=self.tol_before_endgame / 10,
            tol_during_endgame=self.tol_during_endgame / 10,
            initial_step=initial_step,
            max_step=max(self.max_step / 2, initial_step),
        )

    def tolerance(self, s: float) -> float:
        return self.tol_during_endgame if 1 - s <= self.endgame_start else self.tol_before_endgame


@dataclass
class PathResult:
    """Endpoint of one tracked path."""

    endpoint: np.ndarray
    status: PathStatus
    residual: float
    condition: float
    steps: int = 0

    @property
    def converged(self) -> bool:
        return self.status is PathStatus.CONVERGED


def random_gamma(rng: np.random.Generator) -> complex:
    """Random unit-modulus complex number."""
    return complex(np.exp(2j * np.pi * rng.random()))


def random_complex(rng: np.random.Generator, size=None) -> np.ndarray:
    return rng.standard_normal(size) + 1j * rng.standard_normal(size)


class ParameterHomotopy:
    """
    Homotopy H(x, s) = F(x; p(s)) along a gamma-deformed parameter segment.

    With m = 1 - s the path is p = end + phi(m)(start - end), where
    phi(m) = gamma m / (gamma m + 1 - m); s = 0 is the start, s = 1 the end.

    Args:
        compiled (CompiledSystem): Family F(x; p).
        start, end: Parameter vectors.
        gamma (complex): Detour constant.
    """

    def __init__(self, compiled: CompiledSystem, start, end, gamma: complex):
        self.compiled = compiled
        self.start = np.asarray(start, dtype=complex)
        self.end = np.asarray(end, dtype=complex)
        self.gamma = gamma
        self._direction = self.start - self.end

    def params(self, s: float) -> np.ndarray:
        m = 1.0 - s
        phi = self.gamma * m / (self.gamma * m + 1.0 - m)
        return self.end + phi * self._direction

    def _dparams(self, s: float) -> np.ndarray:
        m = 1.0 - s
        dphi = self.gamma / (self.gamma * m + 1.0 - m) ** 2
        return -dphi * self._direction

    def value(self, x, s):
        return self.compiled.evaluate(x, self.params(s))

    def jacobian(self, x, s):
        return self.compiled.jacobian(x, self.params(s))

    def ds(self, x, s):
        if not self.compiled.n_parameters:
            return np.zeros(self.compiled.n_unknowns, dtype=complex)
        return self.compiled.parameter_jacobian(x, self.params(s)) @ self._dparams(s)


class StraightLineHomotopy:
    """
    H(x, s) = (1 - s) gamma G(x) + s F(x; p) with G_i = x_i^{d_i} - 1.

    Args:
        compiled (CompiledSystem): Target system.
        params: Fixed parameter vector of the target.
        degrees (Sequence[int]): Start-system degrees.
        gamma (complex): Detour constant.
    """

    def __init__(self, compiled: CompiledSystem, params, degrees: Sequence[int], gamma: complex):
        self.compiled = compiled
        self.p = np.asarray(params, dtype=complex)
        self.degrees = np.asarray(degrees)
        self.gamma = gamma

    def _start(self, x):
        return x ** self.degrees - 1.0

    def value(self, x, s):
        return (1 - s) * self.gamma * self._start(x) + s * self.compiled.evaluate(x, self.p)

    def jacobian(self, x, s):
        start = np.diag(self.degrees * x ** (self.degrees - 1))
        return (1 - s) * self.gamma * start + s * self.compiled.jacobian(x, self.p)

    def ds(self, x, s):
        return self.compiled.evaluate(x, self.p) - self.gamma * self._start(x)


def _velocity(homotopy, x, s):
    return -np.linalg.solve(homotopy.jacobian(x, s), homotopy.ds(x, s))


def _predict(homotopy, x, s, h):
    k1 = _velocity(homotopy, x, s)
    k2 = _velocity(homotopy, x + 0.5 * h * k1, s + 0.5 * h)
    k3 = _velocity(homotopy, x + 0.5 * h * k2, s + 0.5 * h)
    k4 = _velocity(homotopy, x + h * k3, s + h)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _correct(homotopy, x, s, tol, iterations, contraction):
    previous = np.inf
    for _ in range(iterations):
        dx = np.linalg.solve(homotopy.jacobian(x, s), homotopy.value(x, s))
        x = x - dx
        size = np.max(np.abs(dx))
        if size <= tol * (1 + np.max(np.abs(x))):
            return x, True
        # Newton must contract
        if size > contraction * previous:
            return x, False
        previous = size
    return x, False


def _polish(homotopy, x, iterations=8):
    residual = np.inf
    for _ in range(iterations):
        try:
            dx = np.linalg.solve(homotopy.jacobian(x, 1.0), homotopy.value(x, 1.0))
        except np.linalg.LinAlgError:
            break
        x = x - dx
        residual = np.max(np.abs(dx)) / (1 + np.max(np.abs(x)))
        if residual < 1e-15:
            break
    return x, residual


def track(homotopy, x0, settings: TrackerSettings) -> PathResult:
    """
    Track one path of a homotopy from s = 0 to s = 1.

    A step is accepted only when Newton contracts and the correction stays
    small against the predicted move. Only the divergence bound, a step
    underflow or the step budget stop a path early.

    Args:
        homotopy: ParameterHomotopy or StraightLineHomotopy.
        x0: Start point, a solution at s = 0.
        settings (TrackerSettings): Tracker configuration.

    Returns:
        PathResult: Endpoint and status.
    """
    x = np.asarray(x0, dtype=complex).copy()
    s, h, successes, steps = 0.0, settings.initial_step, 0, 0
    while s < 1.0:
        if steps >= settings.max_steps:
            return PathResult(x, PathStatus.STEP_FAILURE, np.inf, np.inf, steps)
        h = min(h, 1.0 - s)
        tol = settings.tolerance(s + h)
        try:
            predicted = _predict(homotopy, x, s, h)
            corrected, ok = _correct(homotopy, predicted, s + h, tol, settings.max_newton, settings.contraction)
            moved = np.max(np.abs(predicted - x))
            jump = np.max(np.abs(corrected - predicted))
            ok = ok and bool(np.all(np.isfinite(corrected)))
            ok = ok and jump <= settings.contraction * moved + tol * (1 + np.max(np.abs(corrected)))
        except np.linalg.LinAlgError:
            ok = False
        steps += 1
        if ok:
            x, s = corrected, (1.0 if s + h >= 1.0 else s + h)
            if np.max(np.abs(x)) > settings.divergence_bound:
                return PathResult(x, PathStatus.DIVERGED, np.inf, np.inf, steps)
            successes += 1
            if successes >= 2:
                h, successes = min(2 * h, settings.max_step), 0
        else:
            h, successes = h / 2, 0
            if h < settings.min_step:
                status = PathStatus.DIVERGED if np.max(np.abs(x)) > DIVERGING_NORM else PathStatus.STEP_FAILURE
                return PathResult(x, status, np.inf, np.inf, steps)

    x, residual = _polish(homotopy, x)
    try:
        condition = float(np.linalg.cond(homotopy.jacobian(x, 1.0)))
    except np.linalg.LinAlgError:
        condition = np.inf
    status = PathStatus.CONVERGED if residual < settings.tol_during_endgame else PathStatus.STEP_FAILURE
    return PathResult(x, status, float(residual), condition, steps)


def track_path(compiled: CompiledSystem, start_params, end_params, start_point, settings: TrackerSettings,
               gamma: complex | None = None) -> PathResult:
    """
    Track a solution of F(x; start_params) to F(x; end_params).

    Args:
        compiled (CompiledSystem): Parameterized family.
        start_params, end_params: Parameter vectors.
        start_point: Solution at start_params.
        settings (TrackerSettings): Tracker configuration.
        gamma (complex, optional): Detour constant; defaults to ``settings.gamma`` or 1.

    Returns:
        PathResult: Endpoint at end_params.
    """
    gamma = gamma if gamma is not None else (settings.gamma or 1.0)
    return track(ParameterHomotopy(compiled, start_params, end_params, gamma), start_point, settings)


def _track_chain(compiled, legs, start_point, settings) -> PathResult:
    result = None
    x = start_point
    for start, end, gamma in legs:
        result = track_path(compiled, start, end, x, settings, gamma)
        if not result.converged:
            return result
        x = result.endpoint
    return result


def newton_residual(compiled: CompiledSystem, x, params=()) -> float:
    """Relative Newton correction |J^-1 F|_inf / (1 + |x|_inf) at x."""
    try:
        dx = np.linalg.solve(compiled.jacobian(x, params), compiled.evaluate(x, params))
    except np.linalg.LinAlgError:
        return np.inf
    return float(np.max(np.abs(dx)) / (1 + np.max(np.abs(x))))


def _same_point(point, other, tol: float) -> bool:
    return bool(np.max(np.abs(point - other)) <= tol * max(1.0, np.max(np.abs(other))))


@dataclass
class SolutionSet:
    """
    Deduplicated endpoints of a solve, with path bookkeeping.

    Attributes:
        points (np.ndarray): Endpoints, one per row.
        multiplicities (np.ndarray): Cluster size of each endpoint.
        params (np.ndarray | None): Parameter vector the points solve.
        n_tracked (int): Paths tracked to produce the set.
        n_failed (int): Paths that did not converge.
        loops (int): Monodromy loops run.
    """

    points: np.ndarray
    multiplicities: np.ndarray
    params: np.ndarray | None = None
    n_tracked: int = 0
    n_failed: int = 0
    loops: int = 0

    @classmethod
    def from_endpoints(cls, endpoints, dedupe_tol: float = 1e-8, n_unknowns: int | None = None, **kwargs) -> "SolutionSet":
        kept, counts = [], []
        for point in endpoints:
            point = np.asarray(point, dtype=complex)
            for k, other in enumerate(kept):
                if _same_point(point, other, dedupe_tol):
                    counts[k] += 1
                    break
            else:
                kept.append(point)
                counts.append(1)
        width = n_unknowns if n_unknowns is not None else (len(kept[0]) if kept else 0)
        points = np.array(kept, dtype=complex).reshape(len(kept), width)
        return cls(points, np.array(counts, dtype=int), **kwargs)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def contains(self, point, tol: float = 1e-8) -> bool:
        point = np.asarray(point, dtype=complex)
        return any(_same_point(point, other, tol) for other in self.points)

    def merged(self, endpoints, dedupe_tol: float = 1e-8) -> "SolutionSet":
        combined = SolutionSet.from_endpoints(
            list(self.points) + list(endpoints), dedupe_tol, self.points.shape[1]
        )
        combined.multiplicities = np.ones(len(combined), dtype=int)
        return replace(self, points=combined.points, multiplicities=combined.multiplicities)

    def real_mask(self, imag_tol: float = 1e-6) -> np.ndarray:
        if not len(self):
            return np.zeros(0, dtype=bool)
        scale = np.maximum(1.0, np.max(np.abs(self.points), axis=1))
        return np.max(np.abs(self.points.imag), axis=1) < imag_tol * scale

    def to_json(self) -> dict:
        def pack(values):
            return [[float(v.real), float(v.imag)] for v in np.asarray(values, dtype=complex).ravel()]

        return {
            "params": pack(self.params) if self.params is not None else None,
            "points": [pack(p) for p in self.points],
            "n_tracked": self.n_tracked,
            "n_failed": self.n_failed,
            "loops": self.loops,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SolutionSet":
        def unpack(pairs):
            return np.array([complex(re, im) for re, im in pairs], dtype=complex)

        points = [unpack(p) for p in data["points"]]
        width = len(points[0]) if points else 0
        return cls(
            np.array(points, dtype=complex).reshape(len(points), width),
            np.ones(len(points), dtype=int),
            unpack(data["params"]) if data.get("params") is not None else None,
            data.get("n_tracked", 0),
            data.get("n_failed", 0),
            data.get("loops", 0),
        )


def _record(phase: str, results: Sequence[PathResult]):
    for result in results:
        PATHS_TRACKED.labels(phase=phase, status=result.status.value).inc()


def _run(tasks, workers: int) -> list:
    if workers == 1:
        return [fn(*args) for fn, args in tasks]
    return Parallel(n_jobs=workers)(delayed(fn)(*args) for fn, args in tasks)


def total_degree_solve(system: ParameterizedSystem, params=(), settings: TrackerSettings | None = None,
                       seed: int | None = None, workers: int = 1) -> SolutionSet:
    """
    All isolated finite solutions of a square system by a total-degree homotopy.

    Args:
        system (ParameterizedSystem): Square system.
        params: Parameter values, if the system has parameters.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int, optional): Seed of the detour constant.
        workers (int): Parallel path-tracking jobs.

    Returns:
        SolutionSet: Converged finite endpoints.

    Raises:
        BudgetExceeded: The Bezout number exceeds ``settings.budget``.
    """
    settings = settings or TrackerSettings()
    degrees = [max(d, 1) for d in system.degrees()]
    paths = int(np.prod(degrees))
    if paths > settings.budget:
        raise BudgetExceeded(paths, settings.budget)
    rng = np.random.default_rng(seed)
    gamma = settings.gamma or random_gamma(rng)
    compiled = system.compile()
    roots = [np.exp(2j * np.pi * np.arange(d) / d) for d in degrees]
    homotopy = StraightLineHomotopy(compiled, params, degrees, gamma)

    started = time.perf_counter()
    results = _run([(track, (homotopy, np.array(start), settings)) for start in itertools.product(*roots)], workers)
    SOLVE_LATENCY.labels(phase="total_degree").observe(time.perf_counter() - started)
    _record("total_degree", results)

    finite = [r.endpoint for r in results if r.converged]
    failed = sum(r.status is PathStatus.STEP_FAILURE for r in results)
    logger.debug("total degree: %d paths, %d finite, %d failed", paths, len(finite), failed)
    return SolutionSet.from_endpoints(
        finite, settings.dedupe_tol, len(degrees),
        params=np.asarray(params, dtype=complex), n_tracked=paths, n_failed=failed,
    )


def _univariate_root(poly, pivot, rng):
    coefficients = poly.univariate_coefficients(pivot)
    nonzero = np.flatnonzero(np.abs(coefficients) > 1e-14)
    if not len(nonzero) or nonzero[-1] == 0:
        return None
    roots = np.roots(coefficients[: nonzero[-1] + 1][::-1])
    return complex(roots[rng.integers(len(roots))])


def seed_by_parameter_reversal(critical, rng: np.random.Generator, shape: dict | None = None,
                               attempts: int = 10) -> tuple[np.ndarray, np.ndarray]:
    """
    A random solution of a parameterized critical-point family.

    Unknowns are drawn first; each parameter-free constraint is then closed by
    a univariate solve in one of its coordinates, lifted lengths by their own
    constraint, and the reference coordinates by the gradient equations, in
    which they appear affinely.

    Args:
        critical (CriticalSystem): The family.
        rng (np.random.Generator): Random source.
        shape (dict, optional): Fixed shape parameters; drawn when omitted.
        attempts (int): Redraws before giving up.

    Returns:
        tuple: (parameter vector, solution vector).
    """
    compiled = critical.compiled
    for _ in range(attempts):
        values = dict(shape) if shape else {n: complex(v) for n, v in zip(critical.shape, random_complex(rng, len(critical.shape)))}
        values.update(zip(critical.coordinates, random_complex(rng, len(critical.coordinates))))
        feasible = True
        for constraint, lifted in zip(critical.constraints, critical.lifted):
            if lifted is not None:
                continue
            pivot = next((n for n in critical.coordinates if n in constraint.variables()), None)
            partial = constraint.substitute({k: v for k, v in values.items() if k != pivot})
            root = _univariate_root(partial, pivot, rng) if pivot else None
            if root is None:
                feasible = False
                break
            values[pivot] = root
        if not feasible:
            continue
        for constraint, lifted in zip(critical.constraints, critical.lifted):
            if lifted is not None:
                at_zero = constraint.evaluate({**values, lifted: 0.0})
                slope = constraint.evaluate({**values, lifted: 1.0}) - at_zero
                values[lifted] = -at_zero / slope
        values.update(zip(critical.multipliers, random_complex(rng, len(critical.multipliers))))

        x = np.array([values[n] for n in critical.unknowns], dtype=complex)
        reference = [critical.parameters.index(n) for n in critical.reference]
        p = np.array([values.get(n, 0.0) for n in critical.parameters], dtype=complex)
        p[reference] = 0.0
        offset = compiled.evaluate(x, p)
        matrix = compiled.parameter_jacobian(x, p)[:, reference]
        solution, *_ = np.linalg.lstsq(matrix, -offset, rcond=None)
        _, singular, vh = np.linalg.svd(matrix)
        rank = int(np.sum(singular > 1e-10 * singular[0]))
        null = vh[rank:].conj().T
        if null.size:
            solution = solution + null @ random_complex(rng, null.shape[1])
        p[reference] = solution
        if newton_residual(compiled, x, p) < 1e-10 and np.max(np.abs(compiled.evaluate(x, p))) < 1e-8 * (1 + np.max(np.abs(p))):
            return p, x
    raise RuntimeError(f"could not seed {critical.key} by parameter reversal")


def _loop_parameters(critical, base, rng):
    point = base.copy()
    affine = [critical.parameters.index(n) for n in critical.affine_parameters]
    point[affine] = random_complex(rng, len(affine))
    return point


def monodromy_solve(critical, target_count: int | None, settings: TrackerSettings | None = None,
                    seed: int | None = None, workers: int = 1,
                    base: tuple | None = None) -> SolutionSet:
    """
    Populate the generic solutions of a family by monodromy loops.

    Each loop carries every known solution around a random triangle in
    parameter space and also brings one fresh parameter-reversal seed to the
    base parameters.

    Args:
        critical (CriticalSystem): Family affine in its lifted parameters.
        target_count (int | None): Generic count; None runs until stalled.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int, optional): Random seed.
        workers (int): Parallel path-tracking jobs.
        base (tuple, optional): (params, solution) to start from.

    Returns:
        SolutionSet: Solutions at the base parameters.

    Raises:
        MonodromyStalled: No growth for ``stall_limit`` loops below target.
    """
    settings = settings or TrackerSettings()
    rng = np.random.default_rng(seed)
    params, x0 = base if base is not None else seed_by_parameter_reversal(critical, rng)
    shape = {n: params[critical.parameters.index(n)] for n in critical.shape}
    known = SolutionSet.from_endpoints([x0], settings.dedupe_tol, params=params)
    compiled = critical.compiled
    stalled, loops, tracked, failed = 0, 0, 0, 0
    started = time.perf_counter()

    while (target_count is None or len(known) < target_count) and stalled < settings.stall_limit:
        first, second = _loop_parameters(critical, params, rng), _loop_parameters(critical, params, rng)
        legs = [(params, first, random_gamma(rng)), (first, second, random_gamma(rng)), (second, params, random_gamma(rng))]
        fresh_params, fresh_x = seed_by_parameter_reversal(critical, rng, shape)
        tasks = [(_track_chain, (compiled, legs, point, settings)) for point in known.points]
        tasks.append((_track_chain, (compiled, [(fresh_params, params, random_gamma(rng))], fresh_x, settings)))
        results = _run(tasks, workers)
        _record("monodromy", results)
        tracked += len(results)
        failed += sum(r.status is PathStatus.STEP_FAILURE for r in results)

        before = len(known)
        known = known.merged([r.endpoint for r in results if r.converged], settings.dedupe_tol)
        loops += 1
        stalled = 0 if len(known) > before else stalled + 1
        logger.debug("%s: loop %d, %d solutions", critical.key, loops, len(known))

    SOLVE_LATENCY.labels(phase="monodromy").observe(time.perf_counter() - started)
    known = replace(known, n_tracked=tracked, n_failed=failed, loops=loops)
    if target_count is not None and len(known) < target_count:
        raise MonodromyStalled(len(known), target_count)
    return known


def suspect_paths(results: Sequence[PathResult], dedupe_tol: float) -> list[int]:
    """Indices of paths that failed, diverged or share an endpoint with another path."""
    suspects = {i for i, r in enumerate(results) if not r.converged}
    converged = [i for i, r in enumerate(results) if r.converged]
    for a, b in itertools.combinations(converged, 2):
        if _same_point(results[a].endpoint, results[b].endpoint, dedupe_tol):
            suspects.update((a, b))
    return sorted(suspects)


def _sweep_target(compiled, seed_params, seeds, target, settings, seed) -> tuple[list, int]:
    rng = np.random.default_rng([seed & 0xFFFFFFFF, zlib.crc32(np.ascontiguousarray(target, dtype=complex).tobytes())])
    gamma = settings.gamma or random_gamma(rng)
    results = [track_path(compiled, seed_params, target, x, settings, gamma) for x in seeds]
    tracked, tight = len(seeds), settings
    for _ in range(settings.max_retries):
        suspects = suspect_paths(results, settings.dedupe_tol)
        if not suspects:
            break
        tight = tight.tightened()
        retry_gamma = random_gamma(rng)
        for i in suspects:
            results[i] = track_path(compiled, seed_params, target, seeds[i], tight, retry_gamma)
        tracked += len(suspects)
    return results, tracked


def parameter_sweep(critical, seed_params, seed_solutions: SolutionSet, targets: Sequence,
                    settings: TrackerSettings | None = None, seed: int = 0, workers: int = 1) -> list[SolutionSet]:
    """
    Track the seed solutions to every target parameter vector.

    Paths that fail, diverge or land on another path's endpoint are re-tracked
    for up to ``settings.max_retries`` rounds, each with tighter settings and a
    fresh detour constant. Paths still not converged are counted in
    ``n_failed``, never raised.

    Args:
        critical (CriticalSystem): The family.
        seed_params: Parameters of the seed solutions.
        seed_solutions (SolutionSet): Complete solutions at seed_params.
        targets (Sequence): Target parameter vectors.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int): Run seed; detour constants derive from it and the target.
        workers (int): Parallel jobs (one task per target).

    Returns:
        list[SolutionSet]: One set per target, in target order.
    """
    settings = settings or TrackerSettings()
    compiled = critical.compiled
    seeds = list(seed_solutions.points)
    started = time.perf_counter()
    outcomes = _run(
        [(_sweep_target, (compiled, seed_params, seeds, np.asarray(t, dtype=complex), settings, seed)) for t in targets],
        workers,
    )
    SOLVE_LATENCY.labels(phase="sweep").observe(time.perf_counter() - started)
    sets = []
    for target, (results, tracked) in zip(targets, outcomes):
        _record("sweep", results)
        failures = sum(not r.converged for r in results)
        if failures:
            logger.warning("%s: %d paths still failing after retry", critical.key, failures)
        sets.append(SolutionSet.from_endpoints(
            [r.endpoint for r in results if r.converged], settings.dedupe_tol, compiled.n_unknowns,
            params=np.asarray(target, dtype=complex), n_tracked=tracked, n_failed=failures,
        ))
    return sets


def filter_real(solutions: SolutionSet, compiled: CompiledSystem, imag_tol: float = 1e-6,
                polish_iterations: int = 8) -> SolutionSet:
    """
    Real solutions, Newton-polished at their real projections.

    Args:
        solutions (SolutionSet): Endpoints for real parameters ``solutions.params``.
        compiled (CompiledSystem): The system they solve.
        imag_tol (float): Relative bound on the imaginary parts.
        polish_iterations (int): Newton iterations on the real projection.

    Returns:
        SolutionSet: Real points that re-converge with residual < 1e-10.
    """
    params = solutions.params.real if solutions.params is not None else ()
    kept = []
    for point, is_real in zip(solutions.points, solutions.real_mask(imag_tol)):
        if not is_real:
            continue
        x = point.real.copy()
        for _ in range(polish_iterations):
            try:
                dx = np.linalg.solve(compiled.jacobian(x, params).real, compiled.evaluate(x, params).real)
            except np.linalg.LinAlgError:
                break
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15 * (1 + np.max(np.abs(x))):
                break
        if newton_residual(compiled, x, params) < 1e-10:
            kept.append(x.astype(complex))
    return replace(
        SolutionSet.from_endpoints(kept, 1e-8, solutions.points.shape[1] if len(solutions) else compiled.n_unknowns),
        params=solutions.params, n_tracked=solutions.n_tracked, n_failed=solutions.n_failed, loops=solutions.loops,
    )
