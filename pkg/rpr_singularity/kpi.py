"""
Closeness-to-singularity indices that do not depend on an end-effector point.

Manipulability, incircle radius of the leg carrier lines, transmission
indices, control numbers, and the distances to the singularity locus in the
orientation and in the position workspace.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from numpy.polynomial import Polynomial

from .homotopy import TrackerSettings, filter_real, total_degree_solve
from .model import Configuration, DesignParams, MotionSpec, pose_config
from .polynomials import ParameterizedSystem, PolynomialRing, differentiate
from .varieties import leg_line, singularity_polynomial

logger = logging.getLogger(__name__)

PARALLEL_TOL = 1e-12
CONDITION_LIMIT = 1e12


class ZeroLegLength(ValueError):
    """Raised when a base anchor coincides with its platform anchor."""


class SingularPose(ValueError):
    """Raised when an index is undefined at a singular pose."""


class EmptyLocus(ValueError):
    """Raised when the fixed-orientation or fixed-position singularity locus has no real point."""


@dataclass(frozen=True)
class KpiVector:
    """All indices at one pose; NaN marks an index undefined at that pose."""

    M: float
    V_raw: float
    IR: float
    TI: float
    MTI: float
    DS: float
    MDS: float
    CN: float
    MCN: float
    orientation_dist: float
    position_dist: float


def _legs(K: Configuration):
    pts = np.asarray(K.points, dtype=float)
    for i in range(3):
        base, anchor = pts[i], pts[i + 3]
        dx, dy, moment = leg_line(base, anchor)
        length = math.hypot(dx, dy)
        if length == 0:
            raise ZeroLegLength(f"leg {i + 1} has zero length")
        yield base, anchor, np.array([dx, dy]) / length, moment / length, length


def manipulability(K: Configuration) -> tuple[float, float]:
    """
    Absolute determinant of the unit Plücker rows of the legs, and raw V(K).

    Args:
        K (Configuration): Real 3-RPR configuration.

    Returns:
        tuple: (M, V_raw).

    Raises:
        ZeroLegLength: A leg has zero length.
    """
    rows = [[u[0], u[1], moment] for _, _, u, moment, _ in _legs(K)]
    return abs(float(np.linalg.det(np.array(rows)))), float(np.real(singularity_polynomial(K.points)))


def _carrier_lines(K: Configuration):
    lines = []
    for base, _, u, _, _ in _legs(K):
        normal = np.array([-u[1], u[0]])
        lines.append((normal, float(normal @ base)))
    return lines


def _intersection(first, second):
    (n1, c1), (n2, c2) = first, second
    return np.linalg.solve(np.array([n1, n2]), np.array([c1, c2]))


def _is_parallel(first, second) -> bool:
    return abs(first[0][0] * second[0][1] - first[0][1] * second[0][0]) < PARALLEL_TOL


def _strip_width(first, second) -> float:
    (n1, c1), (n2, c2) = first, second
    # align normals before comparing offsets
    return abs(c1 - c2) if n1 @ n2 > 0 else abs(c1 + c2)


def incircle_radius(K: Configuration) -> float:
    """
    Radius of the incircle of the triangle of leg carrier lines.

    Two parallel lines give the circle between them touching the third line
    (half the strip width); three parallel lines give half the widest strip.

    Args:
        K (Configuration): Real 3-RPR configuration.

    Returns:
        float: r >= 0, 0 for concurrent lines.
    """
    lines = _carrier_lines(K)
    pairs = [(0, 1), (0, 2), (1, 2)]
    parallel = [(i, j) for i, j in pairs if _is_parallel(lines[i], lines[j])]
    if len(parallel) == 3:
        logger.warning("all three carrier lines are parallel")
        return max(_strip_width(lines[i], lines[j]) for i, j in pairs) / 2
    if parallel:
        i, j = parallel[0]
        return _strip_width(lines[i], lines[j]) / 2
    vertices = [_intersection(lines[i], lines[j]) for i, j in pairs]
    a, b, c = (np.linalg.norm(vertices[i] - vertices[j]) for i, j in pairs)
    perimeter = a + b + c
    if perimeter <= 1e-12 * (1 + max(np.max(np.abs(v)) for v in vertices)):
        return 0.0
    (x1, y1), (x2, y2), (x3, y3) = vertices
    area = abs((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)) / 2
    return 2 * area / perimeter


def _pressure_cosines(K: Configuration, anchor_offset: int) -> np.ndarray:
    pts = np.asarray(K.points, dtype=float)
    legs = list(_legs(K))
    lines = _carrier_lines(K)
    cosines = np.empty(3)
    for i in range(3):
        j, k = [m for m in range(3) if m != i]
        direction = legs[i][2]
        anchor = pts[i + anchor_offset]
        if _is_parallel(lines[j], lines[k]):
            velocity = lines[j][0]
        else:
            arm = anchor - _intersection(lines[j], lines[k])
            norm = np.linalg.norm(arm)
            if norm < 1e-12 * (1 + np.max(np.abs(anchor))):
                raise SingularPose(f"anchor {i + anchor_offset + 1} coincides with its pole")
            velocity = np.array([-arm[1], arm[0]]) / norm
        cosines[i] = min(abs(float(direction @ velocity)), 1.0)
    return cosines


def transmission_indices(K: Configuration) -> tuple[float, float, float, float]:
    """
    Transmission index, its role-symmetric variant and the pressure-angle distances.

    Args:
        K (Configuration): Real 3-RPR configuration.

    Returns:
        tuple: (TI, MTI, DS, MDS), each in [0, 1].

    Raises:
        SingularPose: An anchor coincides with the pole of its leg.
    """
    alpha = np.arccos(_pressure_cosines(K, 3))
    beta = np.arccos(_pressure_cosines(K, 0))
    mean = (alpha + beta) / 2
    ti = float(np.min(np.cos(alpha)))
    mti = float(np.min(np.cos(mean)))
    ds = float(1 - 2 * np.max(alpha) / math.pi)
    mds = float(1 - 2 * np.max(mean) / math.pi)
    return ti, mti, ds, mds


def control_numbers(K: Configuration) -> tuple[float, float]:
    """
    Control number and its unnormalized variant.

    The six passive revolute rates (base joints, then platform joints
    relative to the platform) are expressed in the prismatic rates; mu-/mu+
    are the extreme eigenvalues of the induced quadratic form.

    Args:
        K (Configuration): Real, non-singular 3-RPR configuration.

    Returns:
        tuple: (CN, MCN) with CN = sqrt(mu-/mu+) and MCN = sqrt(1/mu+).

    Raises:
        SingularPose: The prismatic rates do not determine the twist.
    """
    actuated, passive = [], []
    for _, anchor, u, _, length in _legs(K):
        normal = np.array([-u[1], u[0]])
        arm = np.array([-anchor[1], anchor[0]])
        actuated.append([u @ arm, u[0], u[1]])
        passive.append([normal @ arm / length, normal[0] / length, normal[1] / length])
    A = np.array(actuated)
    if np.linalg.cond(A) > CONDITION_LIMIT:
        raise SingularPose("prismatic rates do not determine the platform twist")
    B = np.array(passive)
    B = np.vstack([B, B - np.array([1.0, 0.0, 0.0])])
    C = B @ np.linalg.inv(A)
    mu = np.linalg.eigvalsh(C.T @ C)
    mu_min, mu_max = max(float(mu[0]), 0.0), float(mu[-1])
    return math.sqrt(mu_min / mu_max), math.sqrt(1 / mu_max)


def _platform_points(design: DesignParams, cs, sn, x, y):
    return [(cs * px - sn * py + x, sn * px + cs * py + y) for px, py in design.platform_points().tolist()]


def orientation_polynomial(design: DesignParams, x0: float, y0: float) -> Polynomial:
    """
    Numerator of V at fixed position after the tan-half substitution.

    V is cubic in (cos z, sin z); with t = tan(z/2) the homogenized numerator
    has degree at most six in t.
    """
    ring = PolynomialRing(("cs", "sn"))
    cs, sn = ring.vars("cs", "sn")
    base = [tuple(map(float, p)) for p in design.base_points()]
    v = singularity_polynomial(base + _platform_points(design, cs, sn, float(x0), float(y0)))
    cosine, sine, weight = Polynomial([1, 0, -1]), Polynomial([0, 2]), Polynomial([1, 0, 1])
    total = Polynomial([0])
    for (a, b), coeff in v.terms.items():
        total = total + coeff.real * cosine ** a * sine ** b * weight ** (3 - a - b)
    return total


def orientation_distance(design: DesignParams, x0: float, y0: float, zeta0: float, tol: float = 1e-9) -> float:
    """
    Angular distance to the nearest singular orientation at a fixed position.

    Args:
        design (DesignParams): Anchor geometry.
        x0, y0 (float): Fixed platform position.
        zeta0 (float): Current orientation.
        tol (float): Relative tolerance for real roots and for z = pi.

    Returns:
        float: Shorter-arc distance in [0, pi].
    """
    numerator = orientation_polynomial(design, x0, y0)
    coefficients = numerator.coef
    scale = max(float(np.max(np.abs(coefficients))), 1e-300)
    if np.all(np.abs(coefficients) <= tol * scale) or not np.any(coefficients):
        return 0.0
    trimmed = numerator.trim(tol * scale)
    angles = [
        2 * math.atan(root.real)
        for root in trimmed.roots()
        if abs(root.imag) <= 1e-8 * (1 + abs(root))
    ]
    # t = tan(z/2) misses z = pi, where the leading coefficient vanishes
    if len(coefficients) < 7 or abs(coefficients[-1]) <= tol * scale:
        angles.append(math.pi)
    if not angles:
        raise EmptyLocus("no singular orientation at this position")
    gaps = [abs(math.remainder(zeta0 - angle, 2 * math.pi)) for angle in angles]
    return min(gaps)


def position_distance(design: DesignParams, x0: float, y0: float, zeta0: float,
                      settings: TrackerSettings | None = None, seed: int = 0) -> float:
    """
    Distance to the singularity locus of the position workspace at fixed orientation.

    Critical points of (x - x0)^2 + (y - y0)^2 + lam V(x, y) are found by a
    total-degree homotopy.

    Args:
        design (DesignParams): Anchor geometry.
        x0, y0 (float): Current position.
        zeta0 (float): Fixed orientation.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int): Seed of the detour constant.

    Returns:
        float: sqrt of the minimal squared distance.

    Raises:
        EmptyLocus: No real critical point exists.
    """
    ring = PolynomialRing(("x", "y", "lam"))
    x, y, lam = ring.vars("x", "y", "lam")
    base = [tuple(map(float, p)) for p in design.base_points()]
    v = singularity_polynomial(base + _platform_points(design, math.cos(zeta0), math.sin(zeta0), x, y))
    if v.evaluate({"x": x0, "y": y0}) == 0:
        return 0.0
    lagrangian = (x - x0) ** 2 + (y - y0) ** 2 + lam * v
    system = ParameterizedSystem(
        [differentiate(lagrangian, "x"), differentiate(lagrangian, "y"), v], ("x", "y", "lam")
    )
    solutions = total_degree_solve(system, (), settings, seed)
    real = filter_real(solutions, system.compile())
    if not len(real):
        raise EmptyLocus("the fixed-orientation singularity locus has no real point")
    return float(min(math.hypot(p[0].real - x0, p[1].real - y0) for p in real.points))


def _guarded(fn, *args, default=math.nan):
    try:
        return fn(*args)
    except (ZeroLegLength, SingularPose, EmptyLocus, np.linalg.LinAlgError) as exc:
        logger.warning("%s undefined: %s", fn.__name__, exc)
        return default


def kpi_vector(design: DesignParams, motion: MotionSpec, phi: float, settings: TrackerSettings | None = None,
               seed: int = 0) -> KpiVector:
    """All indices at pose phi; undefined indices are NaN with a logged warning."""
    K = pose_config(design, motion, phi)
    x0, y0 = motion.translation(phi)
    zeta0 = motion.angle(phi)
    m, v_raw = _guarded(manipulability, K, default=(math.nan, math.nan))
    transmission = _guarded(transmission_indices, K, default=(0.0, 0.0, 0.0, 0.0))
    cn, mcn = _guarded(control_numbers, K, default=(0.0, 0.0))
    return KpiVector(
        M=m,
        V_raw=v_raw,
        IR=_guarded(incircle_radius, K),
        TI=transmission[0],
        MTI=transmission[1],
        DS=transmission[2],
        MDS=transmission[3],
        CN=cn,
        MCN=mcn,
        orientation_dist=_guarded(orientation_distance, design, x0, y0, zeta0),
        position_dist=_guarded(position_distance, design, x0, y0, zeta0, settings, seed),
    )


def kpi_frame(design: DesignParams, motion: MotionSpec, settings: TrackerSettings | None = None,
              seed: int = 0, workers: int = 1) -> pd.DataFrame:
    """
    Indices over the motion's poses, one row per pose.

    Args:
        design (DesignParams): Anchor geometry.
        motion (MotionSpec): Motion.
        settings (TrackerSettings, optional): Tracker configuration.
        seed (int): Seed of the position-workspace solves.
        workers (int): Parallel jobs, one task per pose.

    Returns:
        pandas.DataFrame: Columns phi then every KpiVector field.
    """
    phis = motion.poses()
    vectors = Parallel(n_jobs=workers)(delayed(kpi_vector)(design, motion, phi, settings, seed) for phi in phis)
    frame = pd.DataFrame([asdict(v) for v in vectors])
    frame.insert(0, "phi", phis)
    return frame
