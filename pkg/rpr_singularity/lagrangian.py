"""
Critical-point systems of the closest-singularity problems.

Every branch of the case analysis becomes a :class:`CriticalSystem`: the
gradient of a Lagrangian L = D^2 + sum(multiplier * constraint) with respect
to the coordinate unknowns, followed by the constraints themselves. The
systems are parameterized by the reference configuration (``kx_i``, ``ky_i``),
the lifted squared lengths of rigid sides (``lb2``, ``lp2``) and shape ratios
of rigid triangles. The first two groups enter affinely, which is what the
parameter-reversal seeding of :mod:`rpr_singularity.homotopy` relies on.

The module also holds the branches that need no continuation: pedal points
on the regression line and the pose-independent collinearity distances.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .metrics import extrinsic_dist2, rrr_dist2
from .model import Body, Configuration, DesignParams, Interpretation
from .polynomials import (
    MultiPoly,
    ParameterizedSystem,
    PolynomialRing,
    _TermTable,
    differentiate,
)
from .varieties import (
    DegenerateDesign,
    collinearity_polynomial,
    length_condition,
    placed_point,
    singularity_polynomial,
)

logger = logging.getLogger(__name__)


class IncompatibleBranch(ValueError):
    """Raised when a branch does not exist for the requested interpretation."""


class BranchKind(Enum):
    SING_VARIETY = "sing_variety"
    COLLINEARITY_P = "collinearity_p"
    COLLINEARITY_B = "collinearity_b"
    SING_POINT_CASE1 = "sing_point_case1"
    COLLAPSED_P = "collapsed_p"
    COLLAPSED_B = "collapsed_b"
    PRELIMINARY = "preliminary"
    RRR_PARALLEL = "rrr_parallel"
    RRR_LEG_1 = "rrr_leg_1"
    RRR_LEG_2 = "rrr_leg_2"
    RRR_LEG_3 = "rrr_leg_3"

    @classmethod
    def rrr_leg(cls, i: int) -> "BranchKind":
        return (cls.RRR_LEG_1, cls.RRR_LEG_2, cls.RRR_LEG_3)[i - 1]

    @property
    def is_rrr(self) -> bool:
        return self.value.startswith("rrr")


SING_VARIETY_COUNTS = {2: 88, 1: 80, 0: 50}


class PolynomialMap:
    """Evaluates a list of polynomials at values given for named variables."""

    def __init__(self, polys: Sequence[MultiPoly], variables: Sequence[str]):
        ring = polys[0].ring
        self._n = len(ring)
        self._slots = np.array([ring.index(name) for name in variables], dtype=np.intp)
        self._table = _TermTable(polys)

    def __call__(self, values) -> np.ndarray:
        full = np.zeros(self._n, dtype=complex)
        full[self._slots] = values
        return self._table(full)


@dataclass(frozen=True, eq=False)
class CriticalSystem:
    """
    A Lagrangian critical-point system with its bookkeeping.

    Attributes:
        key (str): Stable identifier, also the cache file stem.
        interpretation (Interpretation | None): None for 3-RRR branches.
        branch (BranchKind): Branch of the case analysis.
        system (ParameterizedSystem): Gradient equations then constraints.
        coordinates (tuple[str, ...]): Non-multiplier unknowns.
        multipliers (tuple[str, ...]): Multiplier unknowns, one per constraint.
        constraints (tuple[MultiPoly, ...]): Constraint polynomials.
        lifted (tuple[str | None, ...]): Lifted length closing each constraint, if any.
        reference (tuple[str, ...]): Reference-coordinate parameters.
        shape (tuple[str, ...]): Non-affine shape parameters.
        placement (tuple[MultiPoly, ...]): Flat anchor coordinates of K'.
        objective (MultiPoly): Squared distance D^2.
        expected_count (int | None): Generic number of finite solutions.
        variant (int): Orientation sign of the rigid-rigid collinear case.
    """

    key: str
    interpretation: Interpretation | None
    branch: BranchKind
    system: ParameterizedSystem
    coordinates: tuple
    multipliers: tuple
    constraints: tuple
    lifted: tuple
    reference: tuple
    shape: tuple
    placement: tuple
    objective: MultiPoly
    expected_count: int | None
    variant: int = 0

    @property
    def unknowns(self) -> tuple:
        return self.system.unknowns

    @property
    def parameters(self) -> tuple:
        return self.system.parameters

    @property
    def affine_parameters(self) -> tuple:
        return self.reference + tuple(name for name in self.lifted if name)

    @functools.cached_property
    def compiled(self):
        return self.system.compile()

    @functools.cached_property
    def _placement_map(self) -> PolynomialMap:
        return PolynomialMap(self.placement, self.unknowns + self.parameters)

    @functools.cached_property
    def _constraint_map(self) -> PolynomialMap:
        return PolynomialMap(self.constraints, self.unknowns + self.parameters)

    def parameter_vector(self, values: Mapping[str, complex]) -> np.ndarray:
        return np.array([values[name] for name in self.parameters], dtype=complex)

    def configuration(self, x, p) -> Configuration:
        """Anchor points of K' at a solution x for parameters p."""
        flat = self._placement_map(np.concatenate([np.asarray(x), np.asarray(p)]))
        if np.all(np.isreal(x)) and np.all(np.isreal(p)):
            flat = flat.real
        return Configuration(flat.reshape(-1, 2))

    def constraint_values(self, x, p) -> np.ndarray:
        return self._constraint_map(np.concatenate([np.asarray(x), np.asarray(p)]))

    def dump(self) -> str:
        return f"# {self.key}\n" + self.system.dump()


def _reference_names(count: int) -> tuple:
    return tuple(f"k{axis}{i}" for i in range(1, count + 1) for axis in ("x", "y"))


def _coordinate_names(indices) -> list:
    return [f"{axis}{i}" for i in indices for axis in ("c", "d")]


def _assemble(
    key, interp, branch, coords, multipliers, constraints, lifted, reference, shape,
    ring, points, objective, expected, variant=0,
) -> CriticalSystem:
    lagrangian = objective
    for name, constraint in zip(multipliers, constraints):
        lagrangian = lagrangian + ring.var(name) * constraint
    equations = [differentiate(lagrangian, name) for name in coords] + list(constraints)
    system = ParameterizedSystem(
        equations, tuple(coords) + tuple(multipliers), tuple(reference) + tuple(n for n in lifted if n) + tuple(shape)
    )
    placement = tuple(c if isinstance(c, MultiPoly) else ring.constant(c) for pt in points for c in pt)
    return CriticalSystem(
        key=key,
        interpretation=interp,
        branch=branch,
        system=system,
        coordinates=tuple(coords),
        multipliers=tuple(multipliers),
        constraints=tuple(constraints),
        lifted=tuple(lifted),
        reference=tuple(reference),
        shape=tuple(shape),
        placement=placement,
        objective=objective,
        expected_count=expected,
        variant=variant,
    )


def _check_compatible(interp: Interpretation | None, branch: BranchKind, variant: int):
    if branch.is_rrr:
        return
    if interp is None:
        raise IncompatibleBranch(f"{branch.value} needs an interpretation")
    if interp.is_preliminary != (branch is BranchKind.PRELIMINARY):
        raise IncompatibleBranch(f"{branch.value} does not apply to {interp.label}")
    platform, base = interp.platform, interp.base
    rules = {
        BranchKind.COLLINEARITY_P: platform is Body.TRIANGLE,
        BranchKind.COLLINEARITY_B: base is Body.TRIANGLE,
        BranchKind.SING_POINT_CASE1: platform in (Body.PLATE, Body.RIGID)
        and base in (Body.PLATE, Body.RIGID),
        BranchKind.COLLAPSED_P: platform is Body.TRIANGLE and base is Body.RIGID,
        BranchKind.COLLAPSED_B: base is Body.TRIANGLE and platform is Body.RIGID,
    }
    if not rules.get(branch, True):
        raise IncompatibleBranch(f"{branch.value} does not apply to {interp.label}")
    needs_variant = (
        branch is BranchKind.SING_POINT_CASE1 and platform is Body.RIGID and base is Body.RIGID
    )
    if needs_variant and variant not in (1, -1):
        raise IncompatibleBranch("the rigid-rigid collinear case needs variant +1 or -1")


def build_system(interp: Interpretation | None, branch: BranchKind, variant: int = 0) -> CriticalSystem:
    """
    Assemble the critical-point system of one branch.

    Args:
        interp (Interpretation | None): Platform/base reading; None for 3-RRR.
        branch (BranchKind): Branch to build.
        variant (int): +1 or -1 for the rigid-rigid collinear case, else 0.

    Returns:
        CriticalSystem: The square system and its rosters.

    Raises:
        IncompatibleBranch: The branch does not exist for the interpretation.
    """
    _check_compatible(interp, branch, variant)
    if branch.is_rrr:
        return _build_rrr(branch)
    if branch is BranchKind.SING_POINT_CASE1:
        return _build_case1(interp, variant)
    if branch in (BranchKind.COLLAPSED_P, BranchKind.COLLAPSED_B):
        return _build_collapsed(interp, branch)
    return _build_anchor_system(interp, branch)


def _build_anchor_system(interp: Interpretation, branch: BranchKind) -> CriticalSystem:
    base_rigid = interp.base is Body.RIGID
    platform_rigid = interp.platform is Body.RIGID
    coords = _coordinate_names((1, 2) if base_rigid else (1, 2, 3))
    coords += _coordinate_names((4, 5) if platform_rigid else (4, 5, 6))
    multipliers = ["lam"] + (["mu"] if base_rigid else []) + (["kappa"] if platform_rigid else [])
    lifted = [None] + (["lb2"] if base_rigid else []) + (["lp2"] if platform_rigid else [])
    shape = (["rb", "sb"] if base_rigid else []) + (["rp", "sp"] if platform_rigid else [])
    reference = _reference_names(6)
    ring = PolynomialRing(coords + multipliers + list(reference) + [n for n in lifted if n] + shape)
    g = {name: ring.var(name) for name in ring.names}

    points = [(g.get(f"c{i}"), g.get(f"d{i}")) for i in range(1, 7)]
    if base_rigid:
        points[2] = placed_point(points[0], points[1], g["rb"], g["sb"])
    if platform_rigid:
        points[5] = placed_point(points[3], points[4], g["rp"], g["sp"])
    ref = [(g[f"kx{i}"], g[f"ky{i}"]) for i in range(1, 7)]

    if branch in (BranchKind.SING_VARIETY, BranchKind.PRELIMINARY):
        main = singularity_polynomial(points)
    elif branch is BranchKind.COLLINEARITY_P:
        main = collinearity_polynomial(points[3], points[4], points[5])
    else:
        main = collinearity_polynomial(points[0], points[1], points[2])
    constraints = [main]
    if base_rigid:
        constraints.append(length_condition(points[0], points[1], g["lb2"]))
    if platform_rigid:
        constraints.append(length_condition(points[3], points[4], g["lp2"]))

    rigid_sides = int(base_rigid) + int(platform_rigid)
    if branch is BranchKind.PRELIMINARY:
        expected = None
    elif branch is BranchKind.SING_VARIETY:
        expected = SING_VARIETY_COUNTS[rigid_sides]
    else:
        expected = 8 if rigid_sides else 2
    return _assemble(
        f"{interp.label}/{branch.value}", interp, branch, coords, multipliers, constraints,
        lifted, reference, shape, ring, points, extrinsic_dist2(interp, ref, points), expected,
    )


def _build_case1(interp: Interpretation, variant: int) -> CriticalSystem:
    base_rigid = interp.base is Body.RIGID
    platform_rigid = interp.platform is Body.RIGID
    coords = ["a", "b"]
    coords += [] if base_rigid else ["delta1", "delta2"]
    coords += ["delta3"] + ([] if platform_rigid else ["delta4", "delta5"])
    coords += ["e0", "e1"]
    shape = (["ub2", "ub3"] if base_rigid else []) + (["up5", "up6"] if platform_rigid else [])
    reference = _reference_names(6)
    ring = PolynomialRing(coords + ["lam"] + list(reference) + shape)
    g = {name: ring.var(name) for name in ring.names}

    d3 = g["delta3"]
    if base_rigid:
        deltas = [g["ub2"], g["ub3"], d3]
    else:
        deltas = [g["delta1"], g["delta2"], d3]
    if platform_rigid:
        deltas += [d3 + variant * g["up5"], d3 + variant * g["up6"]]
    else:
        deltas += [g["delta4"], g["delta5"]]
    e0, e1 = g["e0"], g["e1"]
    direction = (e0 * e0 - e1 * e1, 2 * e0 * e1)
    origin = (g["a"], g["b"])
    points = [origin] + [
        (origin[0] + delta * direction[0], origin[1] + delta * direction[1]) for delta in deltas
    ]
    ref = [(g[f"kx{i}"], g[f"ky{i}"]) for i in range(1, 7)]
    normalization = e0 * e0 + e1 * e1 - 1

    key = f"{interp.label}/{BranchKind.SING_POINT_CASE1.value}"
    if variant:
        key += "+" if variant > 0 else "-"
    return _assemble(
        key, interp, BranchKind.SING_POINT_CASE1, coords, ["lam"], [normalization], [None],
        reference, shape, ring, points, extrinsic_dist2(interp, ref, points), 8, variant,
    )


def _build_collapsed(interp: Interpretation, branch: BranchKind) -> CriticalSystem:
    reference = _reference_names(6)
    if branch is BranchKind.COLLAPSED_P:
        coords = _coordinate_names((1, 2)) + ["c", "d"]
        multipliers, lifted, shape = ["mu"], ["lb2"], ["rb", "sb"]
    else:
        coords = ["c", "d"] + _coordinate_names((4, 5))
        multipliers, lifted, shape = ["kappa"], ["lp2"], ["rp", "sp"]
    ring = PolynomialRing(coords + multipliers + list(reference) + lifted + shape)
    g = {name: ring.var(name) for name in ring.names}
    point = (g["c"], g["d"])
    if branch is BranchKind.COLLAPSED_P:
        first, second = (g["c1"], g["d1"]), (g["c2"], g["d2"])
        points = [first, second, placed_point(first, second, g["rb"], g["sb"])] + [point] * 3
        constraint = length_condition(first, second, g["lb2"])
    else:
        first, second = (g["c4"], g["d4"]), (g["c5"], g["d5"])
        points = [point] * 3 + [first, second, placed_point(first, second, g["rp"], g["sp"])]
        constraint = length_condition(first, second, g["lp2"])
    ref = [(g[f"kx{i}"], g[f"ky{i}"]) for i in range(1, 7)]
    return _assemble(
        f"{interp.label}/{branch.value}", interp, branch, coords, multipliers, [constraint],
        lifted, reference, shape, ring, points, extrinsic_dist2(interp, ref, points), 2,
    )


def _build_rrr(branch: BranchKind) -> CriticalSystem:
    coords = _coordinate_names(range(1, 10))
    reference = _reference_names(9)
    ring = PolynomialRing(coords + ["lam"] + list(reference))
    g = {name: ring.var(name) for name in ring.names}
    points = [(g[f"c{i}"], g[f"d{i}"]) for i in range(1, 10)]
    ref = [(g[f"kx{i}"], g[f"ky{i}"]) for i in range(1, 10)]
    if branch is BranchKind.RRR_PARALLEL:
        constraint, expected = singularity_polynomial(points), 50
    else:
        leg = int(branch.value[-1])
        constraint = collinearity_polynomial(points[leg + 5], points[leg - 1], points[leg + 2])
        expected = None
    return _assemble(
        f"rrr/{branch.value}", None, branch, coords, ["lam"], [constraint], [None],
        reference, [], ring, points, rrr_dist2(ref, points), expected,
    )


def parameter_values(critical: CriticalSystem, K: Configuration, design: DesignParams | None = None) -> dict:
    """
    Parameter assignment of a system for a reference configuration.

    Args:
        critical (CriticalSystem): System whose parameters are assigned.
        K (Configuration): Reference configuration (possibly complex).
        design (DesignParams, optional): Shape of rigid sides; required when
            the system has lifted or shape parameters.

    Returns:
        dict: Parameter name -> value.

    Raises:
        DegenerateDesign: A rigid side needs x2 or x5 and the design is not canonical.
    """
    values = {}
    for i in range(1, len(K) + 1):
        values[f"kx{i}"], values[f"ky{i}"] = K.point(i)
    if design is not None:
        values.update(
            lb2=design.x2 ** 2,
            lp2=design.x5 ** 2,
            ub2=design.x2,
            ub3=design.x3,
            up5=design.x5,
            up6=design.x6,
        )
        if design.x2:
            values.update(rb=design.x3 / design.x2, sb=design.y3 / design.x2)
        if design.x5:
            values.update(rp=design.x6 / design.x5, sp=design.y6 / design.x5)
    missing = [name for name in critical.parameters if name not in values]
    if missing:
        raise DegenerateDesign(f"no value for parameters {missing} of {critical.key}; relabel the design canonically")
    return {name: values[name] for name in critical.parameters}


def case1_feasible(interp: Interpretation, design: DesignParams, tol: float = 1e-12) -> bool:
    """Rigid sides admit the all-collinear singular point only if already collinear."""
    if interp.base is Body.RIGID and abs(design.y3) > tol * max(abs(design.x2), 1.0):
        return False
    if interp.platform is Body.RIGID and abs(design.y6) > tol * max(abs(design.x5), 1.0):
        return False
    return True


def minimize_quadratic(objective: MultiPoly, names: Sequence[str]) -> dict:
    """
    Unconstrained minimizer of a convex quadratic polynomial.

    Args:
        objective (MultiPoly): Quadratic in ``names`` (other variables absent).
        names (Sequence[str]): Free variables.

    Returns:
        dict: Variable name -> minimizing value.
    """
    system = ParameterizedSystem([differentiate(objective, n) for n in names], tuple(names))
    compiled = system.compile()
    origin = np.zeros(len(names))
    solution = np.linalg.solve(compiled.jacobian(origin), -compiled.evaluate(origin))
    if all(complex(c).imag == 0 for c in objective.terms.values()):
        solution = solution.real
    return dict(zip(names, solution))


def regression_line(points) -> tuple[np.ndarray, np.ndarray]:
    """
    Total-least-squares line of a point triple.

    Args:
        points: Three planar points.

    Returns:
        tuple: Centroid and unit direction (x-axis for isotropic scatter).
    """
    pts = np.asarray(points, dtype=float)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    eigenvalues, eigenvectors = np.linalg.eigh(centered.T @ centered)
    if math.isclose(eigenvalues[0], eigenvalues[1], rel_tol=1e-12, abs_tol=0.0):
        return centroid, np.array([1.0, 0.0])
    return centroid, eigenvectors[:, 1]


def pedal_points(points) -> np.ndarray:
    """Feet of the perpendiculars from a triple onto its regression line."""
    centroid, direction = regression_line(points)
    centered = np.asarray(points, dtype=float) - centroid
    return centroid + np.outer(centered @ direction, direction)


def _side_indices(side: str):
    if side == "platform":
        return (3, 4, 5), (0, 1, 2)
    if side == "base":
        return (0, 1, 2), (3, 4, 5)
    raise ValueError(f"side must be 'platform' or 'base', got {side!r}")


def _minimize_other_side(interp: Interpretation, K: Configuration, fixed: dict, free: Sequence[int]):
    names = _coordinate_names([i + 1 for i in free])
    ring = PolynomialRing(names)
    points = [(float(x), float(y)) for x, y in K.points]
    moved = list(points)
    for i, pt in fixed.items():
        moved[i] = (float(pt[0]), float(pt[1]))
    for i in free:
        moved[i] = ring.vars(f"c{i + 1}", f"d{i + 1}")
    values = minimize_quadratic(extrinsic_dist2(interp, points, moved), names)
    result = np.array(points)
    for i, pt in fixed.items():
        result[i] = pt
    for i in free:
        result[i] = (values[f"c{i + 1}"], values[f"d{i + 1}"])
    return Configuration(result)


def pedal_projection(K: Configuration, interp: Interpretation | None = None, side: str = "platform") -> Configuration:
    """
    Closest configuration with a collinear bar-triangle side.

    The triangle's anchors go to their pedal points on its regression line;
    the anchors of the opposite (plate or bar-triangle) side are then placed
    at the minimizer of the remaining quadratic.

    Args:
        K (Configuration): Real 3-RPR configuration.
        interp (Interpretation, optional): Defaults to bar triangles on both sides.
        side (str): ``"platform"`` or ``"base"``, the side made collinear.

    Returns:
        Configuration: The minimizer K'.
    """
    interp = interp or Interpretation(Body.TRIANGLE, Body.TRIANGLE)
    collinear, other = _side_indices(side)
    body = interp.platform if side == "platform" else interp.base
    other_body = interp.base if side == "platform" else interp.platform
    if body is not Body.TRIANGLE or other_body not in (Body.PLATE, Body.TRIANGLE):
        raise IncompatibleBranch(f"no closed-form collinearity minimizer for {interp.label} on the {side}")
    projected = pedal_points(np.asarray(K.points, dtype=float)[list(collinear)])
    return _minimize_other_side(interp, K, dict(zip(collinear, projected)), other)


def collinearity_discriminants(a: float, b: float, e: float) -> tuple[float, float]:
    """
    The quantities s and eta of a triangle (0, 0), (a, 0), (b, e).

    Returns:
        tuple: s = a^2 - ab + b^2 + e^2 and its discriminant eta.
    """
    s = a * a - a * b + b * b + e * e
    eta = (
        a ** 4 - 2 * a ** 3 * b + 3 * a * a * b * b - a * a * e * e - 2 * a * b ** 3
        - 2 * a * b * e * e + b ** 4 + 2 * b * b * e * e + e ** 4
    )
    return s, eta


def pose_independent_distance(interp: Interpretation, design: DesignParams, side: str | None = None) -> float:
    """
    Distance to the collinearity variety of a bar-triangle side.

    Only defined when the opposite side is a plate or a bar triangle; then the
    distance depends on the design alone.

    Args:
        interp (Interpretation): Reading with a bar-triangle side.
        design (DesignParams): Anchor geometry.
        side (str, optional): ``"platform"`` or ``"base"``; inferred when omitted.

    Returns:
        float: The distance (not squared).
    """
    if side is None:
        side = "platform" if interp.platform is Body.TRIANGLE else "base"
    body = interp.platform if side == "platform" else interp.base
    other = interp.base if side == "platform" else interp.platform
    if body is not Body.TRIANGLE or other not in (Body.PLATE, Body.TRIANGLE):
        raise IncompatibleBranch(f"{interp.label} has no pose-independent {side} distance")
    a, b, e = (design.x5, design.x6, design.y6) if side == "platform" else (design.x2, design.x3, design.y3)
    factor = 4 / 135 if other is Body.TRIANGLE else 23 / 630
    s, eta = collinearity_discriminants(a, b, e)
    root = math.sqrt(max(eta, 0.0))
    # s - root == 3 a^2 e^2 / (s + root), the smaller of the two branches
    branches = (s + root, 3 * a * a * e * e / (s + root) if s + root else 0.0)
    return math.sqrt(factor * min(branches))


def collapsed_distance(interp: Interpretation, K: Configuration, side: str = "platform") -> tuple[float, Configuration]:
    """
    Closest configuration whose bar-triangle side degenerates to one point.

    Closed form for a plate or bar-triangle opposite side; rigid opposite
    sides go through the COLLAPSED_P/COLLAPSED_B systems instead.

    Args:
        interp (Interpretation): Reading with a bar-triangle ``side``.
        K (Configuration): Real reference configuration.
        side (str): Collapsing side.

    Returns:
        tuple: Distance and minimizer.
    """
    collapsed, other = _side_indices(side)
    body = interp.platform if side == "platform" else interp.base
    other_body = interp.base if side == "platform" else interp.platform
    if body is not Body.TRIANGLE or other_body not in (Body.PLATE, Body.TRIANGLE):
        raise IncompatibleBranch(f"no closed-form collapsed minimizer for {interp.label} on the {side}")
    names = ["c", "d"] + _coordinate_names([i + 1 for i in other])
    ring = PolynomialRing(names)
    moved = [None] * 6
    point = ring.vars("c", "d")
    for i in collapsed:
        moved[i] = point
    for i in other:
        moved[i] = ring.vars(f"c{i + 1}", f"d{i + 1}")
    reference = [(float(x), float(y)) for x, y in K.points]
    values = minimize_quadratic(extrinsic_dist2(interp, reference, moved), names)
    result = np.empty((6, 2))
    for i in collapsed:
        result[i] = (values["c"], values["d"])
    for i in other:
        result[i] = (values[f"c{i + 1}"], values[f"d{i + 1}"])
    minimizer = Configuration(result)
    return math.sqrt(max(float(np.real(extrinsic_dist2(interp, K, minimizer))), 0.0)), minimizer
