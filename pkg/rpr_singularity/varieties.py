"""
Constraint polynomials on configurations.

Covers the singularity variety V (Plücker dependence of the three leg
carrier lines), the collinearity determinants of the base and platform
triples, the length side conditions of rigid bodies, the point-based
placement of the third anchor of a rigid triangle and the cleared forms
F1..F4 of that placement. Like :mod:`rpr_singularity.metrics`, the builders
are generic over numbers and MultiPoly coordinates.
"""

from __future__ import annotations

import functools
from enum import Enum
from typing import Sequence

import numpy as np

from .model import Configuration, DesignParams
from .polynomials import PolynomialRing, _TermTable, differentiate

COORDINATE_NAMES = tuple(f"{axis}{i}" for i in range(1, 7) for axis in ("c", "d"))


class ArityMismatch(ValueError):
    """Raised when a constraint is evaluated on a configuration of the wrong size."""


class DegenerateDesign(ValueError):
    """Raised when a point-based placement needs a vanishing base length."""


class ConstraintKind(Enum):
    V = "V"
    CB = "CB"
    CP = "CP"
    EB = "EB"
    EP = "EP"
    F1 = "F1"
    F2 = "F2"
    F3 = "F3"
    F4 = "F4"
    LEG_1 = "C1"
    LEG_2 = "C2"
    LEG_3 = "C3"

    @classmethod
    def leg(cls, i: int) -> "ConstraintKind":
        if i not in (1, 2, 3):
            raise ValueError(f"leg index must be 1, 2 or 3, got {i}")
        return (cls.LEG_1, cls.LEG_2, cls.LEG_3)[i - 1]

    @property
    def leg_index(self) -> int | None:
        return {"C1": 1, "C2": 2, "C3": 3}.get(self.value)


def _points(config):
    return config.points if isinstance(config, Configuration) else config


def _det3(m):
    (a1, a2, a3), (b1, b2, b3), (c1, c2, c3) = m
    return a1 * (b2 * c3 - b3 * c2) - a2 * (b1 * c3 - b3 * c1) + a3 * (b1 * c2 - b2 * c1)


def leg_line(base_point, platform_point):
    """Planar Plücker coordinates (direction x, direction y, moment) of a leg."""
    dx = platform_point[0] - base_point[0]
    dy = platform_point[1] - base_point[1]
    return dx, dy, base_point[0] * dy - base_point[1] * dx


def singularity_polynomial(points: Sequence):
    """
    V: determinant whose columns are the Plücker coordinates of legs 14, 25, 36.

    Args:
        points (Sequence): At least six anchor points k1..k6.

    Returns:
        V, numeric or symbolic (degree 4 in the coordinates).
    """
    columns = [leg_line(points[i], points[i + 3]) for i in range(3)]
    return _det3([[col[row] for col in columns] for row in range(3)])


def collinearity_polynomial(p, q, r):
    """det [[1, 1, 1], [px, qx, rx], [py, qy, ry]]; zero iff p, q, r are collinear."""
    return (q[0] * r[1] - r[0] * q[1]) - (p[0] * r[1] - r[0] * p[1]) + (p[0] * q[1] - q[0] * p[1])


def length_condition(p, q, length2):
    """|q - p|^2 - length2."""
    dx, dy = q[0] - p[0], q[1] - p[1]
    return dx * dx + dy * dy - length2


def placed_point(first, second, ratio, skew):
    """
    Third anchor of a rigid triangle from its first two anchors.

    With ratio = x3/x2 and skew = y3/x2 this is first + ratio (second - first)
    + skew J (second - first), J the quarter turn.
    """
    ex, ey = second[0] - first[0], second[1] - first[1]
    return (first[0] + ratio * ex - skew * ey, first[1] + ratio * ey + skew * ex)


def eval_variety(kind: ConstraintKind, K_prime, design: DesignParams | None = None):
    """
    Evaluate a constraint determinant (or F-form) on a configuration.

    Args:
        kind (ConstraintKind): V, CB, CP, F1..F4 or a 3-RRR leg condition.
        K_prime: Configuration or point sequence.
        design (DesignParams, optional): Needed for F1..F4.

    Returns:
        The constraint value.
    """
    pts = _points(K_prime)
    arity = len(pts)
    leg = kind.leg_index
    if leg is not None:
        if arity != 9:
            raise ArityMismatch(f"{kind.value} needs a nine-point configuration")
        return collinearity_polynomial(pts[leg + 5], pts[leg - 1], pts[leg + 2])
    if arity not in (6, 9):
        raise ArityMismatch(f"unexpected configuration size {arity}")
    if kind is ConstraintKind.V:
        return singularity_polynomial(pts)
    if kind is ConstraintKind.CB:
        return collinearity_polynomial(pts[0], pts[1], pts[2])
    if kind is ConstraintKind.CP:
        return collinearity_polynomial(pts[3], pts[4], pts[5])
    if kind in (ConstraintKind.F1, ConstraintKind.F2, ConstraintKind.F3, ConstraintKind.F4):
        if design is None:
            raise ValueError(f"{kind.value} needs the design parameters")
        return f_form(kind, pts, design)
    raise ValueError(f"{kind.value} is a side condition; use eval_side_condition")


def f_form(kind: ConstraintKind, points: Sequence, design: DesignParams):
    """Cleared point-based forms F1, F2 (base) and F3, F4 (platform)."""
    if kind in (ConstraintKind.F1, ConstraintKind.F2):
        (c1, d1), (c2, d2), (c3, d3) = points[0], points[1], points[2]
        a, b, e = design.x2, design.x3, design.y3
    else:
        (c1, d1), (c2, d2), (c3, d3) = points[3], points[4], points[5]
        a, b, e = design.x5, design.x6, design.y6
    if kind in (ConstraintKind.F1, ConstraintKind.F3):
        return (c2 - c1) * b + (d1 - d2) * e + (c1 - c3) * a
    return (d2 - d1) * b + (c2 - c1) * e + (d1 - d3) * a


def eval_side_condition(kind: ConstraintKind, K, K_prime, design: DesignParams | None = None):
    """
    Change of the squared first edge of the base (EB) or platform (EP).

    Args:
        kind (ConstraintKind): EB or EP.
        K: Reference configuration.
        K_prime: Compared configuration.
        design (DesignParams, optional): When given, EP uses |p5 - p4|^2 = x5^2.

    Returns:
        |k'2 - k'1|^2 - |k2 - k1|^2, or the platform analogue.
    """
    ref, pts = _points(K), _points(K_prime)
    if kind is ConstraintKind.EB:
        return length_condition(pts[0], pts[1], length_condition(ref[0], ref[1], 0))
    if kind is ConstraintKind.EP:
        ref_length2 = design.x5 ** 2 if design is not None else length_condition(ref[3], ref[4], 0)
        return length_condition(pts[3], pts[4], ref_length2)
    raise ValueError(f"{kind.value} is not a side condition")


def pbr_substitute(kind: str, design: DesignParams, free_points) -> Configuration:
    """
    Complete a configuration by placing k'3 (base) or k'6 (platform).

    Args:
        kind (str): ``"base"`` or ``"platform"``.
        design (DesignParams): Shape of the rigid triangle.
        free_points: Configuration whose k'1, k'2 (or k'4, k'5) are used.

    Returns:
        Configuration: Copy with the third anchor recomputed.
    """
    pts = np.array(_points(free_points))
    if kind == "base":
        if design.x2 == 0:
            raise DegenerateDesign("x2 vanishes; relabel the design first")
        pts[2] = placed_point(pts[0], pts[1], design.x3 / design.x2, design.y3 / design.x2)
    elif kind == "platform":
        if design.x5 == 0:
            raise DegenerateDesign("x5 vanishes; relabel the design first")
        pts[5] = placed_point(pts[3], pts[4], design.x6 / design.x5, design.y6 / design.x5)
    else:
        raise ValueError(f"kind must be 'base' or 'platform', got {kind!r}")
    return Configuration(pts)


@functools.lru_cache(maxsize=None)
def _singularity_gradient_table():
    ring = PolynomialRing(COORDINATE_NAMES)
    gens = ring.vars(*COORDINATE_NAMES)
    points = [(gens[2 * i], gens[2 * i + 1]) for i in range(6)]
    v = singularity_polynomial(points)
    return _TermTable([differentiate(v, name) for name in COORDINATE_NAMES])


def singularity_gradient(K_prime) -> np.ndarray:
    """Gradient of V with respect to c1, d1, ..., c6, d6."""
    values = np.asarray(_points(K_prime))[:6].ravel().astype(complex)
    return _singularity_gradient_table()(values)


def scaled_gradient_norm(K_prime) -> float:
    """
    |grad V| divided by the cube of the configuration's coordinate magnitude.

    V has degree 4, so this ratio is invariant under uniform scaling.
    """
    pts = np.asarray(_points(K_prime))[:6]
    scale = max(float(np.max(np.abs(pts))), 1e-300)
    return float(np.linalg.norm(singularity_gradient(K_prime))) / scale ** 3
