"""
Manipulator geometry, interpretations and one-parametric motions.

Base anchors sit at k1 = (0, 0), k2 = (x2, 0), k3 = (x3, y3) in the fixed
frame and platform anchors at p4 = (0, 0), p5 = (x5, 0), p6 = (x6, y6) in the
moving frame. A pose phi places the platform at k_j = R(phi) p_j + t(phi).
Every value here is immutable so it can be shipped to worker processes as is.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence, Union

import numpy as np

Pose = Union[float, complex]


class ArchitectureSingular(ValueError):
    """Raised when the base or the platform collapses to a single point."""


class InvalidMotion(ValueError):
    """Raised for an empty pose interval or fewer than two samples."""


class UnreachablePose(ValueError):
    """Raised when a 3-RRR leg cannot reach its platform anchor at a real pose."""


class Body(Enum):
    """Structural reading of a triangle of anchors."""

    PLATE = "plate"
    TRIANGLE = "triangle"
    RIGID = "rigid"

    @property
    def symbol(self) -> str:
        return {"plate": "▲", "triangle": "△", "rigid": "▭"}[self.value]

    @property
    def affine(self) -> bool:
        return self is not Body.RIGID


@dataclass(frozen=True)
class Interpretation:
    """
    Design-option pair (platform, base), or the point-pair preliminary variant.

    Attributes:
        platform (Body | None): Reading of the platform; None for preliminary.
        base (Body | None): Reading of the base; None for preliminary.
    """

    platform: Body | None
    base: Body | None

    def __post_init__(self):
        if (self.platform is None) != (self.base is None):
            raise ValueError("platform and base must both be set or both be None")

    @classmethod
    def preliminary(cls) -> "Interpretation":
        return cls(None, None)

    @classmethod
    def all_nine(cls) -> tuple["Interpretation", ...]:
        return tuple(cls(platform, base) for base in Body for platform in Body)

    @classmethod
    def parse(cls, label: str) -> "Interpretation":
        """
        Parse ``platform:base`` (e.g. ``triangle:rigid``) or ``preliminary``.

        Args:
            label (str): Interpretation label.

        Returns:
            Interpretation: The parsed value.
        """
        label = label.strip().lower()
        if label == "preliminary":
            return cls.preliminary()
        try:
            platform, base = label.split(":")
            return cls(Body(platform), Body(base))
        except ValueError:
            raise ValueError(f"invalid interpretation label {label!r}") from None

    @property
    def is_preliminary(self) -> bool:
        return self.platform is None

    @property
    def label(self) -> str:
        if self.is_preliminary:
            return "preliminary"
        return f"{self.platform.value}:{self.base.value}"

    @property
    def symbol(self) -> str:
        if self.is_preliminary:
            return "D(•,•)"
        return f"D(base {self.base.symbol}, platform {self.platform.symbol})"

    def mirrored(self) -> "Interpretation":
        """Same pair with platform and base roles exchanged."""
        return Interpretation(self.base, self.platform)


@dataclass(frozen=True)
class DesignParams:
    """
    Normalized anchor geometry of a 3-RPR manipulator.

    Attributes:
        x2, x3, y3 (float): Base anchors k2 = (x2, 0), k3 = (x3, y3).
        x5, x6, y6 (float): Platform anchors p5 = (x5, 0), p6 = (x6, y6).
        legs (tuple[int, int, int]): Leg permutation applied by relabeling.
    """

    x2: float
    x3: float
    y3: float
    x5: float
    x6: float
    y6: float
    legs: tuple = (0, 1, 2)

    def __post_init__(self):
        if self.x2 == 0 and self.x3 == 0 and self.y3 == 0:
            raise ArchitectureSingular("base anchors collapse to a single point")
        if self.x5 == 0 and self.x6 == 0 and self.y6 == 0:
            raise ArchitectureSingular("platform anchors collapse to a single point")

    @classmethod
    def from_points(cls, base: Sequence, platform: Sequence, legs=(0, 1, 2)) -> "DesignParams":
        """
        Build a design from arbitrary anchor coordinates.

        Each triangle is moved so its first anchor is the origin and its
        second anchor lies on the positive x-axis.

        Args:
            base (Sequence): Three base anchors.
            platform (Sequence): Three platform anchors in any moving frame.
            legs (tuple[int, int, int]): Permutation recorded on the design.

        Returns:
            DesignParams: Normalized design.
        """
        b = _normalize_triangle(base)
        p = _normalize_triangle(platform)
        return cls(b[1, 0], b[2, 0], b[2, 1], p[1, 0], p[2, 0], p[2, 1], tuple(legs))

    def base_points(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [self.x2, 0.0], [self.x3, self.y3]])

    def platform_points(self) -> np.ndarray:
        return np.array([[0.0, 0.0], [self.x5, 0.0], [self.x6, self.y6]])

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("x2", "x3", "y3", "x5", "x6", "y6")}


def _normalize_triangle(points: Sequence) -> np.ndarray:
    pts = np.asarray(points, dtype=float).reshape(3, 2)
    rel = pts - pts[0]
    length = np.hypot(*rel[1])
    if length == 0:
        return rel
    c, s = rel[1] / length
    local = rel @ np.array([[c, -s], [s, c]])
    local[0] = 0.0
    local[1] = (length, 0.0)
    return local


def _canonical_permutation(base: np.ndarray, platform: np.ndarray) -> tuple[int, int, int]:
    if np.all(base == base[0]) or np.all(platform == platform[0]):
        raise ArchitectureSingular("base or platform collapses to a single point")
    for perm in itertools.permutations(range(3)):
        i, j = perm[0], perm[1]
        if np.any(base[i] != base[j]) and np.any(platform[i] != platform[j]):
            return perm
    raise ArchitectureSingular("no leg pair separates both bodies")


def relabel_canonical(design: DesignParams, local_points: Sequence | None = None) -> DesignParams:
    """
    Permute legs so that the first two anchors are distinct on both bodies.

    The lexicographically first valid permutation is chosen, so a design that
    already has x2 != 0 and x5 != 0 comes back unchanged.

    Args:
        design (DesignParams): Design to relabel.
        local_points (Sequence, optional): Platform anchors overriding the design's.

    Returns:
        DesignParams: Design with x2 != 0 and x5 != 0.
    """
    base = design.base_points()
    platform = design.platform_points() if local_points is None else np.asarray(local_points, float)
    perm = _canonical_permutation(base, platform)
    if perm == (0, 1, 2) and local_points is None:
        return design
    legs = tuple(design.legs[k] for k in perm)
    return DesignParams.from_points(base[list(perm)], platform[list(perm)], legs)


@dataclass(frozen=True, eq=False)
class Configuration:
    """
    Six (3-RPR) or nine (3-RRR) labeled anchor points over the reals or complexes.

    Attributes:
        points (numpy.ndarray): Array of shape (6, 2) or (9, 2).
    """

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] not in (6, 9):
            raise ValueError(f"configuration needs 6 or 9 planar points, got shape {pts.shape}")
        if np.iscomplexobj(pts) and not np.any(pts.imag):
            pts = pts.real
        pts = pts.astype(complex if np.iscomplexobj(pts) else float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_coordinates(cls, values: Sequence) -> "Configuration":
        """Build from the flat sequence c1, d1, c2, d2, ..."""
        return cls(np.asarray(values).reshape(-1, 2))

    def __len__(self) -> int:
        return self.points.shape[0]

    def point(self, i: int) -> np.ndarray:
        """Anchor k_i, 1-based."""
        return self.points[i - 1]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.points)

    def coordinates(self) -> np.ndarray:
        return self.points.ravel()

    def swapped(self) -> "Configuration":
        """3-RPR configuration with platform and base roles exchanged."""
        if len(self) != 6:
            raise ValueError("role exchange is defined for 3-RPR configurations")
        return Configuration(np.vstack([self.points[3:], self.points[:3]]))

    def transformed(self, matrix, offset=(0.0, 0.0)) -> "Configuration":
        """Image under the affine map k -> A k + a."""
        return Configuration(self.points @ np.asarray(matrix).T + np.asarray(offset))

    def allclose(self, other: "Configuration", atol: float = 1e-12) -> bool:
        return self.points.shape == other.points.shape and np.allclose(
            self.points, other.points, rtol=0, atol=atol
        )


def rotation(angle: Pose) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class MotionSpec:
    """
    One-parametric motion phi -> (R, t) sampled on [v, w].

    The rotation angle is phi itself unless ``orientation`` pins it, which
    gives the circular-translation motions used for 3-RRR studies. ``offset``
    is added to either; it appears when the frames are re-normalized.

    Attributes:
        a0, a1, b1 (tuple[float, float]): t(phi) = a0 + a1 cos(phi) + b1 sin(phi).
        v, w (float): Pose interval, v < w.
        n (int): Number of samples, n >= 2.
        orientation (float | None): Fixed rotation angle, if any.
        offset (float): Constant added to the rotation angle.
    """

    a0: tuple
    a1: tuple
    b1: tuple
    v: float
    w: float
    n: int
    orientation: float | None = None
    offset: float = 0.0

    def __post_init__(self):
        for name in ("a0", "a1", "b1"):
            vec = tuple(float(c) for c in getattr(self, name))
            if len(vec) != 2:
                raise InvalidMotion(f"{name} must have two components")
            object.__setattr__(self, name, vec)
        if int(self.n) != self.n or self.n < 2:
            raise InvalidMotion(f"need at least two poses, got n={self.n}")
        if not self.v < self.w:
            raise InvalidMotion(f"empty pose interval [{self.v}, {self.w}]")

    def angle(self, phi: Pose) -> Pose:
        return (phi if self.orientation is None else self.orientation) + self.offset

    def translation(self, phi: Pose) -> np.ndarray:
        return (
            np.asarray(self.a0)
            + np.asarray(self.a1) * np.cos(phi)
            + np.asarray(self.b1) * np.sin(phi)
        )

    def poses(self) -> np.ndarray:
        return np.linspace(self.v, self.w, int(self.n))

    def seed_pose(self, alpha: complex) -> complex:
        """Pose v - (v - w)(1 - alpha), complex for a complex alpha."""
        return self.v - (self.v - self.w) * (1 - alpha)

    def with_samples(self, n: int) -> "MotionSpec":
        return replace(self, n=n)


def pose_config(design: DesignParams, motion: MotionSpec, phi: Pose) -> Configuration:
    """
    Configuration of the manipulator at pose phi.

    Args:
        design (DesignParams): Anchor geometry.
        motion (MotionSpec): Motion providing R(phi) and t(phi).
        phi (Pose): Real or complex pose.

    Returns:
        Configuration: k1..k3 from the design, k4..k6 = R p_j + t.
    """
    platform = design.platform_points() @ rotation(motion.angle(phi)).T + motion.translation(phi)
    return Configuration(np.vstack([design.base_points(), platform]))


def _triangle_frame(points: np.ndarray) -> tuple[np.ndarray, float]:
    axis = points[1] - points[0]
    return points[0], float(np.arctan2(axis[1], axis[0]))


def canonicalize(base: Sequence, platform: Sequence, motion: MotionSpec,
                 legs=(0, 1, 2)) -> tuple[DesignParams, MotionSpec]:
    """
    Canonical design for arbitrary anchors, with the motion moved along.

    Legs are relabeled as in :func:`relabel_canonical` and both triangles
    normalized. The returned motion places the platform where the input motion
    did, seen from the normalized fixed frame, so every configuration changes
    by one rigid motion only.

    Args:
        base (Sequence): Three base anchors in the fixed frame of ``motion``.
        platform (Sequence): Three platform anchors in the moving frame of ``motion``.
        motion (MotionSpec): Motion in the input frames.
        legs (tuple[int, int, int]): Leg labels of the input order.

    Returns:
        tuple: (DesignParams, MotionSpec) in the canonical frames.
    """
    base = np.asarray(base, dtype=float).reshape(3, 2)
    platform = np.asarray(platform, dtype=float).reshape(3, 2)
    perm = list(_canonical_permutation(base, platform))
    design = DesignParams.from_points(base[perm], platform[perm], tuple(legs[k] for k in perm))
    base_origin, base_angle = _triangle_frame(base[perm])
    platform_origin, platform_angle = _triangle_frame(platform[perm])
    if not (base_origin.any() or platform_origin.any() or base_angle or platform_angle):
        return design, motion

    to_fixed = rotation(-base_angle)
    lever = rotation(motion.offset) @ platform_origin
    a0, a1, b1 = (np.asarray(v) for v in (motion.a0, motion.a1, motion.b1))
    if motion.orientation is None:
        a1, b1 = a1 + lever, b1 + rotation(np.pi / 2) @ lever
    else:
        a0 = a0 + rotation(motion.orientation) @ lever
    moved = replace(
        motion,
        a0=tuple(to_fixed @ (a0 - base_origin)),
        a1=tuple(to_fixed @ a1),
        b1=tuple(to_fixed @ b1),
        offset=motion.offset + platform_angle - base_angle,
    )
    return design, moved


@dataclass(frozen=True)
class RRRDesign:
    """
    3-RRR geometry: base joints k7..k9, platform joints p4..p6, link lengths.

    Attributes:
        base (tuple): Base joint positions k7, k8, k9.
        platform (tuple): Platform joints p4, p5, p6 in the moving frame.
        proximal (tuple[float, float, float]): Lengths |k_{i+6} - k_i|.
        distal (tuple[float, float, float]): Lengths |k_i - k_{i+3}|.
        modes (tuple[int, int, int]): Elbow branch signs (+1 or -1).
    """

    base: tuple
    platform: tuple
    proximal: tuple
    distal: tuple
    modes: tuple = (1, 1, 1)

    def __post_init__(self):
        base = np.asarray(self.base, float).reshape(3, 2)
        platform = np.asarray(self.platform, float).reshape(3, 2)
        if np.all(base == base[0]) or np.all(platform == platform[0]):
            raise ArchitectureSingular("base or platform collapses to a single point")
        if any(m not in (1, -1) for m in self.modes):
            raise ValueError("elbow modes must be +1 or -1")
        object.__setattr__(self, "base", tuple(map(tuple, base)))
        object.__setattr__(self, "platform", tuple(map(tuple, platform)))
        object.__setattr__(self, "proximal", tuple(float(x) for x in self.proximal))
        object.__setattr__(self, "distal", tuple(float(x) for x in self.distal))


def rrr_pose_config(design: RRRDesign, motion: MotionSpec, phi: Pose) -> Configuration:
    """
    Nine-point configuration of a 3-RRR manipulator.

    Elbows k1..k3 are the circle intersections selected by the design's modes.

    Args:
        design (RRRDesign): Geometry and working mode.
        motion (MotionSpec): Platform motion.
        phi (Pose): Real or complex pose.

    Returns:
        Configuration: Points k1..k9 (elbows, platform joints, base joints).

    Raises:
        UnreachablePose: A leg cannot close at a real pose.
    """
    platform = np.asarray(design.platform) @ rotation(motion.angle(phi)).T + motion.translation(phi)
    base = np.asarray(design.base)
    real = np.isrealobj(platform)
    elbows = []
    for i in range(3):
        a, b = base[i], platform[i]
        r1, r2 = design.proximal[i], design.distal[i]
        diff = b - a
        d2 = diff @ diff
        along = (r1 * r1 - r2 * r2 + d2) / (2 * d2)
        h2 = r1 * r1 / d2 - along * along
        if real and h2 < 0:
            raise UnreachablePose(f"leg {i + 1} cannot reach its platform joint at phi={phi}")
        h = np.sqrt(h2 if real else complex(h2))
        normal = np.array([-diff[1], diff[0]])
        elbows.append(a + along * diff + design.modes[i] * h * normal)
    return Configuration(np.vstack([np.array(elbows), platform, base]))
