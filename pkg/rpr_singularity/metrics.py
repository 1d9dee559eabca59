"""
Extrinsic distances between manipulator configurations.

Bars are compared by the mean squared distance of corresponding points along
the segments, plates by the same mean over the triangles. All functions only
use ``+``, ``-``, ``*`` and division by numbers, so the same code evaluates
numeric configurations and builds the symbolic objective of a Lagrangian from
tuples of :class:`~rpr_singularity.polynomials.MultiPoly`.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .model import Body, Configuration, Interpretation

LEGS = ((1, 4), (2, 5), (3, 6))
PLATFORM_BARS = ((4, 5), (4, 6), (5, 6))
BASE_BARS = ((1, 2), (2, 3), (1, 3))
PLATFORM_PLATE = (4, 5, 6)
BASE_PLATE = (1, 2, 3)
RRR_BARS = ((1, 4), (1, 7), (2, 5), (2, 8), (3, 6), (3, 9))
RRR_BASE_PLATE = (7, 8, 9)


def _points(config):
    return config.points if isinstance(config, Configuration) else config


def _delta(p, q):
    return (p[0] - q[0], p[1] - q[1])


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def segment_dist2(segment: Sequence, segment_prime: Sequence):
    """
    Squared distance between two labeled segments.

    Args:
        segment (Sequence): Endpoints (k_i, k_j).
        segment_prime (Sequence): Endpoints (k'_i, k'_j), same labels.

    Returns:
        The value (|di|^2 + |dj|^2 + di.dj) / 3 with dx = k_x - k'_x.
    """
    di = _delta(segment[0], segment_prime[0])
    dj = _delta(segment[1], segment_prime[1])
    return (_dot(di, di) + _dot(dj, dj) + _dot(di, dj)) / 3


def triangle_dist2(triangle: Sequence, triangle_prime: Sequence):
    """
    Squared distance between two labeled triangles.

    Args:
        triangle (Sequence): Vertices (k_i, k_j, k_k).
        triangle_prime (Sequence): Vertices (k'_i, k'_j, k'_k), same labels.

    Returns:
        Mean squared distance of corresponding points over the triangle.
    """
    di, dj, dk = (_delta(p, q) for p, q in zip(triangle, triangle_prime))
    squares = _dot(di, di) + _dot(dj, dj) + _dot(dk, dk)
    return (squares + _dot(di, dk) + _dot(di, dj) + _dot(dk, dj)) / 6


def _segment(points, points_prime, i, j):
    return segment_dist2((points[i - 1], points[j - 1]), (points_prime[i - 1], points_prime[j - 1]))


def _triangle(points, points_prime, labels):
    return triangle_dist2(
        tuple(points[i - 1] for i in labels), tuple(points_prime[i - 1] for i in labels)
    )


def preliminary_dist2(K, K_prime):
    """Mean squared displacement of the six anchor points."""
    points, points_prime = _points(K), _points(K_prime)
    total = 0
    for p, q in zip(points[:6], points_prime[:6]):
        d = _delta(p, q)
        total = total + _dot(d, d)
    return total / 6


def extrinsic_dist2(interp: Interpretation, K, K_prime):
    """
    Squared extrinsic distance under an interpretation.

    Legs always count as bars; the platform and base add their three bars
    (bar triangle), their plate (plate) or nothing (rigid). The sum is
    divided by the number of structural elements.

    Args:
        interp (Interpretation): Platform/base reading.
        K: Reference configuration (Configuration or point sequence).
        K_prime: Compared configuration.

    Returns:
        Squared distance, numeric or symbolic.
    """
    if interp.is_preliminary:
        return preliminary_dist2(K, K_prime)
    points, points_prime = _points(K), _points(K_prime)
    terms = [_segment(points, points_prime, i, j) for i, j in LEGS]
    for body, bars, plate in (
        (interp.platform, PLATFORM_BARS, PLATFORM_PLATE),
        (interp.base, BASE_BARS, BASE_PLATE),
    ):
        if body is Body.TRIANGLE:
            terms.extend(_segment(points, points_prime, i, j) for i, j in bars)
        elif body is Body.PLATE:
            terms.append(_triangle(points, points_prime, plate))
    return sum(terms[1:], terms[0]) / len(terms)


def rrr_dist2(K, K_prime):
    """Squared distance between two 3-RRR configurations (six bars, two plates)."""
    points, points_prime = _points(K), _points(K_prime)
    terms = [_segment(points, points_prime, i, j) for i, j in RRR_BARS]
    terms.append(_triangle(points, points_prime, RRR_BASE_PLATE))
    terms.append(_triangle(points, points_prime, PLATFORM_PLATE))
    return sum(terms[1:], terms[0]) / 8


def distance(interp: Interpretation, K: Configuration, K_prime: Configuration) -> float:
    """Reported (non-squared) extrinsic distance of two real configurations."""
    value = extrinsic_dist2(interp, K, K_prime)
    return math.sqrt(max(float(np.real(value)), 0.0))
