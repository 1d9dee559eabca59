import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from rpr_singularity.metrics import (
    distance,
    extrinsic_dist2,
    preliminary_dist2,
    rrr_dist2,
    segment_dist2,
    triangle_dist2,
)
from rpr_singularity.model import Body, Configuration, Interpretation, pose_config, rotation

from .conftest import HALF_PI, CLOSEST_DISTANCES

coordinate = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
point = st.tuples(coordinate, coordinate)
configuration = st.lists(point, min_size=6, max_size=6).map(lambda pts: Configuration(np.array(pts)))


def _sq(v):
    return float(v @ v)


@given(st.tuples(point, point), st.tuples(point, point))
@settings(max_examples=25, deadline=None)
def test_segment_distance_is_mean_over_the_segment(segment, segment_prime):
    a = np.subtract(segment[0], segment_prime[0])
    b = np.subtract(segment[1], segment_prime[1])
    expected, _ = integrate.quad(lambda t: _sq((1 - t) * a + t * b), 0, 1)
    assert segment_dist2(segment, segment_prime) == pytest.approx(expected, rel=1e-9, abs=1e-9)


@given(st.tuples(point, point, point), st.tuples(point, point, point))
@settings(max_examples=15, deadline=None)
def test_triangle_distance_is_mean_over_the_triangle(triangle, triangle_prime):
    a, b, c = (np.subtract(p, q) for p, q in zip(triangle, triangle_prime))
    # uniform density 2 on the barycentric simplex
    integral, _ = integrate.dblquad(
        lambda v, u: _sq(u * a + v * b + (1 - u - v) * c), 0, 1, 0, lambda u: 1 - u
    )
    assert triangle_dist2(triangle, triangle_prime) == pytest.approx(2 * integral, rel=1e-8, abs=1e-8)


@given(configuration, configuration, st.floats(min_value=-math.pi, max_value=math.pi), point)
@settings(max_examples=25, deadline=None)
def test_metrics_are_invariant_under_a_common_motion(K, K_prime, angle, offset):
    R = rotation(angle)
    for interp in (*Interpretation.all_nine(), Interpretation.preliminary()):
        before = extrinsic_dist2(interp, K, K_prime)
        after = extrinsic_dist2(interp, K.transformed(R, offset), K_prime.transformed(R, offset))
        assert after == pytest.approx(before, rel=1e-9, abs=1e-9)


@given(configuration)
@settings(max_examples=10, deadline=None)
def test_distance_to_itself_is_zero(K):
    for interp in Interpretation.all_nine():
        assert distance(interp, K, K) == 0.0


def test_rigid_sides_only_count_legs():
    K = Configuration(np.zeros((6, 2)))
    moved = np.zeros((6, 2))
    moved[0] = (3.0, 0.0)
    K_prime = Configuration(moved)
    rigid = Interpretation(Body.RIGID, Body.RIGID)
    # one leg endpoint moved by 3: (9 + 0 + 0) / 3 per leg, averaged over three legs
    assert extrinsic_dist2(rigid, K, K_prime) == pytest.approx(1.0)
    triangle = Interpretation(Body.RIGID, Body.TRIANGLE)
    # adds bars 12 and 13 with 3 each over six elements
    assert extrinsic_dist2(triangle, K, K_prime) == pytest.approx((3 + 3 + 3) / 6)


def test_preliminary_metric_is_mean_squared_displacement():
    K = Configuration(np.zeros((6, 2)))
    K_prime = Configuration(np.ones((6, 2)))
    assert preliminary_dist2(K, K_prime) == pytest.approx(2.0)
    assert extrinsic_dist2(Interpretation.preliminary(), K, K_prime) == pytest.approx(2.0)


def test_rrr_metric_averages_eight_elements():
    K = Configuration(np.zeros((9, 2)))
    K_prime = Configuration(np.ones((9, 2)))
    # every element moves rigidly by (1, 1): squared distance 2 each
    assert rrr_dist2(K, K_prime) == pytest.approx(2.0)


@pytest.mark.parametrize("label", sorted(CLOSEST_DISTANCES))
def test_closest_singular_configurations_at_half_turn(label, design, motion, closest_configurations):
    K = pose_config(design, motion, HALF_PI)
    interp = Interpretation.parse(label)
    assert distance(interp, K, closest_configurations[label]) == pytest.approx(CLOSEST_DISTANCES[label], abs=1e-5)
