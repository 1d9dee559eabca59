import math

import numpy as np
import pytest
from scipy.optimize import minimize

from rpr_singularity.lagrangian import (
    BranchKind,
    IncompatibleBranch,
    build_system,
    case1_feasible,
    collapsed_distance,
    collinearity_discriminants,
    parameter_values,
    pedal_points,
    pedal_projection,
    pose_independent_distance,
    regression_line,
)
from rpr_singularity.metrics import distance, extrinsic_dist2
from rpr_singularity.model import Body, Configuration, DesignParams, Interpretation, pose_config
from rpr_singularity.varieties import DegenerateDesign

from .conftest import HALF_PI, REGRESSION_LINE, CLOSEST_DISTANCES, CLOSEST_CONFIGURATIONS

TRI = Body.TRIANGLE


@pytest.mark.parametrize("platform, base, unknowns, expected", [
    (TRI, TRI, 13, 50),
    (Body.PLATE, TRI, 13, 50),
    (TRI, Body.RIGID, 12, 80),
    (Body.RIGID, Body.PLATE, 12, 80),
    (Body.RIGID, Body.RIGID, 11, 88),
])
def test_singularity_variety_systems(platform, base, unknowns, expected):
    critical = build_system(Interpretation(platform, base), BranchKind.SING_VARIETY)
    assert len(critical.unknowns) == unknowns
    assert critical.expected_count == expected
    assert critical.system.degrees()[len(critical.coordinates)] == 4


@pytest.mark.parametrize("platform, base, branch, unknowns, expected", [
    (TRI, TRI, BranchKind.COLLINEARITY_P, 13, 2),
    (TRI, Body.RIGID, BranchKind.COLLINEARITY_P, 12, 8),
    (Body.RIGID, TRI, BranchKind.COLLINEARITY_B, 12, 8),
    (TRI, Body.RIGID, BranchKind.COLLAPSED_P, 7, 2),
    (Body.RIGID, TRI, BranchKind.COLLAPSED_B, 7, 2),
    (Body.PLATE, Body.PLATE, BranchKind.SING_POINT_CASE1, 10, 8),
    (Body.PLATE, Body.RIGID, BranchKind.SING_POINT_CASE1, 8, 8),
])
def test_branch_systems(platform, base, branch, unknowns, expected):
    critical = build_system(Interpretation(platform, base), branch)
    assert len(critical.unknowns) == unknowns
    assert critical.expected_count == expected


def test_rigid_collinear_case_has_two_variants():
    rigid = Interpretation(Body.RIGID, Body.RIGID)
    plus = build_system(rigid, BranchKind.SING_POINT_CASE1, 1)
    minus = build_system(rigid, BranchKind.SING_POINT_CASE1, -1)
    assert len(plus.unknowns) == 6
    assert plus.key.endswith("+") and minus.key.endswith("-")
    assert plus.dump() != minus.dump()
    with pytest.raises(IncompatibleBranch):
        build_system(rigid, BranchKind.SING_POINT_CASE1)


def test_rrr_systems():
    parallel = build_system(None, BranchKind.RRR_PARALLEL)
    assert len(parallel.unknowns) == 19
    assert parallel.expected_count == 50
    leg = build_system(None, BranchKind.rrr_leg(2))
    assert leg.key == "rrr/rrr_leg_2"
    assert leg.expected_count is None


@pytest.mark.parametrize("interp, branch", [
    (Interpretation.preliminary(), BranchKind.SING_VARIETY),
    (Interpretation(TRI, TRI), BranchKind.PRELIMINARY),
    (Interpretation(Body.PLATE, Body.PLATE), BranchKind.COLLINEARITY_P),
    (Interpretation(TRI, TRI), BranchKind.SING_POINT_CASE1),
    (Interpretation(TRI, TRI), BranchKind.COLLAPSED_P),
    (None, BranchKind.SING_VARIETY),
])
def test_incompatible_branches(interp, branch):
    with pytest.raises(IncompatibleBranch):
        build_system(interp, branch)


def test_singular_pose_solves_its_own_system(design, motion):
    K = pose_config(design, motion, 0.0)
    critical = build_system(Interpretation(TRI, Body.RIGID), BranchKind.SING_VARIETY)
    params = critical.parameter_vector(parameter_values(critical, K, design))
    coordinates = {f"{axis}{i}": K.point(i)[j] for i in range(1, 7) for j, axis in enumerate("cd")}
    x = np.array([coordinates.get(name, 0.0) for name in critical.unknowns], dtype=complex)
    np.testing.assert_allclose(critical.compiled.evaluate(x, params), 0, atol=1e-9)
    assert critical.configuration(x.real, params.real).allclose(K, atol=1e-12)
    np.testing.assert_allclose(critical.constraint_values(x, params), 0, atol=1e-9)


def test_parameter_values_need_the_design_for_rigid_sides(design, motion):
    K = pose_config(design, motion, 0.5)
    critical = build_system(Interpretation(Body.RIGID, Body.RIGID), BranchKind.SING_VARIETY)
    with pytest.raises(ValueError):
        parameter_values(critical, K)
    values = parameter_values(critical, K, design)
    assert list(values) == list(critical.parameters)
    assert values["lb2"] == pytest.approx(121)
    assert values["rp"] == pytest.approx(1 / 3)


def test_objective_is_the_interpretation_metric(design, motion):
    K = pose_config(design, motion, 0.7)
    K_prime = pose_config(design, motion, 0.9)
    interp = Interpretation(TRI, Body.PLATE)
    critical = build_system(interp, BranchKind.COLLINEARITY_P)
    assignment = parameter_values(critical, K)
    assignment.update({f"{axis}{i}": K_prime.point(i)[j] for i in range(1, 7) for j, axis in enumerate("cd")})
    assert critical.objective.evaluate(assignment).real == pytest.approx(extrinsic_dist2(interp, K, K_prime))


def test_case1_feasibility(design):
    assert not case1_feasible(Interpretation(Body.RIGID, Body.RIGID), design)
    assert not case1_feasible(Interpretation(Body.PLATE, Body.RIGID), design)
    assert case1_feasible(Interpretation(Body.PLATE, Body.PLATE), design)


def test_regression_line_of_the_half_turn_platform(design, motion):
    K = pose_config(design, motion, HALF_PI)
    platform = K.points[3:]
    centroid, direction = regression_line(platform)
    a, b, c = REGRESSION_LINE
    assert a * centroid[0] + b * centroid[1] + c == pytest.approx(0, abs=1e-6)
    assert a * direction[0] + b * direction[1] == pytest.approx(0, abs=1e-6)
    for x, y in pedal_points(platform):
        assert a * x + b * y + c == pytest.approx(0, abs=1e-6)


def test_isotropic_triple_falls_back_to_x_axis():
    triple = [(1, 0), (-0.5, math.sqrt(3) / 2), (-0.5, -math.sqrt(3) / 2)]
    _, direction = regression_line(triple)
    np.testing.assert_allclose(direction, [1, 0])


@pytest.mark.parametrize("label", ["triangle:plate", "triangle:triangle"])
def test_pedal_projection_matches_the_closest_configuration(label, design, motion):
    K = pose_config(design, motion, HALF_PI)
    interp = Interpretation.parse(label)
    minimizer = pedal_projection(K, interp, "platform")
    np.testing.assert_allclose(minimizer.points, CLOSEST_CONFIGURATIONS[label], atol=1e-5)
    assert distance(interp, K, minimizer) == pytest.approx(CLOSEST_DISTANCES[label], abs=1e-6)


@pytest.mark.parametrize("label", ["triangle:plate", "triangle:triangle"])
def test_collinearity_distance_does_not_depend_on_the_pose(label, design, motion):
    interp = Interpretation.parse(label)
    expected = pose_independent_distance(interp, design, "platform")
    assert expected == pytest.approx(CLOSEST_DISTANCES[label], abs=1e-6)
    for phi in (0.3, 1.9, 4.4):
        K = pose_config(design, motion, phi)
        assert distance(interp, K, pedal_projection(K, interp, "platform")) == pytest.approx(expected, rel=1e-9)


def test_pedal_projection_rejects_rigid_opposite_side(design, motion):
    K = pose_config(design, motion, HALF_PI)
    with pytest.raises(IncompatibleBranch):
        pedal_projection(K, Interpretation(TRI, Body.RIGID), "platform")
    with pytest.raises(IncompatibleBranch):
        pose_independent_distance(Interpretation(TRI, Body.RIGID), design)


def test_collinearity_discriminants_of_the_example_platform():
    s, eta = collinearity_discriminants(3, 1, 2)
    assert s == 11
    assert eta == pytest.approx(s * s - 3 * 9 * 4)


def test_collapsed_distance_is_the_quadratic_minimum(design, motion):
    K = pose_config(design, motion, 1.1)
    interp = Interpretation(TRI, TRI)
    d, minimizer = collapsed_distance(interp, K, "platform")
    for i in (4, 5, 6):
        np.testing.assert_allclose(minimizer.point(i), minimizer.point(4))

    def objective(v):
        points = np.vstack([v[2:].reshape(3, 2), np.tile(v[:2], (3, 1))])
        return float(extrinsic_dist2(interp, K, Configuration(points)))

    start = np.concatenate([K.points[3:].mean(axis=0), K.points[:3].ravel()])
    numeric = minimize(objective, start, method="BFGS", options={"gtol": 1e-10})
    assert d == pytest.approx(math.sqrt(numeric.fun), rel=1e-5)


@pytest.mark.parametrize("label", ["triangle:plate", "triangle:triangle"])
def test_collinear_platform_is_closer_than_a_collapsed_one(label, design, motion):
    interp = Interpretation.parse(label)
    for phi in (0.0, 1.2, HALF_PI, 3.5):
        K = pose_config(design, motion, phi)
        collinear = distance(interp, K, pedal_projection(K, interp, "platform"))
        collapsed, _ = collapsed_distance(interp, K, "platform")
        assert collinear < collapsed


@pytest.mark.parametrize("interp, branch, variant", [
    (Interpretation(TRI, TRI), BranchKind.SING_VARIETY, 0),
    (Interpretation(Body.RIGID, Body.RIGID), BranchKind.SING_VARIETY, 0),
    (Interpretation(TRI, Body.RIGID), BranchKind.COLLINEARITY_P, 0),
    (Interpretation(TRI, Body.RIGID), BranchKind.COLLAPSED_P, 0),
    (Interpretation(Body.RIGID, Body.RIGID), BranchKind.SING_POINT_CASE1, 1),
    (None, BranchKind.RRR_LEG_1, 0),
])
def test_jacobian_is_the_symmetric_hessian_of_the_lagrangian(interp, branch, variant):
    critical = build_system(interp, branch, variant)
    rng = np.random.default_rng(3)
    x = rng.standard_normal(len(critical.unknowns)) + 1j * rng.standard_normal(len(critical.unknowns))
    p = rng.standard_normal(len(critical.parameters)) + 1j * rng.standard_normal(len(critical.parameters))
    J = critical.compiled.jacobian(x, p)
    np.testing.assert_allclose(J, J.T, atol=1e-9 * (1 + np.max(np.abs(J))))
    multipliers = slice(len(critical.coordinates), None)
    np.testing.assert_allclose(J[multipliers, multipliers], 0)


def test_parameter_values_reject_an_unrelabeled_design(motion):
    unrelabeled = DesignParams(0, 5, 7, 3, 1, 2)
    K = pose_config(unrelabeled, motion, 0.5)
    critical = build_system(Interpretation(TRI, Body.RIGID), BranchKind.SING_VARIETY)
    with pytest.raises(DegenerateDesign, match="relabel"):
        parameter_values(critical, K, unrelabeled)
