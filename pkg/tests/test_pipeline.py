import json
import math
from types import SimpleNamespace

import numpy as np
import pandas as pd
import pytest

from rpr_singularity.homotopy import SolutionSet, TrackerSettings
from rpr_singularity.lagrangian import BranchKind, build_system
from rpr_singularity.model import Body, DesignParams, Interpretation, MotionSpec, RRRDesign, pose_config
from rpr_singularity.polynomials import ParameterizedSystem, PolynomialRing
from rpr_singularity.pipeline import (
    BranchPlan,
    SeedTrackingFailure,
    applicable_branches,
    cache_path,
    derived_seed,
    evaluate_poses,
    load_cached,
    results_frame,
    rrr_sweep,
    run_ab_initio,
    seed_phase,
    single_distance,
    store_cached,
    write_distances_csv,
    write_metrics,
    write_results_json,
)
from rpr_singularity.varieties import ConstraintKind, eval_variety

from .conftest import HALF_PI, CLOSEST_DISTANCES

TRIANGLE_PLATFORM = BranchPlan(BranchKind.COLLINEARITY_P, closed_form="platform")


@pytest.fixture
def collapsed():
    return build_system(Interpretation(Body.TRIANGLE, Body.RIGID), BranchKind.COLLAPSED_P)


@pytest.fixture
def closed_form_results(design, motion):
    return evaluate_poses(
        Interpretation(Body.TRIANGLE, Body.TRIANGLE), design, motion, [HALF_PI, 1.0],
        signed=True, branches=[TRIANGLE_PLATFORM],
    )


def _labels(interp):
    return [plan.label for plan in applicable_branches(interp)]


def test_applicable_branches():
    assert _labels(Interpretation(Body.TRIANGLE, Body.TRIANGLE)) == ["sing_variety", "collinearity_p", "collinearity_b"]
    assert _labels(Interpretation(Body.RIGID, Body.RIGID)) == ["sing_variety", "sing_point_case1+", "sing_point_case1-"]
    assert _labels(Interpretation(Body.TRIANGLE, Body.RIGID)) == ["sing_variety", "collinearity_p", "collapsed_p"]
    assert _labels(Interpretation(Body.RIGID, Body.TRIANGLE)) == ["sing_variety", "collinearity_b", "collapsed_b"]
    assert _labels(Interpretation(Body.PLATE, Body.RIGID)) == ["sing_variety", "sing_point_case1"]
    assert _labels(Interpretation.preliminary()) == ["preliminary"]


def test_closed_forms_only_for_affine_opposite_sides():
    plans = applicable_branches(Interpretation(Body.TRIANGLE, Body.PLATE))
    assert [plan.closed_form for plan in plans] == [None, "platform"]
    plans = applicable_branches(Interpretation(Body.TRIANGLE, Body.RIGID))
    assert all(plan.closed_form is None for plan in plans)


@pytest.mark.parametrize("interp", Interpretation.all_nine(), ids=lambda i: i.label)
def test_every_planned_branch_builds(interp):
    for plan in applicable_branches(interp):
        if plan.closed_form is None:
            assert build_system(interp, plan.kind, plan.variant).branch is plan.kind


def test_derived_seed_is_stable_per_key():
    assert derived_seed(1, "a") == derived_seed(1, "a")
    assert derived_seed(1, "a") != derived_seed(1, "b")
    assert derived_seed(1, "a") != derived_seed(2, "a")
    assert 0 <= derived_seed(-5, "a") < 2 ** 31


def test_cache_round_trip(tmp_path, collapsed):
    solutions = SolutionSet.from_endpoints(
        [np.arange(7) + 1j, np.arange(7) - 1j], params=np.ones(len(collapsed.parameters), dtype=complex), n_tracked=128,
    )
    assert load_cached(tmp_path, collapsed) is None
    assert store_cached(tmp_path, collapsed, solutions)
    assert cache_path(tmp_path, collapsed).name == "triangle_rigid__collapsed_p.json"
    restored = load_cached(tmp_path, collapsed)
    np.testing.assert_allclose(restored.points, solutions.points)
    assert restored.n_tracked == 128


def test_stale_and_corrupt_cache_entries(tmp_path, collapsed):
    solutions = SolutionSet.from_endpoints([np.zeros(7)], params=np.ones(len(collapsed.parameters), dtype=complex))
    store_cached(tmp_path, collapsed, solutions)
    path = cache_path(tmp_path, collapsed)
    payload = json.loads(path.read_text())
    payload["fingerprint"] = "0" * 64
    path.write_text(json.dumps(payload))
    assert load_cached(tmp_path, collapsed) is None
    path.write_text("{not json")
    assert load_cached(tmp_path, collapsed) is None


def test_no_cache_directory(collapsed):
    solutions = SolutionSet.from_endpoints([np.zeros(7)])
    assert load_cached(None, collapsed) is None
    assert not store_cached(None, collapsed, solutions)


def test_closed_form_branch_matches_the_pose_independent_distance(closed_form_results, design, motion):
    first, second = closed_form_results
    expected = CLOSEST_DISTANCES["triangle:triangle"]
    assert first.distance == pytest.approx(expected, abs=1e-6)
    assert second.distance == pytest.approx(expected, abs=1e-6)
    assert first.branch == "collinearity_p"
    K = pose_config(design, motion, HALF_PI)
    assert first.sign == int(np.sign(np.real(eval_variety(ConstraintKind.V, K))))
    assert first.branch_minimum("collinearity_p").sign == int(np.sign(np.real(eval_variety(ConstraintKind.CP, K))))
    assert first.signed_distance == pytest.approx(first.sign * first.distance)


def test_infeasible_collinear_case_is_reported(design, motion):
    (result,) = evaluate_poses(
        Interpretation(Body.PLATE, Body.RIGID), design, motion, [0.5],
        branches=[BranchPlan(BranchKind.SING_POINT_CASE1)],
    )
    assert result.distance is None
    assert result.branch is None
    assert not result.branch_minimum("sing_point_case1").feasible


def test_results_frame_has_an_overall_row(closed_form_results):
    frame = results_frame(closed_form_results)
    assert len(frame) == 4
    assert frame["branch"].tolist() == ["collinearity_p", "overall", "collinearity_p", "overall"]
    assert list(frame.columns[:5]) == ["phi", "interpretation", "branch", "distance", "sign"]
    assert list(frame.columns[-3:]) == ["n_real", "n_tracked", "n_failed"]
    assert "d6" in frame.columns and "c7" not in frame.columns
    overall = frame[frame["branch"] == "overall"]
    assert (overall["interpretation"] == "triangle:triangle").all()


def test_csv_and_json_outputs(tmp_path, closed_form_results):
    write_distances_csv(closed_form_results, tmp_path / "distances.csv")
    frame = pd.read_csv(tmp_path / "distances.csv")
    assert len(frame) == 4
    assert frame["distance"].iloc[0] == pytest.approx(CLOSEST_DISTANCES["triangle:triangle"], abs=1e-6)

    write_results_json(closed_form_results, tmp_path / "summary.json", {"k": {"expected": 2, "achieved": 2}})
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["ab_initio"]["k"]["achieved"] == 2
    assert summary["results"][0]["branches"][0]["feasible"] is True
    assert len(summary["results"][0]["minimizer"]) == 6


def test_metrics_file(tmp_path):
    path = write_metrics(tmp_path)
    assert path.exists()
    assert "rpr_paths_tracked_total" in path.read_text()


@pytest.mark.slow
def test_preliminary_distance_of_the_example(tmp_path, design, motion, settings):
    result = single_distance(Interpretation.preliminary(), design, motion, 0.8471710528,
                             settings=settings, cache_dir=tmp_path)
    assert result.distance == pytest.approx(0.7541454, abs=1e-6)


@pytest.mark.slow
def test_triangle_rigid_collinear_platform_at_half_turn(tmp_path, design, motion, settings):
    result = single_distance(Interpretation(Body.TRIANGLE, Body.RIGID), design, motion, HALF_PI,
                             branches=[BranchPlan(BranchKind.COLLINEARITY_P)], settings=settings, cache_dir=tmp_path)
    assert result.distance == pytest.approx(CLOSEST_DISTANCES["triangle:rigid"], abs=1e-6)


@pytest.fixture
def scaled_roots():
    ring = PolynomialRing(["x", "y", "p"])
    x, y, p = ring.vars("x", "y", "p")
    system = ParameterizedSystem([x ** 2 - p, y ** 2 - 4 * p], ["x", "y"], ["p"])
    generic = SolutionSet.from_endpoints([(1, 2), (-1, 2), (1, -2), (-1, -2)], params=np.array([1.0 + 0j]))
    return SimpleNamespace(compiled=system.compile(), key="scaled_roots", system=system), generic


def test_seed_phase_moves_every_solution(scaled_roots):
    family, generic = scaled_roots
    params, seeds = seed_phase(family, generic, [4 + 1j], TrackerSettings(), seed=3)
    assert len(seeds) == 4
    assert seeds.n_failed == 0
    np.testing.assert_allclose(seeds.points[:, 0] ** 2, params[0])


def test_seed_phase_gives_up_after_reseeding(scaled_roots):
    family, generic = scaled_roots
    with pytest.raises(SeedTrackingFailure, match="0 of 4"):
        seed_phase(family, generic, [4 + 1j], TrackerSettings(max_steps=1), seed=3)


def test_signed_distance_changes_sign_across_the_singular_pose(design, motion):
    before, after = evaluate_poses(
        Interpretation(Body.TRIANGLE, Body.TRIANGLE), design, motion, [-0.2, 0.2],
        signed=True, branches=[TRIANGLE_PLATFORM],
    )
    assert before.sign * after.sign == -1
    assert before.signed_distance * after.signed_distance < 0


ROOT_COUNTS = [
    (Interpretation(Body.RIGID, Body.RIGID), BranchKind.SING_VARIETY, 0, 88),
    (Interpretation(Body.TRIANGLE, Body.RIGID), BranchKind.SING_VARIETY, 0, 80),
    (Interpretation(Body.RIGID, Body.PLATE), BranchKind.SING_VARIETY, 0, 80),
    (Interpretation(Body.TRIANGLE, Body.TRIANGLE), BranchKind.SING_VARIETY, 0, 50),
    (Interpretation(Body.TRIANGLE, Body.RIGID), BranchKind.COLLINEARITY_P, 0, 8),
    (Interpretation(Body.TRIANGLE, Body.PLATE), BranchKind.COLLINEARITY_P, 0, 2),
    (Interpretation(Body.PLATE, Body.PLATE), BranchKind.SING_POINT_CASE1, 0, 8),
    (Interpretation(Body.RIGID, Body.RIGID), BranchKind.SING_POINT_CASE1, 1, 8),
    (Interpretation(Body.TRIANGLE, Body.RIGID), BranchKind.COLLAPSED_P, 0, 2),
]


@pytest.mark.slow
@pytest.mark.parametrize("interp, branch, variant, expected_count", ROOT_COUNTS,
                         ids=[f"{i.label}/{b.value}{v or ''}" for i, b, v, _ in ROOT_COUNTS])
@pytest.mark.parametrize("seed", [1, 2])
def test_generic_root_counts(interp, branch, variant, expected_count, seed, settings):
    solutions = run_ab_initio(build_system(interp, branch, variant), settings, seed=seed)
    assert len(solutions) == expected_count


@pytest.mark.slow
def test_pedal_projection_agrees_with_the_homotopy_on_random_designs(tmp_path, motion, settings):
    rng = np.random.default_rng(8)
    interp = Interpretation(Body.TRIANGLE, Body.PLATE)
    for _ in range(3):
        design = DesignParams(rng.uniform(5, 15), rng.uniform(0, 10), rng.uniform(3, 10),
                              rng.uniform(1, 5), rng.uniform(-1, 4), rng.uniform(1, 4))
        closed, tracked = (
            single_distance(interp, design, motion, 1.1, branches=[plan], settings=settings, cache_dir=tmp_path)
            for plan in (TRIANGLE_PLATFORM, BranchPlan(BranchKind.COLLINEARITY_P))
        )
        assert tracked.distance == pytest.approx(closed.distance, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("interp", Interpretation.all_nine(), ids=lambda i: i.label)
def test_distance_vanishes_at_the_singular_pose(tmp_path, interp, design, motion, settings):
    result = single_distance(interp, design, motion, 0.0, settings=settings, cache_dir=tmp_path)
    assert result.distance == pytest.approx(0.0, abs=1e-6)
    assert result.branch == "sing_variety"


@pytest.mark.slow
@pytest.mark.parametrize("label, collinear, collapsed", [
    ("triangle:rigid", BranchKind.COLLINEARITY_P, BranchKind.COLLAPSED_P),
    ("rigid:triangle", BranchKind.COLLINEARITY_B, BranchKind.COLLAPSED_B),
])
def test_collapsed_side_is_farther_than_a_collinear_one(tmp_path, label, collinear, collapsed, design, motion,
                                                        settings):
    interp = Interpretation.parse(label)
    results = evaluate_poses(interp, design, motion, [0.3, 1.2, HALF_PI, 3.5],
                             branches=[BranchPlan(collinear), BranchPlan(collapsed)],
                             settings=settings, cache_dir=tmp_path)
    for result in results:
        assert result.branch_minimum(collapsed.value).distance > result.branch_minimum(collinear.value).distance
        assert result.branch == collinear.value


@pytest.mark.slow
def test_collapsed_branch_never_gives_the_overall_minimum(tmp_path, design, motion, settings):
    results = evaluate_poses(Interpretation(Body.TRIANGLE, Body.RIGID), design, motion, [0.6, 2.4, 5.0],
                             settings=settings, cache_dir=tmp_path)
    assert all(result.branch != "collapsed_p" for result in results)


@pytest.fixture
def rrr_design():
    return RRRDesign(
        base=((0, 0), (10, 0), (5, 8.66)),
        platform=((0, 0), (2, 0), (1, 1.732)),
        proximal=(5, 5, 5),
        distal=(5, 5, 5),
    )


@pytest.mark.slow
def test_rrr_sweep_finds_stretched_legs(tmp_path, rrr_design, settings):
    # at phi = 0 the first platform joint is (6, 8), exactly the reach of leg 1
    motion = MotionSpec(a0=(5.5, 8), a1=(0.5, 0), b1=(0, 0.5), v=0, w=2 * math.pi, n=2, orientation=0.0)
    counts = {}
    stretched, relaxed = rrr_sweep(rrr_design, motion, phis=[0.0, math.pi], settings=settings, cache_dir=tmp_path,
                                   counts=counts)
    assert counts["rrr/rrr_parallel"]["achieved"] == 50
    assert stretched.branch_minimum("rrr_leg_1").distance == pytest.approx(0.0, abs=1e-6)
    assert stretched.distance == pytest.approx(0.0, abs=1e-6)
    assert relaxed.branch_minimum("rrr_leg_1").distance > 1e-3


@pytest.mark.slow
def test_results_do_not_depend_on_the_worker_count(tmp_path, design, motion, settings):
    interp = Interpretation(Body.TRIANGLE, Body.RIGID)
    plans = [BranchPlan(BranchKind.COLLINEARITY_P), BranchPlan(BranchKind.COLLAPSED_P)]
    runs = [
        evaluate_poses(interp, design, motion, [0.4, 2.0, 3.3], branches=plans, settings=settings, seed=11,
                       workers=workers, cache_dir=tmp_path / str(workers))
        for workers in (1, 4, 16)
    ]
    first = results_frame(runs[0])
    for other in runs[1:]:
        pd.testing.assert_frame_equal(results_frame(other), first)
