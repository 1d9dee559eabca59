import json
import math
from pathlib import Path

import numpy as np
import pytest

from rpr_singularity.config import (
    CACHE_ENV_VAR,
    DEFAULT_CACHE_DIR,
    EXAMPLE_DESIGN,
    EXAMPLE_MOTION,
    ConfigError,
    RunConfig,
    load_input,
    parse_input,
    resolve_cache_dir,
)
from rpr_singularity.model import ArchitectureSingular, DesignParams, pose_config


def test_parse_normalized_design():
    run_input = parse_input({"design": EXAMPLE_DESIGN, "motion": EXAMPLE_MOTION})
    assert not run_input.is_rrr
    assert run_input.design.x2 == 11.0
    assert run_input.motion.n == 90


def test_parse_raw_points():
    run_input = parse_input({
        "design": {"base": [[1, 1], [12, 1], [6, 8]], "platform": [[0, 0], [3, 0], [1, 2]]},
        "motion": EXAMPLE_MOTION,
    })
    assert run_input.design.x2 == pytest.approx(11.0)
    assert run_input.design.y3 == pytest.approx(7.0)


def test_parse_rrr_design():
    run_input = parse_input({
        "rrr_design": {
            "base": [[0, 0], [10, 0], [5, 8.66]],
            "platform": [[0, 0], [2, 0], [1, 1.732]],
            "proximal": [5, 5, 5],
            "distal": [5, 5, 5],
            "modes": [1, -1, 1],
        },
        "motion": {**EXAMPLE_MOTION, "orientation": 0.0},
    })
    assert run_input.is_rrr
    assert run_input.rrr_design.modes == (1, -1, 1)


def test_missing_sections():
    with pytest.raises(ConfigError, match="motion"):
        parse_input({"design": EXAMPLE_DESIGN})
    with pytest.raises(ConfigError, match="x6"):
        parse_input({"design": {k: v for k, v in EXAMPLE_DESIGN.items() if k != "x6"}, "motion": EXAMPLE_MOTION})


def test_degenerate_design_is_not_a_config_error():
    with pytest.raises(ArchitectureSingular):
        parse_input({"design": {**EXAMPLE_DESIGN, "x5": 0.0, "x6": 0.0, "y6": 0.0}, "motion": EXAMPLE_MOTION})


def test_load_input(tmp_path):
    path = tmp_path / "input.json"
    path.write_text(json.dumps({"design": EXAMPLE_DESIGN, "motion": EXAMPLE_MOTION}))
    assert load_input(path).motion.w == pytest.approx(2 * math.pi)
    path.write_text("{")
    with pytest.raises(ConfigError):
        load_input(path)
    with pytest.raises(ConfigError):
        load_input(tmp_path / "absent.json")


def test_cache_dir_resolution(monkeypatch, tmp_path):
    monkeypatch.delenv(CACHE_ENV_VAR, raising=False)
    assert str(resolve_cache_dir()) == DEFAULT_CACHE_DIR
    monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path))
    assert resolve_cache_dir() == tmp_path
    assert resolve_cache_dir("explicit") == Path("explicit")


def test_run_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig(input_path=tmp_path / "x.json", poses=1)
    with pytest.raises(ConfigError):
        RunConfig(input_path=tmp_path / "x.json", workers=0)
    assert RunConfig(input_path=tmp_path / "x.json").interpretations == ("all9",)


def test_coincident_first_anchors_are_relabeled_with_the_motion():
    coincident = {"x2": 0.0, "x3": 5.0, "y3": 7.0, "x5": 3.0, "x6": 1.0, "y6": 2.0}
    run_input = parse_input({"design": coincident, "motion": EXAMPLE_MOTION})
    design = run_input.design
    assert design.x2 == pytest.approx(math.sqrt(74))
    assert design.legs == (0, 2, 1)

    original_design = DesignParams(**coincident)
    original_motion = parse_input({"design": EXAMPLE_DESIGN, "motion": EXAMPLE_MOTION}).motion
    order = list(design.legs) + [3 + k for k in design.legs]
    for phi in (0.0, 1.3, 3.7):
        original = pose_config(original_design, original_motion, phi).points[order]
        relabeled = pose_config(design, run_input.motion, phi).points
        gaps = [np.linalg.norm(points[:, None] - points[None], axis=-1) for points in (original, relabeled)]
        np.testing.assert_allclose(gaps[1], gaps[0], atol=1e-9)
