"""
Run configuration and input parsing.

An input file is JSON holding a 3-RPR ``design`` (normalized parameters or raw
``base``/``platform`` points) or a 3-RRR ``rrr_design``, together with the
``motion``. Designs are always relabeled canonically, with the motion moved
into the normalized frames. Cache location resolves from the CLI, then the
environment, then :data:`DEFAULT_CACHE_DIR`.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .homotopy import TrackerSettings
from .model import DesignParams, MotionSpec, RRRDesign, canonicalize

DEFAULT_CACHE_DIR = ".rpr_cache"
CACHE_ENV_VAR = "RPR_SINGULARITY_CACHE"
DEFAULT_SEED = 20240601
DEFAULT_OUT_DIR = "out"

EXAMPLE_DESIGN = {"x2": 11.0, "x3": 5.0, "y3": 7.0, "x5": 3.0, "x6": 1.0, "y6": 2.0}
EXAMPLE_MOTION = {"a0": [5.5, 1.5], "a1": [0.0, -1.5], "b1": [-3.0, 0.0], "v": 0.0, "w": 2 * math.pi, "n": 90}


class ConfigError(ValueError):
    """Raised for unreadable or inconsistent input files and options."""


@dataclass(frozen=True)
class RunInput:
    """Parsed input file: exactly one of ``design`` and ``rrr_design`` is set."""

    motion: MotionSpec
    design: DesignParams | None = None
    rrr_design: RRRDesign | None = None

    @property
    def is_rrr(self) -> bool:
        return self.rrr_design is not None


@dataclass(frozen=True)
class RunConfig:
    """
    Options of one CLI run.

    Attributes:
        input_path (Path): JSON input file.
        interpretations (tuple[str, ...]): Interpretation labels.
        branches (tuple[str, ...] | None): Branch values, None for the applicability matrix.
        poses (int | None): Overrides the motion's sample count.
        signed (bool): Emit signed distances.
        workers (int): Parallel jobs.
        seed (int): Run seed.
        out_dir (Path): Artifact directory.
        cache_dir (Path): Start-solution cache directory.
        settings (TrackerSettings): Tracker configuration.
    """

    input_path: Path
    interpretations: tuple = ("all9",)
    branches: tuple | None = None
    poses: int | None = None
    signed: bool = False
    workers: int = 1
    seed: int = DEFAULT_SEED
    out_dir: Path = Path(DEFAULT_OUT_DIR)
    cache_dir: Path = Path(DEFAULT_CACHE_DIR)
    settings: TrackerSettings = field(default_factory=TrackerSettings)

    def __post_init__(self):
        if self.poses is not None and self.poses < 2:
            raise ConfigError(f"need at least two poses, got {self.poses}")
        if self.workers < 1:
            raise ConfigError(f"worker count must be positive, got {self.workers}")


def resolve_cache_dir(value: str | os.PathLike | None = None) -> Path:
    if value:
        return Path(value)
    return Path(os.environ.get(CACHE_ENV_VAR, DEFAULT_CACHE_DIR))


def _parse_design(data: dict, motion: MotionSpec) -> tuple[DesignParams, MotionSpec]:
    if "base" in data or "platform" in data:
        return canonicalize(data["base"], data["platform"], motion, tuple(data.get("legs", (0, 1, 2))))
    design = DesignParams(**{k: float(data[k]) for k in ("x2", "x3", "y3", "x5", "x6", "y6")})
    return canonicalize(design.base_points(), design.platform_points(), motion, design.legs)


def _parse_motion(data: dict) -> MotionSpec:
    return MotionSpec(
        a0=tuple(data["a0"]),
        a1=tuple(data.get("a1", (0.0, 0.0))),
        b1=tuple(data.get("b1", (0.0, 0.0))),
        v=float(data["v"]),
        w=float(data["w"]),
        n=int(data["n"]),
        orientation=data.get("orientation"),
    )


def parse_input(data: dict) -> RunInput:
    """
    Build the run input from decoded JSON.

    Args:
        data (dict): Mapping with ``motion`` and ``design`` or ``rrr_design``.

    Returns:
        RunInput: Validated design and motion.

    Raises:
        ConfigError: Missing or malformed sections.
    """
    try:
        motion = _parse_motion(data["motion"])
        if "rrr_design" in data:
            raw = data["rrr_design"]
            rrr = RRRDesign(
                base=raw["base"],
                platform=raw["platform"],
                proximal=raw["proximal"],
                distal=raw["distal"],
                modes=tuple(raw.get("modes", (1, 1, 1))),
            )
            return RunInput(motion=motion, rrr_design=rrr)
        design, motion = _parse_design(data["design"], motion)
        return RunInput(motion=motion, design=design)
    except KeyError as exc:
        raise ConfigError(f"input is missing {exc.args[0]!r}") from None
    except TypeError as exc:
        raise ConfigError(f"malformed input: {exc}") from None


def load_input(path: str | os.PathLike) -> RunInput:
    """Read and parse a JSON input file."""
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_input(data)


def example_input() -> RunInput:
    """The worked example: design (11, 5, 7, 3, 1, 2) on the elliptic motion."""
    return parse_input({"design": EXAMPLE_DESIGN, "motion": EXAMPLE_MOTION})
