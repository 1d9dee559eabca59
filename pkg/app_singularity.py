"""
Command-line entry point.

Commands:
    sweep     distances over the motion's poses (CSV, JSON, SVG, metrics)
    single    per-branch breakdown at one pose, optionally drawn
    abinitio  populate the start-solution cache and compare root counts
    kpi       closeness indices over the motion (CSV, SVG)

Exit codes: 0 ok, 2 configuration error, 3 root-count failure, 4 seed failure.
"""

import functools
import logging
import math
from pathlib import Path

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from rpr_singularity.config import (
    CACHE_ENV_VAR,
    DEFAULT_CACHE_DIR,
    DEFAULT_OUT_DIR,
    DEFAULT_SEED,
    ConfigError,
    RunConfig,
    load_input,
)
from rpr_singularity.homotopy import BudgetExceeded, MonodromyStalled
from rpr_singularity.kpi import kpi_frame
from rpr_singularity.lagrangian import BranchKind, IncompatibleBranch, build_system
from rpr_singularity.model import (
    ArchitectureSingular,
    Interpretation,
    InvalidMotion,
    UnreachablePose,
    pose_config,
)
from rpr_singularity.pipeline import (
    RRR_BRANCHES,
    CountMismatch,
    SeedTrackingFailure,
    applicable_branches,
    derived_seed,
    evaluate_poses,
    rrr_sweep,
    run_ab_initio,
    write_distances_csv,
    write_metrics,
    write_results_json,
)
from rpr_singularity.plots import draw_configurations, plot_interpretation, plot_kpis, plot_overview
from rpr_singularity.varieties import ArityMismatch, DegenerateDesign

logger = logging.getLogger("rpr_singularity")
console = Console()

EXIT_CODES = (
    (SeedTrackingFailure, 4),
    (CountMismatch, 3),
    (MonodromyStalled, 3),
    (BudgetExceeded, 3),
    (ConfigError, 2),
    (ArchitectureSingular, 2),
    (InvalidMotion, 2),
    (UnreachablePose, 2),
    (IncompatibleBranch, 2),
    (DegenerateDesign, 2),
    (ArityMismatch, 2),
)


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=console, rich_tracebacks=True)],
        force=True,
    )


def handle_errors(fn):
    """Map library exceptions to exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:
            for kind, code in EXIT_CODES:
                if isinstance(exc, kind):
                    console.print(f"[bold red]{type(exc).__name__}[/]: {exc}")
                    raise SystemExit(code) from None
            raise

    return wrapper


def common_options(fn):
    options = [
        click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False, path_type=Path),
                     help="JSON file with design and motion."),
        click.option("--interp", "interpretations", multiple=True, default=("all9",), show_default=True,
                     help="Interpretation label (platform:base), 'all9' or 'preliminary'; repeatable."),
        click.option("--branches", default="auto", show_default=True,
                     help="Comma-separated branch labels, or 'auto' for the applicability matrix."),
        click.option("--poses", type=int, default=None, help="Override the motion's number of poses."),
        click.option("--signed", is_flag=True, help="Emit signed distances."),
        click.option("--workers", type=int, default=1, show_default=True),
        click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True),
        click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
                     default=DEFAULT_OUT_DIR, show_default=True),
        click.option("--cache", "cache_dir", type=click.Path(file_okay=False, path_type=Path),
                     envvar=CACHE_ENV_VAR, default=DEFAULT_CACHE_DIR, show_default=True),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def build_config(input_path, interpretations, branches, poses, signed, workers, seed, out_dir, cache_dir) -> RunConfig:
    labels = tuple(label for value in interpretations for label in value.split(",") if label)
    chosen = None if branches in (None, "", "auto") else tuple(b for b in branches.split(",") if b)
    return RunConfig(
        input_path=input_path, interpretations=labels, branches=chosen, poses=poses, signed=signed,
        workers=workers, seed=seed, out_dir=out_dir, cache_dir=cache_dir,
    )


def expand_interpretations(labels) -> list[Interpretation]:
    result = []
    for label in labels:
        try:
            result += list(Interpretation.all_nine()) if label == "all9" else [Interpretation.parse(label)]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return result


def select_branches(interp: Interpretation, chosen):
    plans = applicable_branches(interp)
    if chosen is None:
        return plans
    selected = [p for p in plans if p.label in chosen or p.kind.value in chosen]
    if not selected:
        raise ConfigError(f"none of {', '.join(chosen)} applies to {interp.label}")
    return selected


def rrr_kinds(chosen) -> tuple[BranchKind, ...]:
    if chosen is None:
        return RRR_BRANCHES
    try:
        kinds = tuple(BranchKind(b) for b in chosen)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not all(kind.is_rrr for kind in kinds):
        raise ConfigError("3-RRR input accepts only rrr_* branches")
    return kinds


def load_run(config: RunConfig):
    run_input = load_input(config.input_path)
    motion = run_input.motion if config.poses is None else run_input.motion.with_samples(config.poses)
    return run_input, motion


def _fmt(value) -> str:
    return "gap" if value is None or (isinstance(value, float) and math.isnan(value)) else f"{value:.9g}"


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Debug logging.")
def cli(verbose):
    """Singularity distances of planar parallel manipulators."""
    configure_logging(verbose)


@cli.command()
@common_options
@handle_errors
def sweep(**options):
    """Distances over the sampled poses of the motion."""
    config = build_config(**options)
    run_input, motion = load_run(config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    counts = {}
    if run_input.is_rrr:
        kinds = rrr_kinds(config.branches)
        results = rrr_sweep(
            run_input.rrr_design, motion, kinds, signed=True, settings=config.settings, seed=config.seed,
            workers=config.workers, cache_dir=config.cache_dir, counts=counts,
        )
        labels = ["rrr"]
    else:
        results, labels = [], []
        for interp in expand_interpretations(config.interpretations):
            results += evaluate_poses(
                interp, run_input.design, motion, motion.poses(), signed=config.signed,
                branches=select_branches(interp, config.branches), settings=config.settings, seed=config.seed,
                workers=config.workers, cache_dir=config.cache_dir, counts=counts,
            )
            labels.append(interp.label)
        kpis = kpi_frame(run_input.design, motion, config.settings, config.seed, config.workers)
        kpis.to_csv(config.out_dir / "kpi.csv", index=False, float_format="%.9g")
        plot_kpis(kpis, config.out_dir / "kpi.svg")

    frame = write_distances_csv(results, config.out_dir / "distances.csv")
    write_results_json(results, config.out_dir / "summary.json", counts)
    for label in labels:
        plot_interpretation(frame, label, config.out_dir / f"distance_{label.replace(':', '_')}.svg", config.signed)
    plot_overview(frame, config.out_dir / "distances.svg", config.signed)
    write_metrics(config.out_dir)

    gaps = sum(r.distance is None for r in results)
    if gaps:
        logger.warning("%d poses without a real critical configuration", gaps)
    table = Table(title="Ab-initio solutions")
    table.add_column("system")
    table.add_column("achieved", justify="right")
    table.add_column("expected", justify="right")
    for key, count in counts.items():
        table.add_row(key, str(count["achieved"]), str(count["expected"] or "-"))
    console.print(table)
    console.print(f"wrote {len(frame)} rows to {config.out_dir / 'distances.csv'}")


@cli.command()
@common_options
@click.option("--phi", type=float, required=True, help="Pose parameter.")
@click.option("--draw", is_flag=True, help="Draw K and the closest singular configuration.")
@handle_errors
def single(phi, draw, **options):
    """Per-branch minima at one pose."""
    config = build_config(**options)
    run_input, motion = load_run(config)
    if run_input.is_rrr:
        kinds = rrr_kinds(config.branches)
        results = rrr_sweep(run_input.rrr_design, motion, kinds, phis=[phi], signed=True, settings=config.settings,
                            seed=config.seed, workers=config.workers, cache_dir=config.cache_dir)
    else:
        results = [
            evaluate_poses(
                interp, run_input.design, motion, [phi], signed=config.signed,
                branches=select_branches(interp, config.branches), settings=config.settings, seed=config.seed,
                workers=config.workers, cache_dir=config.cache_dir,
            )[0]
            for interp in expand_interpretations(config.interpretations)
        ]
    for result in results:
        table = Table(title=f"{result.interpretation} at φ = {phi:.10g}")
        table.add_column("branch")
        table.add_column("distance", justify="right")
        table.add_column("sign", justify="right")
        table.add_column("minimizer")
        for b in result.branches:
            coords = "" if b.minimizer is None else " ".join(f"{c:.8g}" for c in b.minimizer.coordinates().real)
            table.add_row(b.branch, _fmt(b.distance), str(b.sign if b.sign is not None else ""), coords)
        table.add_row("overall", _fmt(result.distance), str(result.sign if result.sign is not None else ""),
                      result.branch or "")
        console.print(table)
        if draw and result.minimizer is not None and not run_input.is_rrr:
            config.out_dir.mkdir(parents=True, exist_ok=True)
            K = pose_config(run_input.design, motion, phi)
            path = config.out_dir / f"configuration_{result.interpretation.replace(':', '_')}.svg"
            draw_configurations(K, result.minimizer, path, f"{result.interpretation}: D = {_fmt(result.distance)}")


@cli.command()
@common_options
@handle_errors
def abinitio(**options):
    """Populate the start-solution cache and report generic root counts."""
    config = build_config(**options)
    run_input, _ = load_run(config)
    if run_input.is_rrr:
        systems = [build_system(None, kind) for kind in RRR_BRANCHES]
    else:
        systems = [
            build_system(interp, plan.kind, plan.variant)
            for interp in expand_interpretations(config.interpretations)
            for plan in select_branches(interp, config.branches)
            if not plan.closed_form
        ]
    table = Table(title="Ab-initio solutions")
    for column in ("system", "achieved", "expected"):
        table.add_column(column)
    failure = None
    for critical in systems:
        try:
            solutions = run_ab_initio(
                critical, config.settings, derived_seed(config.seed, critical.key), config.cache_dir, config.workers,
            )
            table.add_row(critical.key, str(len(solutions)), str(critical.expected_count or "-"))
        except CountMismatch as exc:
            table.add_row(critical.key, f"[red]{exc.achieved}[/]", str(exc.expected))
            failure = exc
    console.print(table)
    if failure is not None:
        raise failure


@cli.command()
@common_options
@handle_errors
def kpi(**options):
    """Closeness indices over the motion, without continuation of the distance systems."""
    config = build_config(**options)
    run_input, motion = load_run(config)
    if run_input.is_rrr:
        raise ConfigError("indices are defined for 3-RPR designs")
    config.out_dir.mkdir(parents=True, exist_ok=True)
    frame = kpi_frame(run_input.design, motion, config.settings, config.seed, config.workers)
    frame.to_csv(config.out_dir / "kpi.csv", index=False, float_format="%.9g")
    plot_kpis(frame, config.out_dir / "kpi.svg")
    write_metrics(config.out_dir)
    console.print(f"wrote {len(frame)} rows to {config.out_dir / 'kpi.csv'}")


if __name__ == "__main__":
    cli()
