from rpr_singularity.config import DEFAULT_SEED, resolve_cache_dir
from rpr_singularity.homotopy import TrackerSettings
from rpr_singularity.lagrangian import build_system
from rpr_singularity.model import Interpretation
from rpr_singularity.pipeline import RRR_BRANCHES, applicable_branches, derived_seed, run_ab_initio


def create_cache(cache_dir=None, seed=DEFAULT_SEED, rrr=False):
    # generic solutions are design-independent
    cache_dir = resolve_cache_dir(cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    settings = TrackerSettings()

    # Anchor systems of every interpretation
    systems = [
        build_system(interp, plan.kind, plan.variant)
        for interp in (*Interpretation.all_nine(), Interpretation.preliminary())
        for plan in applicable_branches(interp)
        if not plan.closed_form
    ]
    # 3-RRR parallel and leg systems
    if rrr:
        systems += [build_system(None, kind) for kind in RRR_BRANCHES]

    seen = set()
    for critical in systems:
        if critical.key in seen:
            continue
        seen.add(critical.key)
        solutions = run_ab_initio(critical, settings, derived_seed(seed, critical.key), cache_dir)
        print(f"{critical.key}: {len(solutions)} solutions")

    print(f"Start-solution cache created successfully in {cache_dir}.")


if __name__ == "__main__":
    create_cache()
