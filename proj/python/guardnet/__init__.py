"""Python bindings for the guardnet library."""

from ._guardnet import (
    CycleHouseSpec,
    RunConfig,
    Graph,
    SbmSpec,
    count_orbits,
    count_triangles,
    gen_cycle_house,
    gen_sbm,
    load_config,
    parse_config,
    run_experiment,
    scaling_bench,
)

__all__ = [
    "CycleHouseSpec",
    "RunConfig",
    "Graph",
    "SbmSpec",
    "count_orbits",
    "count_triangles",
    "gen_cycle_house",
    "gen_sbm",
    "load_config",
    "parse_config",
    "run_experiment",
    "scaling_bench",
]
