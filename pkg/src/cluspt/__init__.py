"""Multifactorial evolutionary solver for the clustered shortest-path tree problem."""
from .engine import EngineConfig, RunResult, run
from .instance import (
    ClusteredGraph,
    InterVertexSets,
    compute_inter_vertex_sets,
    generate_instance,
    load_instance,
    parse_instance,
    validate_instance,
    write_instance,
)
from .solution import (
    CluSptSolution,
    SptCache,
    cluster_spt,
    construct_solution,
    evaluate_cost_direct,
    repair,
    validate_solution,
)
from .uss import TaskGenome, UnifiedSearchSpace, UssIndividual, build_uss, decode, init_individual, mpcx, mutate

__version__ = "0.1.0"
