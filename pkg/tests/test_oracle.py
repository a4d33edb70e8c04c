import random

import pytest

from cluspt.engine import EngineConfig, run
from cluspt.oracle import (
    OracleInfeasible,
    OracleSizeError,
    exhaustive_heuristic_optimum,
    oracle_fixed_roots,
    oracle_optimum,
    root_assignments,
)
from cluspt.instance import generate_instance
from cluspt.solution import construct_solution, evaluate_cost_direct, validate_solution
from cluspt.uss import TaskGenome

from .conftest import explicit

K4 = [(u, v, 1) for u in range(1, 5) for v in range(u + 1, 5)]


def test_path_optimum(path_graph):
    res = oracle_optimum(path_graph)
    assert res.optimal_cost == 6.0
    assert res.optimal_tree.roots.roots == (1, 3)


def test_k4_fixed_roots():
    g = explicit(K4, [[1, 2], [3, 4]])
    res = oracle_fixed_roots(TaskGenome(0, (1, 3)), g)
    # attach 3 to 1 (cost 2 + 2*1) or to 2 (cost 2 + 2*2)
    assert res.optimal_cost == 4.0
    assert res.enumeration_count == 2
    assert (1, 3, 1.0) in res.optimal_tree.edges


def test_single_cluster_optimum_is_spt():
    g = explicit([(1, 2, 2), (2, 3, 2), (1, 3, 5)], [[1, 2, 3]])
    res = oracle_optimum(g)
    assert res.optimal_cost == 0 + 2 + 4
    assert res.enumeration_count == 1


def test_oracle_tree_is_valid():
    g = generate_instance(10, 3, 0.5, seed=4)
    res = oracle_optimum(g)
    assert validate_solution(res.optimal_tree, g).ok
    assert evaluate_cost_direct(res.optimal_tree, g) == pytest.approx(res.optimal_cost, rel=1e-12)


def test_oracle_size_guard():
    g = generate_instance(30, 6, 0.5, seed=1)
    with pytest.raises(OracleSizeError):
        oracle_optimum(g)


def test_fixed_roots_infeasible(path_graph):
    with pytest.raises(OracleInfeasible):
        oracle_fixed_roots(TaskGenome(0, (1, 4)), path_graph)


def test_fixed_roots_requires_source(path_graph):
    with pytest.raises(ValueError):
        oracle_fixed_roots(TaskGenome(0, (2, 3)), path_graph)


def test_root_assignments_fix_source(path_graph):
    assert [g.roots for g in root_assignments(path_graph)] == [(1, 3)]


def test_sandwich_on_tiny_instances():
    rng = random.Random(0)
    for i in range(25):
        m = rng.randint(2, 4)
        n = rng.randint(m + 1, 10)
        g = generate_instance(n, m, rng.uniform(0.2, 0.6), seed=1000 + i)
        exact = oracle_optimum(g).optimal_cost
        heuristic, genome = exhaustive_heuristic_optimum(g)
        assert exact <= heuristic + 1e-9
        assert oracle_fixed_roots(genome, g).optimal_cost <= construct_solution(genome, g).total_cost + 1e-9
        res = run([g], EngineConfig(pop_size=10, generations=5, master_seed=i))
        assert res.best_costs[0] >= heuristic - 1e-9
