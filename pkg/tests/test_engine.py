import math

import pytest

from cluspt.engine import (
    Engine,
    EngineConfig,
    EngineIndividual,
    initialize_population,
    produce_offspring,
    run,
    survivor_selection,
    update_scalar_fitness,
)
from cluspt.instance import InstanceError, generate_instance
from cluspt.solution import validate_solution
from cluspt.uss import UssIndividual

from .conftest import explicit


def two_tasks():
    return [generate_instance(30, 5, 0.3, seed=1), generate_instance(36, 5, 0.3, seed=2)]


def individual(cost, skill=0):
    ind = EngineIndividual(UssIndividual((cost,)), skill)
    ind.task_cost = cost
    return ind


def test_config_validation():
    with pytest.raises(ValueError):
        EngineConfig(pop_size=1)
    with pytest.raises(ValueError):
        EngineConfig(rmp=1.5)
    with pytest.raises(ValueError):
        EngineConfig(parents_k=1)


def test_initial_skill_factors_round_robin():
    engine = Engine(two_tasks(), EngineConfig(pop_size=4, generations=1))
    pop = initialize_population(engine)
    assert [p.skill_factor for p in pop] == [0, 1, 0, 1]
    assert all(math.isfinite(p.task_cost) for p in pop)


def test_scalar_fitness_from_ranks():
    pool = update_scalar_fitness([individual(5), individual(3), individual(9)])
    assert [p.rank for p in pool] == [2, 1, 3]
    assert [p.scalar_fitness for p in pool] == [0.5, 1.0, 1 / 3]
    assert pool[0].factorial_rank(0) == 2
    assert pool[0].factorial_rank(1) == math.inf


def test_scalar_fitness_per_task_cohort():
    pool = update_scalar_fitness([individual(5, 0), individual(50, 1), individual(3, 0)])
    assert [p.rank for p in pool] == [2, 1, 1]


def test_survivors_keep_elite_and_size():
    parents = update_scalar_fitness([individual(c) for c in (1, 2, 3, 4)])
    offspring = [individual(c) for c in (10, 11, 12, 13)]
    survivors = survivor_selection(parents, offspring, 4)
    assert len(survivors) == 4
    assert [s.task_cost for s in survivors] == [1, 2, 10, 11]


def test_survivors_keep_every_task_leader():
    parents = update_scalar_fitness([individual(1, 0), individual(2, 0), individual(3, 0), individual(9, 1)])
    offspring = [individual(c, 0) for c in (0.5, 0.6, 0.7)]
    survivors = survivor_selection(parents, offspring, 4)
    assert any(s.skill_factor == 1 for s in survivors)


def test_rmp_one_always_crosses():
    engine = Engine(two_tasks(), EngineConfig(pop_size=20, rmp=1.0))
    pop = initialize_population(engine)
    produce_offspring(pop, engine, 1)
    assert engine.stats["mutation"] == 0
    assert engine.stats["mixed_crossover"] == engine.stats["mixed"] > 0


def test_rmp_zero_never_crosses_tasks():
    engine = Engine(two_tasks(), EngineConfig(pop_size=20, rmp=0.0))
    pop = initialize_population(engine)
    for gen in range(1, 6):
        produce_offspring(pop, engine, gen)
    assert engine.stats["mixed_crossover"] == 0
    assert engine.stats["mutation"] == engine.stats["mixed"] > 0


def test_rmp_half_frequency():
    engine = Engine(two_tasks(), EngineConfig(pop_size=100, rmp=0.5, master_seed=3))
    pop = initialize_population(engine)
    for gen in range(1, 21):
        produce_offspring(pop, engine, gen)
    share = engine.stats["mixed_crossover"] / engine.stats["mixed"]
    assert 0.45 <= share <= 0.55


def test_offspring_count_and_skills():
    engine = Engine(two_tasks(), EngineConfig(pop_size=11, parents_k=3))
    pop = initialize_population(engine)
    kids = produce_offspring(pop, engine, 1)
    assert len(kids) == 11
    assert {k.skill_factor for k in kids} <= {0, 1}
    assert all(k.genome is not None for k in kids)


def test_parents_k_beyond_clusters_rejected():
    g = generate_instance(10, 2, seed=1)
    with pytest.raises(ValueError):
        Engine([g], EngineConfig(pop_size=10, parents_k=3))


def test_invalid_instance_rejected():
    bad = explicit([(1, 2, 1), (3, 4, 1)], [[1, 2], [3, 4]])
    with pytest.raises(InstanceError):
        Engine([bad], EngineConfig(pop_size=4, generations=1))


def test_path_instance_optimum_at_generation_zero(path_graph):
    res = run([path_graph], EngineConfig(pop_size=4, generations=3))
    assert res.traces[0][0] == 6.0
    assert res.best_costs == [6.0]
    assert res.best_genomes[0].roots == (1, 3)


def test_run_outputs_consistent():
    tasks = two_tasks()
    cfg = EngineConfig(pop_size=20, generations=15, master_seed=5)
    res = run(tasks, cfg)
    assert res.evaluations == 20 * 16
    for t, task in enumerate(tasks):
        trace = res.traces[t]
        assert len(trace) == 16
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert trace[-1] == res.best_costs[t] == res.best_solutions[t].total_cost
        assert validate_solution(res.best_solutions[t], task).ok


def test_run_deterministic():
    cfg = EngineConfig(pop_size=16, generations=10, master_seed=9)
    a, b = run(two_tasks(), cfg), run(two_tasks(), cfg)
    assert a.traces == b.traces and a.best_genomes == b.best_genomes


def test_memo_does_not_change_results():
    cfg = EngineConfig(pop_size=16, generations=10, master_seed=2)
    a = run(two_tasks(), cfg)
    b = run(two_tasks(), EngineConfig(**{**cfg.__dict__, "memo_enabled": False}))
    assert a.traces == b.traces
    assert b.cache_entries == 0 < a.cache_entries


def test_workers_do_not_change_results():
    cfg = EngineConfig(pop_size=16, generations=8, master_seed=4)
    a = run(two_tasks(), cfg)
    b = run(two_tasks(), EngineConfig(**{**cfg.__dict__, "workers": 3}))
    assert a.traces == b.traces and a.best_genomes == b.best_genomes


def test_single_task_never_decodes_across():
    res = run([generate_instance(30, 4, 0.3, seed=6)], EngineConfig(pop_size=10, generations=5))
    assert res.cross_decodes == 0


def test_fixed_budget_evaluation_count():
    g = generate_instance(12, 3, 0.5, seed=1)
    res = run([g], EngineConfig(pop_size=10, generations=24))
    assert res.evaluations == 250


def test_different_seeds_explore_differently():
    g = generate_instance(60, 8, 0.3, seed=3)
    pops = []
    for seed in (0, 1):
        engine = Engine([g], EngineConfig(pop_size=10, master_seed=seed))
        pops.append([p.chromosome for p in initialize_population(engine)])
    assert pops[0] != pops[1]
