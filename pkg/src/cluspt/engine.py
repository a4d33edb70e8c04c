"""Multifactorial evolutionary loop over K clustered shortest-path-tree tasks."""
from __future__ import annotations

import logging
import math
import random
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .instance import ClusteredGraph, InstanceError, validate_instance
from .solution import CluSptSolution, SptCache, construct_solution, repair, solution_cost
from .uss import (
    TaskGenome,
    UnifiedSearchSpace,
    UssIndividual,
    build_uss,
    decode,
    init_individual,
    mpcx,
    mutate,
)

log = logging.getLogger(__name__)


class LazyRandom:
    """A ``random.Random`` seeded on first use; most repairs never draw."""

    __slots__ = ("_seed", "_rng")

    def __init__(self, seed):
        self._seed = seed
        self._rng = None

    def __getattr__(self, name):
        if self._rng is None:
            self._rng = random.Random(self._seed)
        return getattr(self._rng, name)


@dataclass(frozen=True)
class EngineConfig:
    pop_size: int = 100
    generations: int = 500
    rmp: float = 0.5
    mut_rate: float = 0.05
    parents_k: int = 2
    master_seed: int = 0
    memo_enabled: bool = True
    workers: int = 1

    def __post_init__(self):
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.parents_k < 2:
            raise ValueError("parents_k must be >= 2")
        if self.parents_k > self.pop_size:
            raise ValueError("parents_k cannot exceed pop_size")
        if not 0.0 <= self.rmp <= 1.0 or not 0.0 <= self.mut_rate <= 1.0:
            raise ValueError("rmp and mut_rate must lie in [0, 1]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class EngineIndividual:
    chromosome: UssIndividual
    skill_factor: int  # 0-based task index
    task_cost: float = math.inf
    genome: TaskGenome | None = None
    fixes: int = 0
    rank: float = math.inf
    scalar_fitness: float = 0.0

    def factorial_rank(self, task: int) -> float:
        return self.rank if task == self.skill_factor else math.inf


@dataclass
class RunResult:
    best_costs: list[float]
    best_genomes: list[TaskGenome]
    best_solutions: list[CluSptSolution]
    traces: list[list[float]]
    wall_time: float
    evaluations: int
    config: dict = field(default_factory=dict)
    cache_entries: int = 0
    cross_decodes: int = 0


class Engine:
    """Holds the state shared by one run: tasks, search space, cache, counters."""

    def __init__(self, tasks: Sequence[ClusteredGraph], config: EngineConfig):
        for t in tasks:
            report = validate_instance(t)
            if not report.ok:
                raise InstanceError(f"instance {t.id!r} invalid: {report}")
        self.tasks = list(tasks)
        self.config = config
        self.uss: UnifiedSearchSpace = build_uss(self.tasks)
        if self.uss.m >= 2 and config.parents_k > self.uss.m:
            raise ValueError(f"parents_k={config.parents_k} exceeds unified cluster count {self.uss.m}")
        self.cache = SptCache(enabled=config.memo_enabled)
        self.rng = random.Random(config.master_seed)
        self.evaluations = 0
        # variation branch counts; "mixed" groups are those spanning several skill factors
        self.stats: Counter[str] = Counter()

    def stream(self, generation: int, ordinal: int) -> LazyRandom:
        return LazyRandom(f"{self.config.master_seed}/{generation}/{ordinal}")

    def evaluate(self, ind: EngineIndividual, rng: random.Random) -> EngineIndividual:
        task = self.tasks[ind.skill_factor]
        genome = decode(ind.chromosome, self.uss, ind.skill_factor)
        genome, fixes = repair(genome, task, rng)
        ind.genome = genome
        ind.fixes = fixes
        ind.task_cost = solution_cost(genome, task, self.cache)
        return ind

    def evaluate_all(self, pool: list[EngineIndividual], generation: int) -> None:
        jobs = [(ind, self.stream(generation, i)) for i, ind in enumerate(pool)]
        if self.config.workers > 1:
            with ThreadPoolExecutor(self.config.workers) as ex:
                list(ex.map(lambda job: self.evaluate(*job), jobs))
        else:
            for ind, rng in jobs:
                self.evaluate(ind, rng)
        self.evaluations += len(pool)


def update_scalar_fitness(pool: list[EngineIndividual]) -> list[EngineIndividual]:
    cohorts: dict[int, list[int]] = {}
    for i, ind in enumerate(pool):
        cohorts.setdefault(ind.skill_factor, []).append(i)
    for members in cohorts.values():
        members.sort(key=lambda i: pool[i].task_cost)  # stable: insertion order on ties
        for rank, i in enumerate(members, start=1):
            pool[i].rank = rank
            pool[i].scalar_fitness = 1.0 / rank
    return pool


def initialize_population(engine: Engine) -> list[EngineIndividual]:
    k = engine.uss.num_tasks
    pop = [
        EngineIndividual(init_individual(engine.uss, engine.rng), i % k)
        for i in range(engine.config.pop_size)
    ]
    engine.evaluate_all(pop, 0)
    return update_scalar_fitness(pop)


def _post_mutation(child: UssIndividual, engine: Engine) -> UssIndividual:
    # mut_rate gates one extra mutation per offspring after variation
    if engine.rng.random() < engine.config.mut_rate:
        return mutate(child, engine.uss, engine.rng)
    return child


def produce_offspring(population: list[EngineIndividual], engine: Engine, generation: int) -> list[EngineIndividual]:
    cfg, rng, uss = engine.config, engine.rng, engine.uss
    offspring: list[EngineIndividual] = []
    while len(offspring) < cfg.pop_size:
        group = rng.sample(population, cfg.parents_k)
        skills = [p.skill_factor for p in group]
        same = all(s == skills[0] for s in skills)
        if not same:
            engine.stats["mixed"] += 1
        if uss.m >= cfg.parents_k and (same or rng.random() < cfg.rmp):
            children = mpcx([p.chromosome for p in group], rng)
            born = [(c, rng.choice(skills)) for c in children]
            engine.stats["crossover" if same else "mixed_crossover"] += 1
        else:
            born = [(mutate(p.chromosome, uss, rng), p.skill_factor) for p in group]
            engine.stats["mutation"] += 1
        for chrom, skill in born:
            offspring.append(EngineIndividual(_post_mutation(chrom, engine), skill))
    del offspring[cfg.pop_size :]
    engine.evaluate_all(offspring, generation)
    return offspring


def survivor_selection(
    parents: list[EngineIndividual], offspring: list[EngineIndividual], pop_size: int
) -> list[EngineIndividual]:
    elite = sorted(parents, key=lambda p: -p.scalar_fitness)[: math.ceil(len(parents) / 2)]
    pool = update_scalar_fitness(elite + offspring)
    order = sorted(range(len(pool)), key=lambda i: -pool[i].scalar_fitness)
    leaders = [i for i in order if pool[i].rank == 1]
    chosen = leaders + [i for i in order if pool[i].rank != 1]
    return [pool[i] for i in chosen[: max(pop_size, len(leaders))]]


def _best_per_task(pool: list[EngineIndividual], k: int) -> list[EngineIndividual | None]:
    best: list[EngineIndividual | None] = [None] * k
    for ind in pool:
        b = best[ind.skill_factor]
        if b is None or ind.task_cost < b.task_cost:
            best[ind.skill_factor] = ind
    return best


def run(tasks: Sequence[ClusteredGraph], config: EngineConfig) -> RunResult:
    start = time.perf_counter()
    engine = Engine(tasks, config)
    k = len(engine.tasks)
    population = initialize_population(engine)

    incumbents = _best_per_task(population, k)
    traces = [[ind.task_cost if ind else math.inf] for ind in incumbents]
    for gen in range(1, config.generations + 1):
        offspring = produce_offspring(population, engine, gen)
        population = survivor_selection(population, offspring, config.pop_size)
        for t, cand in enumerate(_best_per_task(population, k)):
            if cand is not None and (incumbents[t] is None or cand.task_cost < incumbents[t].task_cost):
                incumbents[t] = cand
            traces[t].append(incumbents[t].task_cost if incumbents[t] else math.inf)
        if gen % 50 == 0:
            log.debug("generation %d best %s", gen, [tr[-1] for tr in traces])

    genomes, solutions = [], []
    for t, ind in enumerate(incumbents):
        if ind is None:
            raise RuntimeError(f"task {t} never received an individual; raise pop_size")
        genomes.append(ind.genome)
        solutions.append(construct_solution(ind.genome, engine.tasks[t], engine.cache))
    wall = time.perf_counter() - start
    return RunResult(
        best_costs=[ind.task_cost for ind in incumbents],
        best_genomes=genomes,
        best_solutions=solutions,
        traces=traces,
        wall_time=wall,
        evaluations=engine.evaluations,
        config=asdict(config),
        cache_entries=len(engine.cache),
        cross_decodes=engine.uss.cross_decodes,
    )
