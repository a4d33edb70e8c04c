"""Exhaustive reference solvers for tiny instances.

Given local roots, an optimal tree uses a shortest-path tree from the root
inside every cluster: a tree path between two vertices of a cluster whose
induced subtree is connected never leaves the cluster. What remains is the
choice of attachment edge for every non-source cluster, which is enumerated
outright.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .instance import ClusteredGraph
from .solution import (
    CluSptSolution,
    StuckConstruction,
    cluster_spt,
    construct_solution,
)
from .uss import TaskGenome

MAX_CLUSTERS = 5
MAX_INTER_VERTICES = 16


class OracleSizeError(ValueError):
    pass


class OracleInfeasible(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleResult:
    optimal_cost: float
    optimal_tree: CluSptSolution
    enumeration_count: int


def _guard(task: ClusteredGraph) -> None:
    inter = sum(len(s) for s in task.inter_sets.per_cluster)
    if task.num_clusters > MAX_CLUSTERS or inter > MAX_INTER_VERTICES:
        raise OracleSizeError(
            f"oracle limited to {MAX_CLUSTERS} clusters and {MAX_INTER_VERTICES} inter-vertices "
            f"(got {task.num_clusters}, {inter})"
        )


def _root_distances(parent_edge, sc, entries, m):
    """Distance from source to each cluster root, or None when the choice has a cycle."""
    d_root: list[float | None] = [None] * m
    d_root[sc] = 0.0
    state = [0] * m  # 0 new, 1 on stack, 2 done
    state[sc] = 2

    def resolve(c):
        if state[c] == 2:
            return True
        if state[c] == 1:
            return False
        state[c] = 1
        k, pc, w = parent_edge[c]
        if not resolve(pc):
            return False
        d_root[c] = d_root[pc] + entries[pc].dist[k] + w
        state[c] = 2
        return True

    for c in range(m):
        if not resolve(c):
            return None
    return d_root


def oracle_fixed_roots(genome: TaskGenome, task: ClusteredGraph) -> OracleResult:
    _guard(task)
    roots = genome.roots
    m = task.num_clusters
    sc = task.source_cluster
    if roots[sc] != task.source:
        raise ValueError("source cluster root must be the source vertex")
    entries = [cluster_spt(task, c, r) for c, r in enumerate(roots)]
    sizes = [len(c) for c in task.clusters]
    intra_total = sum(e.total for e in entries)
    cluster_of = task.cluster_of

    others = [c for c in range(m) if c != sc]
    options = []
    for c in others:
        opts = [
            (k, cluster_of[k], w)
            for k, w in task.adjacency[roots[c]]
            if cluster_of[k] != c
        ]
        options.append(sorted(opts))

    best_cost, best_choice, count = math.inf, None, 0
    parent_edge: list = [None] * m
    for choice in itertools.product(*options):
        count += 1
        for c, edge in zip(others, choice):
            parent_edge[c] = edge
        d_root = _root_distances(parent_edge, sc, entries, m)
        if d_root is None:
            continue
        cost = intra_total + sum(sizes[c] * d_root[c] for c in others)
        if cost < best_cost:
            best_cost, best_choice = cost, (tuple(choice), d_root)
    if best_choice is None:
        raise OracleInfeasible("no arborescence connects the clusters through the given roots")

    choice, d_root = best_choice
    edges, dist = [], {}
    for c, e in enumerate(entries):
        for v, p in e.parent.items():
            if p is not None:
                edges.append((min(p, v), max(p, v), task.weight(p, v)))
        for v in task.clusters[c]:
            dist[v] = d_root[c] + e.dist[v]
    for c, (k, _, w) in zip(others, choice):
        edges.append((min(k, roots[c]), max(k, roots[c]), w))
    total = 0.0
    for v in range(1, task.num_vertices + 1):
        total += dist[v]
    tree = CluSptSolution(tuple(sorted(edges)), total, dist, genome)
    return OracleResult(total, tree, count)


def root_assignments(task: ClusteredGraph):
    """Every genome with the source fixed and other clusters rooted at an inter-vertex."""
    sc = task.source_cluster
    choices = [
        (task.source,) if c == sc else task.inter_sets[c] for c in range(task.num_clusters)
    ]
    for roots in itertools.product(*choices):
        yield TaskGenome(0, tuple(roots))


def oracle_optimum(task: ClusteredGraph) -> OracleResult:
    _guard(task)
    best, total_count = None, 0
    for genome in root_assignments(task):
        try:
            res = oracle_fixed_roots(genome, task)
        except OracleInfeasible:
            continue
        total_count += res.enumeration_count
        if best is None or res.optimal_cost < best.optimal_cost:
            best = res
    if best is None:
        raise OracleInfeasible("no root assignment admits a tree")
    return OracleResult(best.optimal_cost, best.optimal_tree, total_count)


def exhaustive_heuristic_optimum(task: ClusteredGraph) -> tuple[float, TaskGenome]:
    """Best cost the two-level construction reaches over all constructible root assignments."""
    _guard(task)
    best_cost, best_genome = math.inf, None
    for genome in root_assignments(task):
        try:
            cost = construct_solution(genome, task).total_cost
        except StuckConstruction:
            continue
        if cost < best_cost:
            best_cost, best_genome = cost, genome
    if best_genome is None:
        raise OracleInfeasible("no root assignment is constructible")
    return best_cost, best_genome
