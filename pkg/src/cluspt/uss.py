"""Unified search space over K tasks and the operators acting on it."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .instance import ClusteredGraph


class CorruptIndividual(ValueError):
    pass


@dataclass(frozen=True)
class TaskView:
    """What decoding needs to know about one task."""

    inter: tuple[tuple[int, ...], ...]
    source: int
    source_cluster: int

    @property
    def num_clusters(self) -> int:
        return len(self.inter)


@dataclass(frozen=True)
class UssIndividual:
    genes: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.genes)

    def __getitem__(self, j):
        return self.genes[j]


@dataclass(frozen=True)
class TaskGenome:
    task_index: int
    roots: tuple[int, ...]


@dataclass(eq=False)
class UnifiedSearchSpace:
    tasks: tuple[TaskView, ...]
    graphs: tuple[ClusteredGraph, ...] = ()
    m: int = field(init=False)
    unified_clusters: tuple[tuple[int, ...], ...] = field(init=False)
    cross_decodes: int = field(default=0, init=False)

    def __post_init__(self):
        if not self.tasks:
            raise ValueError("need at least one task")
        self.m = max(t.num_clusters for t in self.tasks)
        clusters = []
        for j in range(self.m):
            union = {v for t in self.tasks if j < t.num_clusters for v in t.inter[j]}
            clusters.append(tuple(sorted(union)))
        if self.m == 1 and not clusters[0]:
            clusters[0] = tuple(sorted({t.source for t in self.tasks}))
        self.unified_clusters = tuple(clusters)
        self._members = [set(c) for c in clusters]
        # position of each vertex in every task's ordered inter list, per cluster
        self._index: list[dict[int, dict[int, int]]] = []
        for j in range(self.m):
            table: dict[int, dict[int, int]] = {}
            for h, t in enumerate(self.tasks):
                if j < t.num_clusters:
                    for pos, v in enumerate(t.inter[j]):
                        table.setdefault(v, {})[h] = pos
            self._index.append(table)
        self._decode_table = [self._build_decode_table(i) for i in range(len(self.tasks))]

    @classmethod
    def from_inter_lists(cls, inter_lists: Sequence[Sequence[Sequence[int]]], sources: Sequence[int]):
        """Build directly from ordered inter-vertex lists (one list of clusters per task).

        Each source is placed in the cluster whose list contains it, or in no
        cluster (index -1) when it is absent from every list.
        """
        views = []
        for lists, s in zip(inter_lists, sources):
            sc = next((j for j, lst in enumerate(lists) if s in lst), -1)
            views.append(TaskView(tuple(tuple(lst) for lst in lists), s, sc))
        return cls(tuple(views))

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def _build_decode_table(self, i: int) -> list[dict[int, tuple[int, bool]]]:
        task = self.tasks[i]
        tables = []
        for j in range(task.num_clusters):
            own = task.inter[j]
            own_set = set(own)
            table = {}
            for l in self.unified_clusters[j]:
                if l in own_set or not own:
                    table[l] = (l, False)
                else:
                    p = max(pos for h, pos in self._index[j][l].items() if h != i)
                    table[l] = (own[p % len(own)], True)
            tables.append(table)
        return tables

    def contains(self, j: int, v: int) -> bool:
        return v in self._members[j]


def build_uss(tasks: Sequence[ClusteredGraph]) -> UnifiedSearchSpace:
    views = tuple(TaskView(g.inter_sets.per_cluster, g.source, g.source_cluster) for g in tasks)
    return UnifiedSearchSpace(views, tuple(tasks))


def init_individual(uss: UnifiedSearchSpace, rng: random.Random) -> UssIndividual:
    return UssIndividual(tuple(rng.choice(c) for c in uss.unified_clusters))


def decode(ind: UssIndividual, uss: UnifiedSearchSpace, task_index: int) -> TaskGenome:
    """Map a unified chromosome to local roots for one task.

    A gene that is not an inter-vertex of the task's cluster is translated
    through its largest position among the other tasks' lists, taken modulo
    the size of this task's list.
    """
    task = uss.tasks[task_index]
    tables = uss._decode_table[task_index]
    roots = []
    for j in range(task.num_clusters):
        if j == task.source_cluster:
            roots.append(task.source)
            continue
        try:
            root, crossed = tables[j][ind.genes[j]]
        except KeyError:
            raise CorruptIndividual(f"gene {ind.genes[j]} not in unified cluster {j}") from None
        if crossed:
            uss.cross_decodes += 1
        roots.append(root)
    return TaskGenome(task_index, tuple(roots))


def mutate(ind: UssIndividual, uss: UnifiedSearchSpace, rng: random.Random) -> UssIndividual:
    k = rng.randrange(len(ind.genes))
    genes = list(ind.genes)
    genes[k] = rng.choice(uss.unified_clusters[k])
    return UssIndividual(tuple(genes))


def segment_source(j: int, t: int, n: int) -> int:
    """1-based parent index that offspring ``j`` copies segment ``t`` from (n >= 3)."""
    if t == j or t == n:
        return j
    src = j % n + 1
    if src == t:
        src = (j + 1) % n + 1
    return src


def _cut_points(m: int, n: int, rng: random.Random) -> list[int]:
    if n == 2:
        return sorted(rng.sample(range(1, m + 1), 2))
    return sorted(rng.sample(range(1, m), n - 1))


def mpcx(
    parents: Sequence[UssIndividual],
    rng: random.Random,
    cuts: Sequence[int] | None = None,
) -> list[UssIndividual]:
    """Multi-parent crossover. ``cuts`` are 1-based and only given by tests."""
    n = len(parents)
    m = len(parents[0].genes)
    if n < 2 or n > m:
        raise ValueError(f"mpcx needs 2 <= parents <= {m}, got {n}")
    if any(len(p.genes) != m for p in parents):
        raise ValueError("parents differ in length")
    cps = list(cuts) if cuts is not None else _cut_points(m, n, rng)

    if n == 2:
        a, b = list(parents[0].genes), list(parents[1].genes)
        lo, hi = cps[0] - 1, cps[1]
        a[lo:hi], b[lo:hi] = b[lo:hi], a[lo:hi]
        return [UssIndividual(tuple(a)), UssIndividual(tuple(b))]

    bounds = [0, *cps, m]
    children = []
    for j in range(1, n + 1):
        genes: list[int] = []
        for t in range(1, n + 1):
            src = parents[segment_source(j, t, n) - 1].genes
            genes.extend(src[bounds[t - 1] : bounds[t]])
        children.append(UssIndividual(tuple(genes)))
    return children
