"""Genome repair, two-level tree construction and memoized cost evaluation."""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Callable

from .instance import ClusteredGraph, InterVertexSets, ValidationReport
from .uss import TaskGenome


class InfeasibleTask(RuntimeError):
    pass


class DisconnectedCluster(RuntimeError):
    pass


class StuckConstruction(RuntimeError):
    pass


class InvalidRoot(ValueError):
    pass


@dataclass(frozen=True)
class SptEntry:
    """Shortest-path tree of one cluster's induced subgraph from ``root``.

    ``attach`` memoizes, per foreign vertex ``r``, the cheapest way to reach
    ``r`` from the root through one edge leaving the cluster: the pair
    ``(dist[k] + w(k, r), k)`` minimized over cluster vertices ``k``, lower
    ``k`` on ties (``None`` when ``r`` has no edge into the cluster).
    """

    cluster: int
    root: int
    parent: dict[int, int | None]
    dist: dict[int, float]
    total: float
    attach: dict[int, tuple[float, int] | None] = field(default_factory=dict, compare=False, repr=False)

    def attachment(self, task: ClusteredGraph, r: int) -> tuple[float, int] | None:
        try:
            return self.attach[r]
        except KeyError:
            pass
        best = None
        lst = task.cross_links[r].get(self.cluster)
        if lst:
            dist = self.dist
            for k, w in lst:
                a = dist[k] + w
                if best is None or a < best[0]:
                    best = (a, k)
        self.attach[r] = best
        return best


class SptCache:
    """Memo of intra-cluster shortest-path trees keyed by (task, cluster, root).

    Entries are deterministic, so two threads racing on the same key simply
    store equal values. With ``enabled=False`` every lookup recomputes.
    """

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._store: dict[tuple[int, int, int], SptEntry] = {}
        self.hits = 0
        self.misses = 0

    def get(self, key: tuple[int, int, int], compute: Callable[[], SptEntry]) -> SptEntry:
        entry = self.lookup(key)
        if entry is None:
            entry = compute()
            self.store(key, entry)
        return entry

    def lookup(self, key: tuple[int, int, int]) -> SptEntry | None:
        if not self.enabled:
            self.misses += 1
            return None
        entry = self._store.get(key)
        if entry is None:
            self.misses += 1
        else:
            self.hits += 1
        return entry

    def store(self, key: tuple[int, int, int], entry: SptEntry) -> None:
        if self.enabled:
            self._store[key] = entry

    def __len__(self) -> int:
        return len(self._store)

    def __contains__(self, key) -> bool:
        return key in self._store


@dataclass(frozen=True)
class CluSptSolution:
    edges: tuple[tuple[int, int, float], ...]
    total_cost: float
    dist_from_source: dict[int, float]
    roots: TaskGenome
    join_order: tuple[int, ...] = ()


# --------------------------------------------------------------------------
# repair


def repair(
    genome: TaskGenome,
    task: ClusteredGraph,
    rng: random.Random,
    inter_sets: InterVertexSets | None = None,
) -> tuple[TaskGenome, int]:
    """Re-root clusters until every cluster can attach through its root.

    Returns the repaired genome and the number of re-rooted clusters; the
    forced source-cluster root is not counted.
    """
    inter = (inter_sets or task.inter_sets).per_cluster
    links = task.cross_links
    cluster_of = task.cluster_of
    roots = list(genome.roots)
    m = len(roots)
    sc = task.source_cluster
    roots[sc] = task.source

    joined = [False] * m
    touching = [False] * m
    open_clusters = [c for c in range(m) if c != sc]

    def join(c: int) -> None:
        joined[c] = True
        if c != sc:
            open_clusters.remove(c)
        for c2 in open_clusters:
            if c in links[roots[c2]]:
                touching[c2] = True

    join(sc)
    fixes = 0
    for _ in range(m - 1):
        nxt = next((c for c in open_clusters if touching[c]), None)
        if nxt is not None:
            join(nxt)
            continue
        candidates = [
            k
            for c in range(m)
            if joined[c]
            for h in inter[c]
            for c2, nbrs in links[h].items()
            if not joined[c2]
            for k, _ in nbrs
        ]
        if not candidates:
            raise InfeasibleTask(f"task {task.id!r}: clusters unreachable from the source cluster")
        k = rng.choice(candidates)
        c2 = cluster_of[k]
        roots[c2] = k
        fixes += 1
        join(c2)
    return TaskGenome(genome.task_index, tuple(roots)), fixes


# --------------------------------------------------------------------------
# level 1: intra-cluster shortest-path trees


def _dijkstra(task: ClusteredGraph, cluster_index: int, root: int) -> SptEntry:
    adj = task.intra_adjacency
    dist = {root: 0.0}
    parent: dict[int, int | None] = {root: None}
    done = set()
    heap = [(0.0, root)]
    while heap:
        d, u = heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj[u]:
            nd = d + w
            old = dist.get(v)
            if old is None or nd < old:
                dist[v] = nd
                parent[v] = u
                heappush(heap, (nd, v))
    cluster = task.clusters[cluster_index]
    if len(done) != len(cluster):
        raise DisconnectedCluster(f"cluster {cluster_index} not connected from root {root}")
    total = 0.0
    for v in cluster:
        total += dist[v]
    return SptEntry(cluster_index, root, parent, dist, total)


def cluster_spt(
    task: ClusteredGraph,
    cluster_index: int,
    root: int,
    cache: SptCache | None = None,
    task_index: int = 0,
) -> SptEntry:
    if task.cluster_of.get(root) != cluster_index:
        raise InvalidRoot(f"vertex {root} is not in cluster {cluster_index}")
    if cache is None:
        return _dijkstra(task, cluster_index, root)
    key = (task_index, cluster_index, root)
    entry = cache.lookup(key)
    if entry is None:
        entry = _dijkstra(task, cluster_index, root)
        cache.store(key, entry)
    return entry


# --------------------------------------------------------------------------
# level 2: greedy cluster joining


def _spt_entries(genome, task, cache, task_index):
    roots = genome.roots
    if len(roots) != task.num_clusters:
        raise InvalidRoot(f"genome has {len(roots)} roots for {task.num_clusters} clusters")
    ti = genome.task_index if task_index is None else task_index
    return [cluster_spt(task, c, r, cache, ti) for c, r in enumerate(roots)]


def _join_clusters(roots, task: ClusteredGraph, entries: list[SptEntry]):
    """Greedy attachment of clusters to the growing tree.

    Returns ``(total, d_root, joins)`` where ``joins`` lists ``(k, r, c)``:
    cluster ``c`` attached through edge ``(k, r)``. Ties go to the lower
    cluster index, then the lower attachment vertex.
    """
    m = len(roots)
    sc = task.source_cluster
    if roots[sc] != task.source:
        raise InvalidRoot(f"source cluster root is {roots[sc]}, expected source {task.source}")
    sizes = task.cluster_sizes
    open_clusters = [c for c in range(m) if c != sc]
    d_root = [0.0] * m
    best: list[tuple[float, int, float] | None] = [None] * m

    total = 0.0
    for e in entries:
        total += e.total
    joins = []
    c = sc
    while True:
        # offer every open cluster its cheapest edge into cluster c
        dc = d_root[c]
        attachment = entries[c].attachment
        for c2 in open_clusters:
            att = attachment(task, roots[c2])
            if att is None:
                continue
            via = dc + att[0]
            cand = via * sizes[c2]
            b = best[c2]
            if b is None or cand < b[0] or (cand == b[0] and att[1] < b[1]):
                best[c2] = (cand, att[1], via)
        if not open_clusters:
            break
        pick = None
        pick_cost = math.inf
        for c2 in open_clusters:
            b = best[c2]
            if b is not None and (pick is None or b[0] < pick_cost):
                pick, pick_cost = c2, b[0]
        if pick is None:
            raise StuckConstruction("no unjoined cluster has an edge from its root into the tree")
        cost, k, via = best[pick]
        total += cost
        d_root[pick] = via
        joins.append((k, roots[pick], pick))
        open_clusters.remove(pick)
        c = pick
    return total, d_root, joins


def solution_cost(
    genome: TaskGenome,
    task: ClusteredGraph,
    cache: SptCache | None = None,
    task_index: int | None = None,
) -> float:
    """Cost of the tree ``construct_solution`` would build, without materializing it."""
    entries = _spt_entries(genome, task, cache, task_index)
    return _join_clusters(genome.roots, task, entries)[0]


def construct_solution(
    genome: TaskGenome,
    task: ClusteredGraph,
    cache: SptCache | None = None,
    task_index: int | None = None,
) -> CluSptSolution:
    entries = _spt_entries(genome, task, cache, task_index)
    total, d_root, joins = _join_clusters(genome.roots, task, entries)
    edges = []
    dist: dict[int, float] = {}
    for c, entry in enumerate(entries):
        for v, p in entry.parent.items():
            if p is not None:
                edges.append((min(p, v), max(p, v), task.weight(p, v)))
        base = d_root[c]
        for v in task.clusters[c]:
            dist[v] = base + entry.dist[v]
    for k, r, _ in joins:
        edges.append((min(k, r), max(k, r), task.weight(k, r)))
    return CluSptSolution(tuple(sorted(edges)), total, dist, genome, tuple(c for _, _, c in joins))


# --------------------------------------------------------------------------
# independent checks


def _tree_distances(edges, task: ClusteredGraph):
    """BFS over the edge set from the source; returns (dist, parent) or raises."""
    n = task.num_vertices
    if len(edges) != n - 1:
        raise ValueError(f"{len(edges)} edges, a spanning tree on {n} vertices needs {n - 1}")
    adj: dict[int, list[tuple[int, float]]] = {}
    for u, v, w in edges:
        adj.setdefault(u, []).append((v, w))
        adj.setdefault(v, []).append((u, w))
    s = task.source
    dist = {s: 0.0}
    parent: dict[int, int | None] = {s: None}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for v, w in adj.get(u, ()):
            if v not in dist:
                dist[v] = dist[u] + w
                parent[v] = u
                queue.append(v)
    if len(dist) != n:
        raise ValueError(f"edge set reaches {len(dist)} of {n} vertices")
    return dist, parent


def evaluate_cost_direct(solution: CluSptSolution, task: ClusteredGraph) -> float:
    """Sum of source-to-vertex tree distances by plain traversal of the edge set."""
    dist, _ = _tree_distances(solution.edges, task)
    total = 0.0
    for v in range(1, task.num_vertices + 1):
        total += dist[v]
    return total


def validate_solution(solution: CluSptSolution, task: ClusteredGraph, rel_tol: float = 1e-9) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    weights = task.weights
    for u, v, w in solution.edges:
        if (u, v) not in weights:
            bad.append(f"edge ({u},{v}) not in graph")
        elif weights[(u, v)] != w:
            bad.append(f"edge ({u},{v}) carries weight {w}, graph says {weights[(u, v)]}")
    try:
        dist, parent = _tree_distances(solution.edges, task)
    except ValueError as exc:
        bad.append(f"not a spanning tree: {exc}")
        dist = parent = None

    cl = task.cluster_of
    m = task.num_clusters
    intra = [[] for _ in range(m)]
    inter_count = 0
    for u, v, w in solution.edges:
        if cl[u] == cl[v]:
            intra[cl[u]].append((u, v, w))
        else:
            inter_count += 1
    for j, cluster in enumerate(task.clusters):
        adj: dict[int, list[tuple[int, float]]] = {}
        for u, v, w in intra[j]:
            adj.setdefault(u, []).append((v, w))
            adj.setdefault(v, []).append((u, w))
        members = set(cluster)
        seen = {cluster[0]}
        queue = deque([cluster[0]])
        while queue:
            u = queue.popleft()
            for v, _ in adj.get(u, ()):
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        if len(intra[j]) != len(cluster) - 1 or seen != members:
            bad.append(f"cluster {j} subgraph disconnected")
    if inter_count != m - 1:
        bad.append(f"{inter_count} inter-cluster edges, expected {m - 1}")

    if parent is not None:
        entries: list[list[int]] = [[] for _ in range(m)]
        for v, p in parent.items():
            if p is not None and cl[p] != cl[v]:
                entries[cl[v]].append(v)
        sc = task.source_cluster
        roots = solution.roots.roots if solution.roots is not None else None
        for j in range(m):
            found = sorted(entries[j])
            if j == sc:
                if found:
                    bad.append(f"two local roots in source cluster {j} (re-entered at {found})")
                continue
            if len(found) > 1:
                bad.append(f"two local roots in cluster {j} (entered at {found})")
            elif roots is not None and found and found[0] != roots[j]:
                bad.append(f"cluster {j} entered at {found[0]}, genome root is {roots[j]}")

        direct = 0.0
        for v in range(1, task.num_vertices + 1):
            direct += dist[v]
        if not math.isclose(direct, solution.total_cost, rel_tol=rel_tol, abs_tol=1e-12):
            bad.append(f"total_cost {solution.total_cost} disagrees with traversal {direct}")
    return report
