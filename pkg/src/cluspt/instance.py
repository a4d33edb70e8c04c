"""Clustered graph instances: model, validation, file I/O and generation."""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

EUC_2D = "EUC_2D"
EXPLICIT = "EXPLICIT"

Edge = tuple[int, int, float]


class InstanceError(ValueError):
    """Raised for instances that cannot be used (bad parameters, failed validation)."""


class ParseError(InstanceError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def euclidean(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)


@dataclass(frozen=True)
class ClusteredGraph:
    """One CluSPT task.

    Vertices are numbered ``1..num_vertices``. Clusters are indexed from 0
    internally; the file format numbers them from 1. ``edges`` holds each
    undirected edge once as ``(u, v, w)`` with ``u < v``.
    """

    id: str
    num_vertices: int
    edges: tuple[Edge, ...]
    clusters: tuple[tuple[int, ...], ...]
    source: int
    coord_mode: str = EXPLICIT
    coords: tuple[tuple[float, float], ...] | None = field(default=None, compare=True)

    @property
    def num_clusters(self) -> int:
        return len(self.clusters)

    @cached_property
    def cluster_of(self) -> dict[int, int]:
        return {v: j for j, cluster in enumerate(self.clusters) for v in cluster}

    @cached_property
    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        adj: dict[int, list[tuple[int, float]]] = {v: [] for v in range(1, self.num_vertices + 1)}
        for u, v, w in self.edges:
            adj.setdefault(u, []).append((v, w))
            adj.setdefault(v, []).append((u, w))
        return adj

    @cached_property
    def weights(self) -> dict[tuple[int, int], float]:
        table = {}
        for u, v, w in self.edges:
            table[(u, v)] = w
            table[(v, u)] = w
        return table

    @cached_property
    def cluster_sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    @cached_property
    def intra_adjacency(self) -> dict[int, list[tuple[int, float]]]:
        cl = self.cluster_of
        return {u: [(v, w) for v, w in nbrs if cl[v] == cl[u]] for u, nbrs in self.adjacency.items()}

    @cached_property
    def cross_links(self) -> dict[int, dict[int, list[tuple[int, float]]]]:
        """vertex -> {other cluster: [(neighbour, weight), ...]} in ascending neighbour order."""
        cl = self.cluster_of
        links: dict[int, dict[int, list[tuple[int, float]]]] = {}
        for u, nbrs in self.adjacency.items():
            groups: dict[int, list[tuple[int, float]]] = {}
            for v, w in sorted(nbrs):
                if cl[v] != cl[u]:
                    groups.setdefault(cl[v], []).append((v, w))
            links[u] = groups
        return links

    @property
    def source_cluster(self) -> int:
        return self.cluster_of[self.source]

    @cached_property
    def inter_sets(self) -> "InterVertexSets":
        return compute_inter_vertex_sets(self)

    def weight(self, u: int, v: int) -> float:
        return self.weights[(u, v)]


@dataclass(frozen=True)
class InterVertexSets:
    """Per cluster, the ascending list of vertices with an edge leaving the cluster."""

    per_cluster: tuple[tuple[int, ...], ...]

    def __getitem__(self, j: int) -> tuple[int, ...]:
        return self.per_cluster[j]

    def __len__(self) -> int:
        return len(self.per_cluster)


def compute_inter_vertex_sets(graph: ClusteredGraph) -> InterVertexSets:
    cluster_of = graph.cluster_of
    found: list[set[int]] = [set() for _ in graph.clusters]
    for u, v, _ in graph.edges:
        cu, cv = cluster_of[u], cluster_of[v]
        if cu != cv:
            found[cu].add(u)
            found[cv].add(v)
    return InterVertexSets(tuple(tuple(sorted(s)) for s in found))


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        return "ok" if self.ok else "\n".join(self.violations)


def _connected(vertices: Iterable[int], adj: dict[int, list[tuple[int, float]]]) -> bool:
    members = set(vertices)
    if not members:
        return True
    start = next(iter(members))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v, _ in adj.get(u, ()):
            if v in members and v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == len(members)


def validate_instance(graph: ClusteredGraph) -> ValidationReport:
    report = ValidationReport()
    bad = report.violations
    n = graph.num_vertices
    if n < 1:
        bad.append(f"dimension {n} < 1")
    if not 1 <= graph.source <= n:
        bad.append(f"source {graph.source} out of range 1..{n}")

    owner: dict[int, int] = {}
    for j, cluster in enumerate(graph.clusters):
        if not cluster:
            bad.append(f"cluster {j} is empty")
        for v in cluster:
            if not 1 <= v <= n:
                bad.append(f"cluster {j} lists vertex {v} out of range")
            elif v in owner:
                bad.append(f"vertex {v} in two clusters")
            else:
                owner[v] = j
    missing = [v for v in range(1, n + 1) if v not in owner]
    for v in missing:
        bad.append(f"vertex {v} in no cluster")

    seen_pairs: set[tuple[int, int]] = set()
    edges_ok = True
    for u, v, w in graph.edges:
        if u == v:
            bad.append(f"self-loop on vertex {u}")
            edges_ok = False
        if not (1 <= u <= n and 1 <= v <= n):
            bad.append(f"edge ({u},{v}) references a vertex out of range")
            edges_ok = False
            continue
        pair = (min(u, v), max(u, v))
        if pair in seen_pairs:
            bad.append(f"duplicate edge ({pair[0]},{pair[1]})")
        seen_pairs.add(pair)
        if not (math.isfinite(w) and w >= 0):
            bad.append(f"edge ({u},{v}) has invalid weight {w}")

    if edges_ok and n >= 1:
        adj = graph.adjacency
        if not _connected(range(1, n + 1), adj):
            bad.append("graph disconnected")
        if not missing and len(owner) == n:
            for j, cluster in enumerate(graph.clusters):
                if not _connected(cluster, adj):
                    bad.append(f"cluster {j} induced subgraph disconnected")
    return report


# --------------------------------------------------------------------------
# file format

_HEADER_KEYS = ("NAME", "TYPE", "DIMENSION", "NUMBER_OF_CLUSTERS", "SOURCE_VERTEX", "EDGE_WEIGHT_TYPE")
_SECTIONS = ("NODE_COORD_SECTION", "EDGE_SECTION", "GTSP_SET_SECTION")


def _to_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {token!r}", lineno) from None


def _to_float(token: str, lineno: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected number {what}, got {token!r}", lineno) from None


def parse_instance(text: str | bytes) -> ClusteredGraph:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    header: dict[str, str] = {}
    coords: dict[int, tuple[float, float]] = {}
    raw_edges: list[tuple[int, int, float | None, int]] = []
    clusters: dict[int, tuple[int, ...]] = {}
    sections_seen: set[str] = set()
    section = None
    saw_eof = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        head = line.split(":", 1)[0].strip().upper() if ":" in line else line.split()[0].upper()
        if head == "EOF":
            saw_eof = True
            break
        if head in _SECTIONS:
            if head in sections_seen:
                raise ParseError(f"section {head} repeated", lineno)
            sections_seen.add(head)
            section = head
            continue
        if ":" in line and head in _HEADER_KEYS:
            if section is not None:
                raise ParseError(f"keyword {head} after data sections", lineno)
            header[head] = line.split(":", 1)[1].strip()
            continue
        if section is None:
            raise ParseError(f"unrecognised keyword {head!r}", lineno)

        tokens = line.split()
        if section == "NODE_COORD_SECTION":
            if len(tokens) != 3:
                raise ParseError("coordinate line must be 'id x y'", lineno)
            vid = _to_int(tokens[0], lineno, "vertex id")
            if vid in coords:
                raise ParseError(f"duplicate vertex id {vid}", lineno)
            coords[vid] = (_to_float(tokens[1], lineno, "x"), _to_float(tokens[2], lineno, "y"))
        elif section == "EDGE_SECTION":
            if len(tokens) not in (2, 3):
                raise ParseError("edge line must be 'u v [w]'", lineno)
            u = _to_int(tokens[0], lineno, "vertex id")
            v = _to_int(tokens[1], lineno, "vertex id")
            w = _to_float(tokens[2], lineno, "weight") if len(tokens) == 3 else None
            raw_edges.append((u, v, w, lineno))
        else:
            if tokens[-1] != "-1":
                raise ParseError("cluster line must terminate with -1", lineno)
            cid = _to_int(tokens[0], lineno, "cluster id")
            if cid in clusters:
                raise ParseError(f"duplicate cluster id {cid}", lineno)
            members = tuple(_to_int(t, lineno, "vertex id") for t in tokens[1:-1])
            if "-1" in tokens[1:-1]:
                raise ParseError("cluster line has -1 before its end", lineno)
            clusters[cid] = members

    for key in ("DIMENSION", "NUMBER_OF_CLUSTERS", "SOURCE_VERTEX", "EDGE_WEIGHT_TYPE"):
        if key not in header:
            raise ParseError(f"missing {key}")
    if "GTSP_SET_SECTION" not in sections_seen:
        raise ParseError("missing GTSP_SET_SECTION")
    if not saw_eof:
        raise ParseError("missing EOF")
    ptype = header.get("TYPE", "CLUSPT").upper()
    if ptype != "CLUSPT":
        raise ParseError(f"unsupported TYPE {ptype}")

    n = _to_int(header["DIMENSION"], 0, "DIMENSION")
    m = _to_int(header["NUMBER_OF_CLUSTERS"], 0, "NUMBER_OF_CLUSTERS")
    source = _to_int(header["SOURCE_VERTEX"], 0, "SOURCE_VERTEX")
    mode = header["EDGE_WEIGHT_TYPE"].upper()
    if mode not in (EUC_2D, EXPLICIT):
        raise ParseError(f"unsupported EDGE_WEIGHT_TYPE {mode}")
    if len(clusters) != m:
        raise ParseError(f"NUMBER_OF_CLUSTERS is {m} but {len(clusters)} cluster lines given")
    if sorted(clusters) != list(range(1, m + 1)):
        raise ParseError("cluster ids must be 1..NUMBER_OF_CLUSTERS")

    coord_tuple = None
    if mode == EUC_2D:
        if "NODE_COORD_SECTION" not in sections_seen:
            raise ParseError("missing NODE_COORD_SECTION for EUC_2D")
        if sorted(coords) != list(range(1, n + 1)):
            raise ParseError(f"NODE_COORD_SECTION must list vertices 1..{n}")
        coord_tuple = tuple(coords[v] for v in range(1, n + 1))
        if "EDGE_SECTION" in sections_seen:
            pairs = []
            for u, v, _, lineno in raw_edges:
                if not (1 <= u <= n and 1 <= v <= n):
                    raise ParseError(f"edge ({u},{v}) out of range", lineno)
                pairs.append((u, v))
        else:
            pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
        edges = [
            (min(u, v), max(u, v), euclidean(coord_tuple[u - 1], coord_tuple[v - 1])) for u, v in pairs
        ]
    else:
        if "NODE_COORD_SECTION" in sections_seen:
            raise ParseError("NODE_COORD_SECTION given for EXPLICIT weights")
        if "EDGE_SECTION" not in sections_seen:
            raise ParseError("missing EDGE_SECTION for EXPLICIT")
        edges = []
        for u, v, w, lineno in raw_edges:
            if w is None:
                raise ParseError("EXPLICIT edge line needs a weight", lineno)
            edges.append((min(u, v), max(u, v), w))

    return ClusteredGraph(
        id=header.get("NAME", ""),
        num_vertices=n,
        edges=tuple(sorted(edges)),
        clusters=tuple(clusters[c] for c in range(1, m + 1)),
        source=source,
        coord_mode=mode,
        coords=coord_tuple,
    )


def _is_complete(graph: ClusteredGraph) -> bool:
    n = graph.num_vertices
    return len(graph.edges) == n * (n - 1) // 2


def write_instance(graph: ClusteredGraph) -> str:
    lines = [
        f"NAME: {graph.id}",
        "TYPE: CLUSPT",
        f"DIMENSION: {graph.num_vertices}",
        f"NUMBER_OF_CLUSTERS: {graph.num_clusters}",
        f"SOURCE_VERTEX: {graph.source}",
        f"EDGE_WEIGHT_TYPE: {graph.coord_mode}",
    ]
    if graph.coord_mode == EUC_2D:
        assert graph.coords is not None
        lines.append("NODE_COORD_SECTION")
        lines.extend(f"{v} {x!r} {y!r}" for v, (x, y) in enumerate(graph.coords, start=1))
        if not _is_complete(graph):
            lines.append("EDGE_SECTION")
            lines.extend(f"{u} {v}" for u, v, _ in graph.edges)
    else:
        lines.append("EDGE_SECTION")
        lines.extend(f"{u} {v} {w!r}" for u, v, w in graph.edges)
    lines.append("GTSP_SET_SECTION")
    for j, cluster in enumerate(graph.clusters, start=1):
        lines.append(" ".join([str(j), *map(str, cluster), "-1"]))
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def load_instance(path) -> ClusteredGraph:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


# --------------------------------------------------------------------------
# generation


def _grid_clusters(points: Sequence[tuple[float, float]], m: int, box: tuple[float, float, float, float]):
    """Split points into m spatially contiguous, size-balanced groups.

    Points are ordered along a serpentine walk over a ceil(sqrt(m))-row grid
    of the box and the walk is cut into m consecutive runs.
    """
    n = len(points)
    x0, y0, x1, y1 = box
    rows = max(1, math.ceil(math.sqrt(m)))
    cols = max(1, math.ceil(m / rows))
    height = (y1 - y0) / rows or 1.0
    width = (x1 - x0) / cols or 1.0

    def key(idx: int):
        x, y = points[idx]
        r = min(rows - 1, int((y - y0) / height))
        c = min(cols - 1, int((x - x0) / width))
        if r % 2:
            c, x = cols - 1 - c, -x
        return (r, c, x, y, idx)

    order = sorted(range(n), key=key)
    base, extra = divmod(n, m)
    groups, start = [], 0
    for j in range(m):
        size = base + (1 if j < extra else 0)
        groups.append(sorted(i + 1 for i in order[start : start + size]))
        start += size
    return groups


def generate_instance(
    n: int,
    m: int,
    density: float = 1.0,
    seed: int = 0,
    box: tuple[float, float, float, float] = (0.0, 0.0, 100.0, 100.0),
    name: str | None = None,
) -> ClusteredGraph:
    """Random Euclidean clustered instance.

    Every cluster is a clique; each inter-cluster pair is kept with
    probability ``density`` and the cheapest missing inter-cluster edges are
    added back until the cluster graph is connected.
    """
    if m < 1 or n < m:
        raise InstanceError(f"need n >= m >= 1, got n={n}, m={m}")
    if not 0.0 <= density <= 1.0:
        raise InstanceError(f"density must lie in [0, 1], got {density}")
    rng = random.Random(seed)
    x0, y0, x1, y1 = box
    points = [(rng.uniform(x0, x1), rng.uniform(y0, y1)) for _ in range(n)]
    groups = _grid_clusters(points, m, box)
    cluster_of = {v: j for j, g in enumerate(groups) for v in g}

    def w(u: int, v: int) -> float:
        return euclidean(points[u - 1], points[v - 1])

    edges: list[Edge] = []
    parent = list(range(m))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    cross: list[tuple[float, int, int]] = []
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            cu, cv = cluster_of[u], cluster_of[v]
            if cu == cv:
                edges.append((u, v, w(u, v)))
            elif rng.random() < density:
                edges.append((u, v, w(u, v)))
                parent[find(cu)] = find(cv)
            else:
                cross.append((w(u, v), u, v))
    cross.sort()
    for weight, u, v in cross:
        a, b = find(cluster_of[u]), find(cluster_of[v])
        if a != b:
            parent[a] = b
            edges.append((u, v, weight))

    return ClusteredGraph(
        id=name or f"gen-n{n}-m{m}-d{density:g}-s{seed}",
        num_vertices=n,
        edges=tuple(sorted(edges)),
        clusters=tuple(tuple(g) for g in groups),
        source=rng.randint(1, n),
        coord_mode=EUC_2D,
        coords=tuple(points),
    )
