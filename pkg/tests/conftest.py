import random

import pytest

from cluspt.instance import EXPLICIT, ClusteredGraph, generate_instance, parse_instance

SAMPLE = """\
NAME: tiny-path
TYPE: CLUSPT
DIMENSION: 4
NUMBER_OF_CLUSTERS: 2
SOURCE_VERTEX: 1
EDGE_WEIGHT_TYPE: EXPLICIT
EDGE_SECTION
1 2 1.0
2 3 1.0
3 4 1.0
GTSP_SET_SECTION
1 1 2 -1
2 3 4 -1
EOF
"""


def explicit(edges, clusters, source=1, name="g"):
    n = max(v for c in clusters for v in c)
    return ClusteredGraph(
        id=name,
        num_vertices=n,
        edges=tuple(sorted((min(u, v), max(u, v), float(w)) for u, v, w in edges)),
        clusters=tuple(tuple(c) for c in clusters),
        source=source,
        coord_mode=EXPLICIT,
    )


@pytest.fixture
def sample_text():
    return SAMPLE


@pytest.fixture
def path_graph():
    return parse_instance(SAMPLE)


def random_instances(count, seed, n_range=(4, 40), m_range=(2, 8), density=(0.1, 0.6)):
    rng = random.Random(seed)
    for i in range(count):
        m = rng.randint(*m_range)
        n = rng.randint(max(m, n_range[0]), max(m, n_range[1]))
        yield generate_instance(n, m, rng.uniform(*density), seed=seed * 100_000 + i)
