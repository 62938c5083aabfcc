import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from artistnet.graph import ArtistNode, InfluenceEdge, InfluenceGraph


def make_graph(n, edges, genres=None):
    """Graph with nodes 0..n-1 and (src, dst[, weight]) edges; year_diff is
    synthesized from node ids so it is always populated."""
    genres = genres or {}
    nodes = [
        ArtistNode(id=i, name=f"artist{i}", genre=genres.get(i, "Pop/Rock"),
                   active_start=1950 + i)
        for i in range(n)
    ]
    built = []
    for e in edges:
        s, d = e[0], e[1]
        w = e[2] if len(e) > 2 else 0.5
        built.append(InfluenceEdge(src=s, dst=d, year_diff=d - s, weight=w))
    return InfluenceGraph(nodes, built)


def random_digraph(rng, max_nodes=12):
    """Seeded random digraph with random distinct weights (no self loops)."""
    n = int(rng.integers(2, max_nodes + 1))
    p = rng.uniform(0.1, 0.5)
    edges = []
    for s in range(n):
        for d in range(n):
            if s != d and rng.random() < p:
                edges.append((s, d, float(rng.uniform(0.01, 1.0))))
    return make_graph(n, edges)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
