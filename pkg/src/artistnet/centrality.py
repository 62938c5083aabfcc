"""Composite node-influence scoring.

Three components over the acyclic influence graph, all read in the
out-direction (influence flows influencer -> follower):

* cluster_rank (LC): out-neighborhood degree sum damped by 10^(-c) where
  c is the directed out-clustering coefficient.
* semi_local (SC): two-hop spread, summing next-nearest-neighborhood
  sizes over out-neighbors of out-neighbors.
* out_closeness (GC): reachability-corrected closeness
  (reachable/(N-1))^2 / (sum of hop distances).

The composite score is NI = (e^GC - 1) * LC * SC.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from artistnet.graph import GraphError, InfluenceGraph, bfs_distances, reachability_counts


@dataclass(frozen=True)
class CentralityScores:
    node_id: int
    lc: float
    sc: float
    gc: float
    ni: float
    rank_ni: int = 0


def _out_clustering(g: InfluenceGraph, node: int) -> float:
    """Fraction of ordered out-neighbor pairs (u, v) joined by an edge
    u -> v; 0 when the node has fewer than two out-neighbors."""
    nbrs = g.out_neighbors(node)
    if len(nbrs) < 2:
        return 0.0
    nbr_set = set(nbrs)
    linked = 0
    for u in nbrs:
        for v in g.out_neighbors(u):
            if v in nbr_set and v != u:
                linked += 1
    return linked / (len(nbrs) * (len(nbrs) - 1))


def cluster_rank(g: InfluenceGraph, node: int) -> float:
    g._require(node)
    nbrs = g.out_neighbors(node)
    if not nbrs:
        return 0.0
    damping = 10.0 ** (-_out_clustering(g, node))
    return damping * sum(g.out_degree(j) + 1 for j in nbrs)


def _two_hop_count(g: InfluenceGraph, node: int) -> int:
    """Number of distinct nodes at out-distance 1 or 2."""
    first = set(g.out_neighbors(node))
    reach = set(first)
    for u in first:
        reach.update(g.out_neighbors(u))
    reach.discard(node)
    return len(reach)


def semi_local(g: InfluenceGraph, node: int) -> float:
    g._require(node)
    total = 0
    for u in g.out_neighbors(node):
        total += sum(_two_hop_count(g, w) for w in g.out_neighbors(u))
    return float(total)


def out_closeness(g: InfluenceGraph, node: int) -> float:
    g._require(node)
    if g.n_nodes < 2:
        raise GraphError("out_closeness needs at least 2 nodes")
    dist = bfs_distances(g, node)
    reachable = len(dist)
    if reachable == 0:
        return 0.0
    return (reachable / (g.n_nodes - 1)) ** 2 / sum(dist.values())


def node_influence(g: InfluenceGraph) -> list[CentralityScores]:
    """Score every node and dense-rank by descending NI (rank 1 = highest;
    tied NI values share a rank). Output sorted by (rank, node id)."""
    raw = []
    for i in g.node_ids():
        lc = cluster_rank(g, i)
        sc = semi_local(g, i)
        gc = out_closeness(g, i)
        ni = (math.exp(gc) - 1.0) * lc * sc
        raw.append((i, lc, sc, gc, ni))
    raw.sort(key=lambda t: (-t[4], t[0]))
    scores = []
    rank = 0
    prev_ni = None
    for i, lc, sc, gc, ni in raw:
        if ni != prev_ni:
            rank += 1
            prev_ni = ni
        scores.append(CentralityScores(node_id=i, lc=lc, sc=sc, gc=gc, ni=ni, rank_ni=rank))
    return scores


def top_k(g: InfluenceGraph, k: int, genre: str | None = None):
    """Top-k nodes by NI, each with (first, second, total) reachability.

    With `genre`, scoring runs from scratch on the induced subgraph of that
    genre's nodes, and reachability is read off the same subgraph.
    Returns a list of (CentralityScores, (first, second, total)).
    """
    if k <= 0:
        raise ValueError("k must be positive")
    target = g
    if genre is not None:
        ids = [i for i, n in g.nodes.items() if n.genre == genre]
        if not ids:
            raise GraphError(f"no nodes with genre {genre!r}")
        target = g.subgraph(ids)
    scores = node_influence(target)
    return [(s, reachability_counts(target, s.node_id)) for s in scores[:k]]


def export_scores_csv(g: InfluenceGraph, scores: list[CentralityScores]) -> str:
    lines = ["node_id,name,genre,lc,sc,gc,ni,rank_ni,first_order,second_order,total_reach"]
    for s in scores:
        node = g.nodes[s.node_id]
        first, second, total = reachability_counts(g, s.node_id)
        lines.append(
            f"{s.node_id},{node.name},{node.genre},{s.lc!r},{s.sc!r},{s.gc!r},"
            f"{s.ni!r},{s.rank_ni},{first},{second},{total}"
        )
    return "\n".join(lines) + "\n"
