"""Weighted directed influence network: construction, year-difference edge
weights with max-min normalization, cycle removal, and reachability."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

import numpy as np

from artistnet.ingest import RawInfluenceRow

# Year differences outside this window are discarded before normalization;
# the lower bound also anchors the max-min transform so weights stay > 0.
YEAR_DIFF_MIN = -30
YEAR_DIFF_MAX = 80


class GraphError(Exception):
    pass


@dataclass(frozen=True)
class ArtistNode:
    id: int
    name: str
    genre: str
    active_start: int


@dataclass(frozen=True)
class InfluenceEdge:
    src: int  # influencer
    dst: int  # follower
    year_diff: int  # follower.active_start - influencer.active_start
    weight: float | None = None  # normalized to (0, 1]


class InfluenceGraph:
    """Immutable directed graph over artist nodes.

    Mutating stages (normalize_weights, remove_cycles) return new graphs.
    Adjacency lists are kept sorted so every traversal is deterministic.
    """

    def __init__(self, nodes, edges, self_loops_dropped: int = 0):
        self.nodes: dict[int, ArtistNode] = {n.id: n for n in nodes}
        self.edges: dict[tuple[int, int], InfluenceEdge] = {}
        out: dict[int, list[int]] = {i: [] for i in self.nodes}
        inn: dict[int, list[int]] = {i: [] for i in self.nodes}
        for e in edges:
            if e.src == e.dst:
                raise GraphError(f"self-loop edge {e.src}")
            if e.src not in self.nodes or e.dst not in self.nodes:
                raise GraphError(f"edge ({e.src}, {e.dst}) references unknown node")
            if (e.src, e.dst) in self.edges:
                raise GraphError(f"duplicate edge ({e.src}, {e.dst})")
            self.edges[(e.src, e.dst)] = e
            out[e.src].append(e.dst)
            inn[e.dst].append(e.src)
        self._out = {i: sorted(v) for i, v in out.items()}
        self._in = {i: sorted(v) for i, v in inn.items()}
        self.self_loops_dropped = self_loops_dropped

    def __contains__(self, node_id: int) -> bool:
        return node_id in self.nodes

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_ids(self) -> list[int]:
        return sorted(self.nodes)

    def out_neighbors(self, i: int) -> list[int]:
        self._require(i)
        return self._out[i]

    def in_neighbors(self, i: int) -> list[int]:
        self._require(i)
        return self._in[i]

    def out_degree(self, i: int) -> int:
        return len(self.out_neighbors(i))

    def _require(self, i: int) -> None:
        if i not in self.nodes:
            raise GraphError(f"unknown node id {i}")

    def subgraph(self, keep_ids) -> "InfluenceGraph":
        """Induced subgraph on `keep_ids`."""
        keep = set(keep_ids)
        nodes = [n for i, n in sorted(self.nodes.items()) if i in keep]
        edges = [e for (s, d), e in sorted(self.edges.items()) if s in keep and d in keep]
        return InfluenceGraph(nodes, edges)


def build_graph(rows: list[RawInfluenceRow]) -> InfluenceGraph:
    """One node per distinct artist id, one edge per (influencer, follower)
    pair; self-influence rows are dropped and counted."""
    nodes: dict[int, ArtistNode] = {}
    edges: list[InfluenceEdge] = []
    dropped = 0
    for row in rows:
        for aid, name, genre, start in (
            (row.influencer_id, row.influencer_name, row.influencer_main_genre, row.influencer_active_start),
            (row.follower_id, row.follower_name, row.follower_main_genre, row.follower_active_start),
        ):
            if aid not in nodes:
                nodes[aid] = ArtistNode(id=aid, name=name, genre=genre, active_start=start)
        if row.influencer_id == row.follower_id:
            dropped += 1
            continue
        edges.append(
            InfluenceEdge(
                src=row.influencer_id,
                dst=row.follower_id,
                year_diff=row.follower_active_start - row.influencer_active_start,
            )
        )
    return InfluenceGraph(nodes.values(), edges, self_loops_dropped=dropped)


def normalize_weights(g: InfluenceGraph) -> InfluenceGraph:
    """Max-min normalize year differences into (0, 1] edge weights.

    Edges with year_diff <= -30 or >= 80 are removed; the rest map to
    z = (x + 30) / (x_max + 30) with x_max the post-filter maximum.
    """
    kept = [
        e
        for (_, _), e in sorted(g.edges.items())
        if YEAR_DIFF_MIN < e.year_diff < YEAR_DIFF_MAX
    ]
    if not kept:
        raise GraphError("no edges remain after year-difference filtering")
    x_max = max(e.year_diff for e in kept)
    denom = x_max - YEAR_DIFF_MIN
    weighted = [replace(e, weight=(e.year_diff - YEAR_DIFF_MIN) / denom) for e in kept]
    return InfluenceGraph(g.nodes.values(), weighted, g.self_loops_dropped)


def _tarjan_scc(node_ids, out_adj) -> list[list[int]]:
    """Iterative Tarjan; returns SCCs as sorted id lists."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0

    for root in node_ids:
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack.add(v)
            recurse = False
            succs = out_adj.get(v, [])
            for i in range(pi, len(succs)):
                w = succs[i]
                if w not in index:
                    work[-1] = (v, i + 1)
                    work.append((w, 0))
                    recurse = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if recurse:
                continue
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
            work.pop()
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comps


def remove_cycles(g: InfluenceGraph) -> tuple[InfluenceGraph, list[InfluenceEdge]]:
    """Break every cycle by repeatedly deleting, within each nontrivial
    strongly connected component, the minimum-weight edge (ties by
    ascending (weight, src, dst)). Deterministic for a given input."""
    if any(e.weight is None for e in g.edges.values()):
        raise GraphError("remove_cycles requires normalized weights")
    edges = dict(g.edges)
    removed: list[InfluenceEdge] = []
    node_ids = g.node_ids()
    while True:
        out_adj: dict[int, list[int]] = {i: [] for i in node_ids}
        for s, d in edges:
            out_adj[s].append(d)
        for v in out_adj.values():
            v.sort()
        nontrivial = [c for c in _tarjan_scc(node_ids, out_adj) if len(c) > 1]
        if not nontrivial:
            break
        for comp in sorted(nontrivial, key=lambda c: c[0]):
            comp_set = set(comp)
            candidates = [
                e
                for (s, d), e in edges.items()
                if s in comp_set and d in comp_set
            ]
            victim = min(candidates, key=lambda e: (e.weight, e.src, e.dst))
            del edges[(victim.src, victim.dst)]
            removed.append(victim)
    dag = InfluenceGraph(g.nodes.values(), edges.values(), g.self_loops_dropped)
    return dag, removed


def is_acyclic(g: InfluenceGraph) -> bool:
    """Kahn-style peeling check."""
    indeg = {i: len(g.in_neighbors(i)) for i in g.node_ids()}
    queue = deque(sorted(i for i, d in indeg.items() if d == 0))
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        for w in g.out_neighbors(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                queue.append(w)
    return seen == g.n_nodes


def bfs_distances(g: InfluenceGraph, node: int) -> dict[int, int]:
    """Unweighted hop distances from `node` along out-edges (node excluded)."""
    g._require(node)
    dist = {node: 0}
    queue = deque([node])
    while queue:
        v = queue.popleft()
        for w in g.out_neighbors(v):
            if w not in dist:
                dist[w] = dist[v] + 1
                queue.append(w)
    del dist[node]
    return dist


def reachability_counts(g: InfluenceGraph, node: int) -> tuple[int, int, int]:
    """(first_order, second_order, total) affected-node counts.

    first_order: direct out-neighbors; second_order: distinct nodes adjacent
    from first-order nodes, excluding the node and its first-order set;
    total: all nodes reachable from the node (excluding itself).
    """
    first = set(g.out_neighbors(node))
    second = set()
    for u in sorted(first):
        second.update(g.out_neighbors(u))
    second -= first
    second.discard(node)
    total = len(bfs_distances(g, node))
    return len(first), len(second), total


def _pearson(x: np.ndarray, y: np.ndarray) -> tuple[float, bool]:
    """Pearson r; degenerate (zero variance) pairs report (0.0, True)."""
    if np.std(x) == 0.0 or np.std(y) == 0.0:
        return 0.0, True
    return float(np.corrcoef(x, y)[0, 1]), False


def year_diff_centrality_correlation(g: InfluenceGraph, scores, mode: str = "per_node"):
    """Pearson correlation between year differences and each centrality
    column (lc, sc, gc, ni).

    per_node (default): each node's mean incident-edge year_diff vs its
    scores. per_edge: each edge's year_diff vs its source node's scores.
    Returns {column: {"r": float, "degenerate": bool}}.
    """
    by_id = {s.node_id: s for s in scores}
    if mode == "per_node":
        sums: dict[int, list[int]] = {}
        for e in g.edges.values():
            sums.setdefault(e.src, []).append(e.year_diff)
            sums.setdefault(e.dst, []).append(e.year_diff)
        ids = sorted(i for i in sums if i in by_id)
        if len(ids) < 3:
            raise GraphError("need at least 3 nodes with incident edges")
        x = np.array([np.mean(sums[i]) for i in ids])
        cols = {c: np.array([getattr(by_id[i], c) for i in ids]) for c in ("lc", "sc", "gc", "ni")}
    elif mode == "per_edge":
        pairs = [e for _, e in sorted(g.edges.items()) if e.src in by_id]
        if len(pairs) < 3:
            raise GraphError("need at least 3 edges")
        x = np.array([e.year_diff for e in pairs], dtype=float)
        cols = {c: np.array([getattr(by_id[e.src], c) for e in pairs]) for c in ("lc", "sc", "gc", "ni")}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out = {}
    for name, col in cols.items():
        r, degenerate = _pearson(x, col)
        out[name] = {"r": r, "degenerate": degenerate}
    return out


def export_edges_csv(g: InfluenceGraph) -> str:
    lines = ["from,to,year_diff,weight"]
    for (s, d), e in sorted(g.edges.items()):
        w = "" if e.weight is None else repr(e.weight)
        lines.append(f"{s},{d},{e.year_diff},{w}")
    return "\n".join(lines) + "\n"


def export_nodes_csv(g: InfluenceGraph) -> str:
    lines = ["id,name,genre,active_start"]
    for i, n in sorted(g.nodes.items()):
        lines.append(f"{i},{n.name},{n.genre},{n.active_start}")
    return "\n".join(lines) + "\n"


def export_dot(g: InfluenceGraph) -> str:
    lines = ["digraph influence {"]
    for i, n in sorted(g.nodes.items()):
        lines.append(f'  {i} [label="{n.name}"];')
    for (s, d), e in sorted(g.edges.items()):
        w = "" if e.weight is None else f' [weight={e.weight:.6f}]'
        lines.append(f"  {s} -> {d}{w};")
    lines.append("}")
    return "\n".join(lines) + "\n"
