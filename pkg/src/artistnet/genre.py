"""Genre-level analyses: within/between-genre similarity and influence
sampling, hierarchical genre clustering, and genre time-series statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from artistnet.graph import InfluenceGraph
from artistnet.ingest import FEATURES, RawInfluenceRow, SongRecord
from artistnet.simvec import tss


class GenreError(Exception):
    pass


@dataclass(frozen=True)
class SamplingConfig:
    samples_per_run: int = 2500
    runs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.samples_per_run < 1 or self.runs < 1:
            raise GenreError("samples_per_run and runs must be >= 1")


@dataclass
class GenreSamplingReport:
    metric: str  # "tss" or "ip"
    within_totals: list[float]
    between_totals: list[float]
    within_mean: float
    between_mean: float
    within_stronger: bool  # verdict on the means
    runs_within_stronger: int  # per-run verdict count
    excluded_genres: list[str] = field(default_factory=list)
    flagged_runs: list[int] = field(default_factory=list)
    samples_per_run: int = 0
    runs: int = 0
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _genre_members(ids, genres) -> dict[str, list[int]]:
    members: dict[str, list[int]] = {}
    for i in sorted(ids):
        members.setdefault(genres[i], []).append(i)
    return members


def sample_similarity(profiles: dict[int, np.ndarray], genres: dict[int, str],
                      cfg: SamplingConfig) -> GenreSamplingReport:
    """Monte-Carlo TSS sums for same-genre and cross-genre artist pairs.

    Per run (seeded with cfg.seed + run index), samples_per_run pairs are
    drawn with replacement for each side: within pairs are distinct
    same-genre artists, between pairs span two genres. Lower TSS means
    more similar, so the within-stronger verdict is mean(SWG) < mean(SBG).
    """
    members = _genre_members(profiles.keys(), genres)
    if len(members) < 2:
        raise GenreError("sampling needs at least 2 genres")
    excluded = sorted(g for g, m in members.items() if len(m) < 2)
    within_pool = sorted(
        i for g, m in members.items() if len(m) >= 2 for i in m
    )
    if not within_pool:
        raise GenreError("no genre has 2 or more artists")
    others = {
        g: sorted(i for h, m in members.items() if h != g for i in m)
        for g in members
    }
    between_pool = sorted(i for i in profiles if others[genres[i]])

    within_totals, between_totals = [], []
    for run in range(cfg.runs):
        rng = np.random.default_rng(cfg.seed + run)
        swg = 0.0
        for _ in range(cfg.samples_per_run):
            q = within_pool[rng.integers(len(within_pool))]
            mates = members[genres[q]]
            p = q
            while p == q:
                p = mates[rng.integers(len(mates))]
            swg += tss(profiles[q], profiles[p]).tss
        sbg = 0.0
        for _ in range(cfg.samples_per_run):
            q = between_pool[rng.integers(len(between_pool))]
            pool = others[genres[q]]
            p = pool[rng.integers(len(pool))]
            sbg += tss(profiles[q], profiles[p]).tss
        within_totals.append(swg)
        between_totals.append(sbg)

    w_mean = float(np.mean(within_totals))
    b_mean = float(np.mean(between_totals))
    return GenreSamplingReport(
        metric="tss",
        within_totals=within_totals,
        between_totals=between_totals,
        within_mean=w_mean,
        between_mean=b_mean,
        within_stronger=w_mean < b_mean,
        runs_within_stronger=sum(w < b for w, b in zip(within_totals, between_totals)),
        excluded_genres=excluded,
        samples_per_run=cfg.samples_per_run,
        runs=cfg.runs,
        seed=cfg.seed,
    )


def influence_proximity(rank_q: int, rank_p: int) -> float:
    """Rank-proximity influence: 1 / (1 + |rank_q - rank_p|), in (0, 1]."""
    return 1.0 / (1.0 + abs(rank_q - rank_p))


def sample_influence(g: InfluenceGraph, scores, genres: dict[int, str],
                     cfg: SamplingConfig, connected_only: bool = True) -> GenreSamplingReport:
    """Like sample_similarity but accumulating rank-proximity (IP) rather
    than TSS, restricted by default to artist pairs joined by an edge.

    Runs where a side has no eligible pairs report 0 for that side and
    are flagged. Higher IP means stronger influence, so the verdict is
    mean(WIP) > mean(TIP).
    """
    rank = {s.node_id: s.rank_ni for s in scores}
    if connected_only:
        within_pairs = sorted(
            (s, d) for (s, d) in g.edges if genres.get(s) == genres.get(d)
            and s in rank and d in rank
        )
        between_pairs = sorted(
            (s, d) for (s, d) in g.edges if genres.get(s) != genres.get(d)
            and s in rank and d in rank
        )
    else:
        members = _genre_members(rank.keys(), genres)
        within_pairs = sorted(
            (a, b)
            for m in members.values()
            for a in m
            for b in m
            if a != b
        )
        between_pairs = sorted(
            (a, b)
            for ga, ma in members.items()
            for gb, mb in members.items()
            if ga != gb
            for a in ma
            for b in mb
        )

    within_totals, between_totals, flagged = [], [], []
    for run in range(cfg.runs):
        rng = np.random.default_rng(cfg.seed + run)
        wip = 0.0
        if within_pairs:
            for _ in range(cfg.samples_per_run):
                s, d = within_pairs[rng.integers(len(within_pairs))]
                wip += influence_proximity(rank[s], rank[d])
        tip = 0.0
        if between_pairs:
            for _ in range(cfg.samples_per_run):
                s, d = between_pairs[rng.integers(len(between_pairs))]
                tip += influence_proximity(rank[s], rank[d])
        if not within_pairs or not between_pairs:
            flagged.append(run)
        within_totals.append(wip)
        between_totals.append(tip)

    w_mean = float(np.mean(within_totals))
    b_mean = float(np.mean(between_totals))
    return GenreSamplingReport(
        metric="ip",
        within_totals=within_totals,
        between_totals=between_totals,
        within_mean=w_mean,
        between_mean=b_mean,
        within_stronger=w_mean > b_mean,
        runs_within_stronger=sum(w > b for w, b in zip(within_totals, between_totals)),
        flagged_runs=flagged,
        samples_per_run=cfg.samples_per_run,
        runs=cfg.runs,
        seed=cfg.seed,
    )


@dataclass
class Dendrogram:
    leaves: list[str]
    # (cluster_a, cluster_b, linkage_distance); clusters named by the sorted
    # tuple of their member genres
    merges: list[tuple[tuple[str, ...], tuple[str, ...], float]]
    tree: dict  # nested {"name"} leaves / {"children", "distance"} internals

    def flat_cut(self, k: int) -> dict[str, int]:
        """Stop the merge sequence when k clusters remain; genre -> cluster
        index (clusters numbered by sorted label)."""
        if not 1 <= k <= len(self.leaves):
            raise GenreError(f"cut size {k} out of range")
        clusters = {(leaf,): [leaf] for leaf in self.leaves}
        for a, b, _ in self.merges:
            if len(clusters) == k:
                break
            merged = tuple(sorted(a + b))
            clusters[merged] = clusters.pop(a) + clusters.pop(b)
        out = {}
        for idx, label in enumerate(sorted(clusters)):
            for genre in clusters[label]:
                out[genre] = idx
        return out

    def to_newick(self) -> str:
        def render(node) -> str:
            if "name" in node:
                return "'" + node["name"].replace("'", "_") + "'"
            inner = ",".join(render(c) for c in node["children"])
            return f"({inner}):{node['distance']!r}"

        return render(self.tree) + ";"

    def to_json(self) -> str:
        return json.dumps(
            {
                "leaves": self.leaves,
                "merges": [[list(a), list(b), d] for a, b, d in self.merges],
                "tree": self.tree,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"


def genre_mean_vectors(profiles: dict[int, np.ndarray], genres: dict[int, str]) -> dict[str, np.ndarray]:
    members = _genre_members(profiles.keys(), genres)
    return {
        g: np.mean([profiles[i] for i in m], axis=0) for g, m in sorted(members.items())
    }


def cluster_genres(profiles: dict[int, np.ndarray], genres: dict[int, str],
                   linkage: str = "average") -> Dendrogram:
    """Agglomerative clustering of genre-mean vectors (Euclidean distance,
    average linkage by default, Ward behind the flag). Ties are broken by
    lexicographic genre-pair order for determinism."""
    means = genre_mean_vectors(profiles, genres)
    names = sorted(means)
    if len(names) < 2:
        raise GenreError("clustering needs at least 2 genres")
    if linkage not in ("average", "ward"):
        raise GenreError(f"unknown linkage {linkage!r}")

    # Working distances: plain Euclidean for average linkage, squared for
    # the Ward Lance-Williams update.
    def base_dist(a, b):
        d2 = float(np.sum((means[a] - means[b]) ** 2))
        return d2 if linkage == "ward" else d2 ** 0.5

    labels: list[tuple[str, ...]] = [(n,) for n in names]
    sizes = {(n,): 1 for n in names}
    trees: dict[tuple[str, ...], dict] = {(n,): {"name": n} for n in names}
    dist: dict[frozenset, float] = {}
    for i, a in enumerate(labels):
        for b in labels[i + 1:]:
            dist[frozenset((a, b))] = base_dist(a[0], b[0])

    merges = []
    while len(labels) > 1:
        best = None
        for i, a in enumerate(labels):
            for b in labels[i + 1:]:
                pair = (a, b) if a < b else (b, a)
                d = dist[frozenset((a, b))]
                key = (d, pair)
                if best is None or key < best:
                    best = key
        d, (a, b) = best
        merged = tuple(sorted(a + b))
        report_d = d ** 0.5 if linkage == "ward" else d
        merges.append((a, b, report_d))
        trees[merged] = {"children": [trees.pop(a), trees.pop(b)], "distance": report_d}
        na, nb = sizes.pop(a), sizes.pop(b)
        sizes[merged] = na + nb
        labels = [l for l in labels if l not in (a, b)]
        for other in labels:
            dak = dist.pop(frozenset((a, other)))
            dbk = dist.pop(frozenset((b, other)))
            nk = sizes[other]
            if linkage == "average":
                dnew = (na * dak + nb * dbk) / (na + nb)
            else:  # ward, on squared distances
                dnew = ((na + nk) * dak + (nb + nk) * dbk - nk * d) / (na + nb + nk)
            dist[frozenset((merged, other))] = dnew
        dist.pop(frozenset((a, b)))
        labels.append(merged)
        labels.sort()

    return Dendrogram(leaves=names, merges=merges, tree=trees[labels[0]])


def debut_counts(rows: list[RawInfluenceRow]) -> dict[tuple[str, int], int]:
    """Debutants per (main genre, active-start year); each artist counted
    once regardless of how many rows mention them."""
    seen: dict[int, tuple[str, int]] = {}
    for row in rows:
        seen.setdefault(row.influencer_id, (row.influencer_main_genre, row.influencer_active_start))
        seen.setdefault(row.follower_id, (row.follower_main_genre, row.follower_active_start))
    counts: dict[tuple[str, int], int] = {}
    for genre, year in seen.values():
        counts[(genre, year)] = counts.get((genre, year), 0) + 1
    return counts


def genre_feature_trend(songs: list[SongRecord], genre: str, feature: str,
                        artist_genres: dict[int, str]):
    """Per-year mean of a raw feature for one genre vs all genres.

    A song belongs to a genre when any of its artists has that main genre;
    the global series covers every song with a known-genre artist.
    Returns ({year: genre_mean}, {year: global_mean}).
    """
    if feature not in FEATURES:
        raise GenreError(f"unknown feature {feature!r}")
    known = {g for g in artist_genres.values()}
    if genre not in known:
        raise GenreError(f"unknown genre {genre!r}")
    genre_acc: dict[int, list[float]] = {}
    global_acc: dict[int, list[float]] = {}
    for song in songs:
        song_genres = {artist_genres[a] for a in song.artist_ids if a in artist_genres}
        if not song_genres:
            continue
        value = float(getattr(song, feature))
        global_acc.setdefault(song.year, []).append(value)
        if genre in song_genres:
            genre_acc.setdefault(song.year, []).append(value)
    genre_series = {y: float(np.mean(v)) for y, v in sorted(genre_acc.items())}
    global_series = {y: float(np.mean(v)) for y, v in sorted(global_acc.items())}
    return genre_series, global_series


def genre_influence_matrix(g: InfluenceGraph, threshold: float = 0.05):
    """Genre-to-genre influence weights: edge counts out of each genre,
    normalized by that genre's total out-edges. Cross-genre pairs below
    the threshold are pruned; self-pairs are reported separately.
    Returns (cross, self_pairs) as sorted (from, to, weight) lists."""
    counts: dict[tuple[str, str], int] = {}
    out_totals: dict[str, int] = {}
    for (s, d), _ in sorted(g.edges.items()):
        gm = g.nodes[s].genre
        gn = g.nodes[d].genre
        counts[(gm, gn)] = counts.get((gm, gn), 0) + 1
        out_totals[gm] = out_totals.get(gm, 0) + 1
    cross, self_pairs = [], []
    for (gm, gn), c in sorted(counts.items()):
        w = c / out_totals[gm]
        if gm == gn:
            self_pairs.append((gm, gn, w))
        elif w >= threshold:
            cross.append((gm, gn, w))
    return cross, self_pairs
