"""Influence authenticity and revolutionary detection.

Covers the extreme-distribution authenticity score over each follower's
influencer similarities, elastic-net regression of influence on musical
features, genre-periphery and keyword evidence, rank-based labeling, and
a from-scratch random forest for feature importance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from artistnet.graph import GraphError, InfluenceGraph
from artistnet.simvec import tss

DEFAULT_ALPHA = 0.8


class AuthRevError(Exception):
    pass


# ---------------------------------------------------------------------------
# authenticity


@dataclass
class AuthenticityScore:
    node_id: int
    in_similarities: list[float]  # per-node min-max mapped TSS values
    ad: float
    extreme: bool
    stdev: float


@dataclass
class AuthenticitySummary:
    eligible: int
    excluded_few_inputs: int
    fraction_extreme: float
    alpha: float
    mode: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def average_extreme_distance(values, mode: str = "pair_mean") -> float:
    """Mean absolute gap over unordered pairs of the (already [0,1]-mapped)
    similarity values.

    pair_mean uses the 2/(n(n-1)) coefficient, which keeps the score in
    [0, 1] and defined for n = 2. unbounded uses the 2/(n(n-2))
    coefficient (n >= 3 only), which exceeds 1 for polarized inputs and
    so flags them more aggressively at a fixed threshold.
    """
    vals = list(values)
    n = len(vals)
    if n < 2:
        raise AuthRevError("need at least 2 similarity values")
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += abs(vals[i] - vals[j])
    if mode == "pair_mean":
        return 2.0 * total / (n * (n - 1))
    if mode == "unbounded":
        if n < 3:
            raise AuthRevError("unbounded mode needs n >= 3")
        return 2.0 * total / (n * (n - 2))
    raise AuthRevError(f"unknown mode {mode!r}")


def _minmax(values: list[float]) -> list[float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def authenticity(g: InfluenceGraph, profiles: dict[int, np.ndarray],
                 alpha: float = DEFAULT_ALPHA, mode: str = "pair_mean"):
    """Extreme-distribution score per follower with >= 2 profiled
    influencers; returns (scores, summary)."""
    scores: list[AuthenticityScore] = []
    excluded = 0
    for node in g.node_ids():
        if node not in profiles:
            continue
        influencers = [i for i in g.in_neighbors(node) if i in profiles]
        if len(influencers) < 2:
            if len(g.in_neighbors(node)) >= 1:
                excluded += 1
            continue
        sims = [tss(profiles[node], profiles[i]).tss for i in influencers]
        mapped = _minmax(sims)
        ad = average_extreme_distance(mapped, mode=mode)
        scores.append(
            AuthenticityScore(
                node_id=node,
                in_similarities=mapped,
                ad=ad,
                extreme=ad >= alpha,
                stdev=float(np.std(mapped)),
            )
        )
    fraction = (
        sum(s.extreme for s in scores) / len(scores) if scores else 0.0
    )
    summary = AuthenticitySummary(
        eligible=len(scores),
        excluded_few_inputs=excluded,
        fraction_extreme=fraction,
        alpha=alpha,
        mode=mode,
    )
    return scores, summary


# ---------------------------------------------------------------------------
# elastic net


@dataclass
class ElasticNetFit:
    intercept: float
    coefficients: np.ndarray
    lam: float
    alpha_mix: float
    iterations: int
    converged: bool
    objective_history: list[float] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "intercept": self.intercept,
                "coefficients": self.coefficients.tolist(),
                "lambda": self.lam,
                "alpha_mix": self.alpha_mix,
                "iterations": self.iterations,
                "converged": self.converged,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"


def elastic_net_objective(X, y, intercept, beta, lam, alpha_mix) -> float:
    resid = y - intercept - X @ beta
    penalty = lam * (
        0.5 * (1.0 - alpha_mix) * float(beta @ beta)
        + alpha_mix * float(np.sum(np.abs(beta)))
    )
    return 0.5 * float(resid @ resid) + penalty


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def elastic_net_fit(X, y, lam: float, alpha_mix: float = 0.5,
                    tol: float = 1e-7, max_iter: int = 10000) -> ElasticNetFit:
    """Cyclic coordinate descent with soft-thresholding for

        min 1/2 ||y - b0 - X beta||^2 + lam [ (1-a)/2 ||beta||^2 + a ||beta||_1 ]

    The intercept is unpenalized. Converges when the largest coefficient
    change in a sweep drops below tol.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise AuthRevError("non-finite input")
    if not 0.0 <= alpha_mix <= 1.0 or lam < 0.0:
        raise AuthRevError("need lam >= 0 and alpha_mix in [0, 1]")
    n, d = X.shape
    col_sq = np.einsum("ij,ij->j", X, X)
    beta = np.zeros(d)
    intercept = float(np.mean(y))
    resid = y - intercept  # maintained as y - intercept - X @ beta
    history = [elastic_net_objective(X, y, intercept, beta, lam, alpha_mix)]
    converged = False
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        max_delta = 0.0
        for j in range(d):
            denom = col_sq[j] + lam * (1.0 - alpha_mix)
            if denom == 0.0:
                continue
            old = beta[j]
            rho = float(X[:, j] @ resid) + col_sq[j] * old
            new = _soft_threshold(rho, lam * alpha_mix) / denom
            if new != old:
                resid += X[:, j] * (old - new)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        shift = float(np.mean(resid))
        if shift != 0.0:
            intercept += shift
            resid -= shift
            max_delta = max(max_delta, abs(shift))
        history.append(elastic_net_objective(X, y, intercept, beta, lam, alpha_mix))
        if max_delta < tol:
            converged = True
            break
    return ElasticNetFit(
        intercept=intercept,
        coefficients=beta,
        lam=lam,
        alpha_mix=alpha_mix,
        iterations=sweeps,
        converged=converged,
        objective_history=history,
    )


def elastic_net_grid(X, y, lambda_grid, alpha_mix: float = 0.5,
                     val_fraction: float = 0.2) -> ElasticNetFit:
    """Pick lambda from the grid by validation MSE on a tail split."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    cut = max(1, int(round(n * (1.0 - val_fraction))))
    Xt, yt = X[:cut], y[:cut]
    Xv, yv = X[cut:], y[cut:]
    if len(yv) == 0:
        Xv, yv = Xt, yt
    best = None
    for lam in lambda_grid:
        fit = elastic_net_fit(Xt, yt, lam, alpha_mix)
        pred = fit.intercept + Xv @ fit.coefficients
        mse = float(np.mean((yv - pred) ** 2))
        if best is None or mse < best[0]:
            best = (mse, lam)
    return elastic_net_fit(X, y, best[1], alpha_mix)


# ---------------------------------------------------------------------------
# revolutionary labeling


def periphery_score(g: InfluenceGraph, node: int) -> float:
    """Fraction of out-edges leading to a different genre; 0 for sinks."""
    g._require(node)
    nbrs = g.out_neighbors(node)
    if not nbrs:
        return 0.0
    own = g.nodes[node].genre
    return sum(g.nodes[w].genre != own for w in nbrs) / len(nbrs)


def _normalize_text(text: str) -> str:
    return " ".join(text.split()).lower()


def semantic_match(phrases, bios: dict[int, str], node_ids=None):
    """Case-insensitive substring match of any indicator phrase against
    whitespace-normalized bios. Returns (flagged ids, missing ids)."""
    if not phrases:
        raise AuthRevError("empty phrase corpus")
    needles = [_normalize_text(p) for p in phrases if p.strip()]
    flagged = set()
    for node, text in bios.items():
        hay = _normalize_text(text or "")
        if hay and any(n in hay for n in needles):
            flagged.add(node)
    ids = set(node_ids) if node_ids is not None else set(bios)
    missing = {i for i in ids if not (bios.get(i) or "").strip()}
    return flagged, missing


@dataclass(frozen=True)
class RevolutionLabel:
    node_id: int
    label: str  # major | non_major | unlabeled
    evidence: tuple[str, ...] = ()


def label_revolutionaries(scores, periphery: dict[int, float],
                          keyword_ids, periphery_threshold: float = 0.5) -> list[RevolutionLabel]:
    """Bottom influence decile -> non_major; top quintile with periphery or
    keyword evidence -> major; everyone else unlabeled."""
    ordered = sorted(scores, key=lambda s: (-s.ni, s.node_id))
    n = len(ordered)
    if n < 10:
        raise AuthRevError("need at least 10 nodes to take deciles")
    n_top = max(1, math.floor(n * 0.20))
    n_bottom = max(1, math.floor(n * 0.10))
    labels = []
    for pos, s in enumerate(ordered):
        if pos >= n - n_bottom:
            labels.append(RevolutionLabel(s.node_id, "non_major", ("rank_bottom_decile",)))
            continue
        if pos < n_top:
            evidence = []
            if periphery.get(s.node_id, 0.0) >= periphery_threshold:
                evidence.append("periphery")
            if s.node_id in keyword_ids:
                evidence.append("keyword")
            if evidence:
                labels.append(RevolutionLabel(s.node_id, "major", tuple(evidence)))
                continue
        labels.append(RevolutionLabel(s.node_id, "unlabeled"))
    return labels


# ---------------------------------------------------------------------------
# random forest


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float(np.sum(p * p))


class _Tree:
    __slots__ = ("root",)

    def __init__(self, root):
        self.root = root

    def predict_proba(self, x):
        node = self.root
        while "proba" not in node:
            node = node["left"] if x[node["feature"]] <= node["threshold"] else node["right"]
        return node["proba"]


def _grow(X, y, n_classes, rng, depth, max_depth, m_features, importances, n_total):
    counts = np.bincount(y, minlength=n_classes).astype(float)
    node_gini = _gini(counts)
    n = len(y)
    if depth >= max_depth or n < 2 or node_gini == 0.0:
        return {"proba": (counts / counts.sum()).tolist()}
    d = X.shape[1]
    feats = sorted(rng.choice(d, size=min(m_features, d), replace=False).tolist())
    best = None  # (gini_after, feature, threshold, mask)
    for f in feats:
        col = X[:, f]
        values = np.unique(col)
        if len(values) < 2:
            continue
        for thr in (values[:-1] + values[1:]) / 2.0:
            mask = col <= thr
            nl = int(mask.sum())
            left = np.bincount(y[mask], minlength=n_classes).astype(float)
            right = counts - left
            score = (nl * _gini(left) + (n - nl) * _gini(right)) / n
            if best is None or score < best[0]:
                best = (score, f, float(thr), mask)
    if best is None or best[0] >= node_gini:
        return {"proba": (counts / counts.sum()).tolist()}
    score, f, thr, mask = best
    importances[f] += (n / n_total) * (node_gini - score)
    return {
        "feature": int(f),
        "threshold": thr,
        "left": _grow(X[mask], y[mask], n_classes, rng, depth + 1, max_depth,
                      m_features, importances, n_total),
        "right": _grow(X[~mask], y[~mask], n_classes, rng, depth + 1, max_depth,
                       m_features, importances, n_total),
    }


@dataclass
class ForestModel:
    trees: list
    classes: list
    feature_importances: np.ndarray
    train_accuracy: float
    validation_accuracy: float
    test_accuracy: float

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        probas = np.zeros((X.shape[0], len(self.classes)))
        for tree in self.trees:
            for i, x in enumerate(X):
                probas[i] += tree.predict_proba(x)
        return np.array([self.classes[int(np.argmax(p))] for p in probas])

    def to_json(self) -> str:
        return json.dumps(
            {
                "classes": list(self.classes),
                "n_trees": len(self.trees),
                "trees": [t.root for t in self.trees],
                "feature_importances": self.feature_importances.tolist(),
                "train_accuracy": self.train_accuracy,
                "validation_accuracy": self.validation_accuracy,
                "test_accuracy": self.test_accuracy,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"


def forest_train(X, labels, trees: int = 200, max_depth: int = 8,
                 features_per_split: int | None = None, seed: int = 0,
                 split: tuple[float, float, float] = (0.10, 0.05, 0.05)) -> ForestModel:
    """Bootstrap forest of Gini trees over rank-ordered rows.

    The first split[0] fraction of rows trains, the next split[1] fraction
    validates, the next split[2] tests (rows are assumed ordered by
    influence rank). Importances are normalized impurity decreases.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels)
    n, d = X.shape
    f_train, f_val, f_test = split
    i_train = max(1, int(round(n * f_train)))
    i_val = i_train + max(1, int(round(n * f_val)))
    i_test = i_val + max(1, int(round(n * f_test)))
    if i_test > n:
        raise AuthRevError("split fractions exceed the dataset")
    Xtr, ytr_raw = X[:i_train], labels[:i_train]
    Xv, yv = X[i_train:i_val], labels[i_train:i_val]
    Xte, yte = X[i_val:i_test], labels[i_val:i_test]

    classes = sorted(set(ytr_raw.tolist()))
    if len(classes) < 2:
        raise AuthRevError("training slice contains a single class")
    class_index = {c: i for i, c in enumerate(classes)}
    ytr = np.array([class_index[c] for c in ytr_raw])

    m_features = features_per_split or math.ceil(math.sqrt(d))
    importances = np.zeros(d)
    grown = []
    seeds = np.random.SeedSequence(seed).spawn(trees)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        idx = rng.integers(0, len(ytr), size=len(ytr))
        root = _grow(Xtr[idx], ytr[idx], len(classes), rng, 0, max_depth,
                     m_features, importances, len(ytr))
        grown.append(_Tree(root))

    total = importances.sum()
    if total > 0:
        importances = importances / total

    model = ForestModel(
        trees=grown,
        classes=classes,
        feature_importances=importances,
        train_accuracy=0.0,
        validation_accuracy=0.0,
        test_accuracy=0.0,
    )
    model.train_accuracy = float(np.mean(model.predict(Xtr) == ytr_raw))
    model.validation_accuracy = float(np.mean(model.predict(Xv) == yv))
    model.test_accuracy = float(np.mean(model.predict(Xte) == yte))
    return model
