"""Feature standardization, PCA reduction, and the triangle/sector (TS-SS)
similarity metric.

All trigonometry is degree-based: the vector angle gets a +10 degree
offset so coincident vectors still span a nondegenerate triangle. TSS is
a dissimilarity: 0 means identical, larger means less similar.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_COMPONENTS = 9
ANGLE_OFFSET_DEG = 10.0


class SimvecError(Exception):
    pass


@dataclass(frozen=True)
class FeatureVector:
    source_id: int
    values: np.ndarray


@dataclass
class StandardizeResult:
    vectors: np.ndarray  # (n, d) standardized rows
    means: np.ndarray
    stdevs: np.ndarray  # population stdev; 1.0 substituted for flagged columns
    constant_columns: list[int] = field(default_factory=list)


def standardize(corpus) -> StandardizeResult:
    """Column-wise z-scores with population standard deviation.

    Zero-variance columns map to all-zeros and are flagged, not dropped.
    """
    X = np.asarray(corpus, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise SimvecError("standardize needs a 2-D corpus with >= 2 rows")
    if not np.all(np.isfinite(X)):
        raise SimvecError("non-finite value in corpus")
    means = X.mean(axis=0)
    stdevs = X.std(axis=0)  # population (ddof=0)
    constant = [int(j) for j in np.where(stdevs == 0.0)[0]]
    safe = stdevs.copy()
    safe[safe == 0.0] = 1.0
    Z = (X - means) / safe
    return StandardizeResult(vectors=Z, means=means, stdevs=safe, constant_columns=constant)


@dataclass
class PcaModel:
    means: np.ndarray
    stdevs: np.ndarray
    components: np.ndarray  # (k, d), orthonormal rows, eigenvalue-descending
    explained_variance: np.ndarray  # (k,)

    def to_json(self) -> str:
        return json.dumps(
            {
                "means": self.means.tolist(),
                "stdevs": self.stdevs.tolist(),
                "components": self.components.tolist(),
                "explained_variance": self.explained_variance.tolist(),
            },
            sort_keys=True,
            indent=2,
        ) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PcaModel":
        d = json.loads(text)
        return cls(
            means=np.array(d["means"]),
            stdevs=np.array(d["stdevs"]),
            components=np.array(d["components"]),
            explained_variance=np.array(d["explained_variance"]),
        )


def fit_pca(vectors, k: int, means=None, stdevs=None) -> PcaModel:
    """Top-k eigendecomposition of the population covariance matrix.

    `vectors` is expected standardized (see standardize); optional
    means/stdevs are carried on the model so pipelines can re-apply the
    same transform to new data. Sign convention: each component's
    largest-magnitude entry is positive.
    """
    X = np.asarray(vectors, dtype=float)
    n, d = X.shape
    if k > d:
        raise SimvecError(f"k={k} exceeds dimension {d}")
    if n < k + 1:
        raise SimvecError(f"need at least {k + 1} vectors for k={k}")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / n
    eigvals, eigvecs = np.linalg.eigh(cov)  # ascending
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order][:k]
    comps = eigvecs[:, order][:, :k].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(
        means=np.zeros(d) if means is None else np.asarray(means, dtype=float),
        stdevs=np.ones(d) if stdevs is None else np.asarray(stdevs, dtype=float),
        components=comps,
        explained_variance=np.maximum(eigvals, 0.0),
    )


def project(model: PcaModel, v) -> np.ndarray:
    """Map a (standardized) vector or row matrix onto the components."""
    arr = np.asarray(v, dtype=float)
    if arr.shape[-1] != model.components.shape[1]:
        raise SimvecError(
            f"dimension mismatch: vector has {arr.shape[-1]}, model expects {model.components.shape[1]}"
        )
    return arr @ model.components.T


def _check_finite(a: np.ndarray, b: np.ndarray) -> None:
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise SimvecError("non-finite vector component")


def _theta_prime(dot: float, mag_a: float, mag_b: float) -> float:
    """Angle between the vectors in degrees, plus the 10 degree offset.
    Zero-magnitude inputs take the degenerate 10 degree value."""
    if mag_a == 0.0 or mag_b == 0.0:
        return ANGLE_OFFSET_DEG
    cosine = min(1.0, max(-1.0, dot / (mag_a * mag_b)))
    return math.degrees(math.acos(cosine)) + ANGLE_OFFSET_DEG


def ts(a, b) -> tuple[float, float]:
    """Triangle's area similarity: |a||b| sin(theta') / 2. Returns
    (ts, theta_prime_degrees)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_finite(a, b)
    mag_a = math.sqrt(float(np.dot(a, a)))
    mag_b = math.sqrt(float(np.dot(b, b)))
    theta = _theta_prime(float(np.dot(a, b)), mag_a, mag_b)
    if mag_a == 0.0 or mag_b == 0.0:
        return 0.0, theta
    # theta' can exceed 180 degrees for near-antiparallel vectors; the
    # triangle area is |sin|, keeping TS (and TSS) nonnegative.
    return mag_a * mag_b * abs(math.sin(math.radians(theta))) / 2.0, theta


def ss(a, b) -> float:
    """Sector's area similarity: pi (ED + MD)^2 theta'/360 where ED is the
    Euclidean distance and MD the magnitude difference."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_finite(a, b)
    mag_a = math.sqrt(float(np.dot(a, a)))
    mag_b = math.sqrt(float(np.dot(b, b)))
    theta = _theta_prime(float(np.dot(a, b)), mag_a, mag_b)
    diff = a - b
    ed = math.sqrt(float(np.dot(diff, diff)))
    md = abs(mag_a - mag_b)
    return math.pi * (ed + md) ** 2 * (theta / 360.0)


@dataclass(frozen=True)
class SimilarityResult:
    ts: float
    ss: float
    tss: float
    theta_prime: float


def tss(a, b) -> SimilarityResult:
    """TSS = TS * SS; 0 iff the vectors coincide (or either area is 0)."""
    t, theta = ts(a, b)
    s = ss(a, b)
    return SimilarityResult(ts=t, ss=s, tss=t * s, theta_prime=theta)


def _pairwise_metric(X: np.ndarray, metric: str) -> np.ndarray:
    """Condensed upper-triangle values of the chosen metric, vectorized."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    gram = X @ X.T
    sq = np.diag(gram)
    mags = np.sqrt(sq)
    dots = gram[iu, ju]
    ma, mb = mags[iu], mags[ju]
    if metric == "euclidean":
        return np.sqrt(np.maximum(sq[iu] + sq[ju] - 2.0 * dots, 0.0))
    prod = ma * mb
    with np.errstate(invalid="ignore", divide="ignore"):
        cosine = np.where(prod > 0.0, dots / prod, 1.0)
    cosine = np.clip(cosine, -1.0, 1.0)
    if metric == "cosine":
        return cosine
    if metric == "tss":
        theta = np.degrees(np.arccos(cosine)) + ANGLE_OFFSET_DEG
        theta = np.where(prod > 0.0, theta, ANGLE_OFFSET_DEG)
        t = np.where(prod > 0.0, prod * np.abs(np.sin(np.radians(theta))) / 2.0, 0.0)
        ed = np.sqrt(np.maximum(sq[iu] + sq[ju] - 2.0 * dots, 0.0))
        md = np.abs(ma - mb)
        s = np.pi * (ed + md) ** 2 * (theta / 360.0)
        return t * s
    raise SimvecError(f"unknown metric {metric!r}")


def uniqueness(vectors, metric: str) -> float:
    """Percentage of distinct pairwise metric values at 7-decimal rounding:
    100 * distinct / C(n, 2)."""
    X = np.asarray(vectors, dtype=float)
    if X.shape[0] < 2:
        raise SimvecError("uniqueness needs >= 2 vectors")
    values = _pairwise_metric(X, metric)
    rounded = np.round(values, 7)
    return 100.0 * len(np.unique(rounded)) / len(values)


def most_similar(query: int, profiles: dict[int, np.ndarray]):
    """All other profiles ranked by ascending TSS to the query (ties by
    ascending id). Returns a list of (id, tss)."""
    if query not in profiles:
        raise SimvecError(f"unknown profile id {query}")
    qv = profiles[query]
    ranked = [
        (i, tss(qv, v).tss) for i, v in sorted(profiles.items()) if i != query
    ]
    ranked.sort(key=lambda t: (t[1], t[0]))
    return ranked
