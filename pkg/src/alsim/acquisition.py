"""Batch-selection strategies and their numeric kernels.

Implements the contrastive strategy (score each pool candidate by the
divergence between its predictive distribution and those of its nearest
labeled neighbors), the entropy / random / embedding-k-means / gradient-
embedding baselines, and the shared kernels: KL divergence, predictive
entropy, k-means++ seeding, and Lloyd iteration.

Conventions shared by every strategy:

* the KL direction is fixed: the labeled neighbor is the target P, the pool
  candidate the input Q;
* probabilities are clamped to >= 1e-12 before logs, 0*ln(0) := 0;
* score ties break by ascending example id, distance ties by ascending
  reference row index;
* candidates are canonicalized to ascending-id order internally, so results
  do not depend on the caller's row order;
* every strategy is bit-deterministic given (inputs, seed).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .classifier import Classifier, gradient_embedding
from .dataset import FeatureMatrix
from .errors import ShapeError, SizingError, StateError, ValidationError
from .neighbors import build_index, query_batch

PROB_FLOOR = 1e-12

STRATEGIES = ("random", "entropy", "cal", "kmeans_embedding", "badge")


@dataclass
class AcquisitionConfig:
    """Knobs for one acquisition call; the ``cal_*`` fields select variants."""

    strategy: str = "cal"
    b: int = 1
    k: int = 10
    cal_direction: str = "argmax"        # argmax | argmin (lowest-divergence ablation)
    cal_pooling: str = "mean"            # mean | max | median over neighbor terms
    cal_scoring: str = "kl"              # kl | cross_entropy (vs neighbor gold labels)
    cal_neighborhood: str = "per_unlabeled"  # per_unlabeled | per_labeled
    encoding: str = "model"
    seed: int = 0
    add_distance_term: bool = False      # optional mean-neighbor-distance score term
    normalize_kmeans: bool = True

    def __post_init__(self):
        if self.b < 1:
            raise ValidationError(f"b must be >= 1, got {self.b}")
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        for name, value, allowed in (
            ("cal_direction", self.cal_direction, ("argmax", "argmin")),
            ("cal_pooling", self.cal_pooling, ("mean", "max", "median")),
            ("cal_scoring", self.cal_scoring, ("kl", "cross_entropy")),
            ("cal_neighborhood", self.cal_neighborhood, ("per_unlabeled", "per_labeled")),
        ):
            if value not in allowed:
                raise ValidationError(f"{name} must be one of {allowed}, got {value!r}")


@dataclass
class BatchSelection:
    """An acquired batch: ids in selection order plus provenance.

    ``scores`` aligns with ``ids`` (None for score-free strategies);
    ``candidate_scores`` keeps the full per-candidate score map for audit
    dumps. Timing fields carry the Appendix-style split: the caller fills
    ``inference_seconds`` (forward passes), the strategy fills
    ``selection_seconds`` (ranking/clustering).
    """

    ids: list[str]
    scores: list[float] | None = None
    candidate_scores: dict[str, float] | None = None
    inference_seconds: float = 0.0
    selection_seconds: float = 0.0
    k_clamped: bool = False


# ---------------------------------------------------------------------------
# kernels


def _check_simplex(p: np.ndarray, name: str) -> None:
    if abs(float(p.sum()) - 1.0) > 1e-6:
        raise ValidationError(f"{name} sums to {p.sum():.8f}, expected 1 +- 1e-6")


def kl_divergence(P, Q) -> float:
    """KL(P || Q) in nats, with Q clamped to >= 1e-12 and 0*ln(0) := 0."""
    P = np.asarray(P, dtype=np.float64).reshape(-1)
    Q = np.asarray(Q, dtype=np.float64).reshape(-1)
    if P.shape != Q.shape:
        raise ShapeError(f"length mismatch: {P.shape[0]} vs {Q.shape[0]}")
    _check_simplex(P, "P")
    _check_simplex(Q, "Q")
    return float(_kl_rows(P[None, :], Q[None, :])[0])


def _kl_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Row-wise KL over the trailing axis; broadcasts; no validation."""
    q = np.maximum(Q, PROB_FLOOR)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = P * (np.log(P) - np.log(q))
    t = np.where(P > 0, t, 0.0)
    return np.maximum(t.sum(axis=-1), 0.0)


def predictive_entropy(p) -> float:
    """-sum p ln p in nats; 0 for one-hot, ln C at uniform."""
    p = np.asarray(p, dtype=np.float64).reshape(-1)
    _check_simplex(p, "p")
    return float(_entropy_rows(p[None, :])[0])


def _entropy_rows(P: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = P * np.log(P)
    t = np.where(P > 0, t, 0.0)
    return np.maximum(-t.sum(axis=-1), 0.0)


# ---------------------------------------------------------------------------
# shared plumbing


def _canonical(encodings: FeatureMatrix, *aligned):
    """Reorder rows (and aligned arrays) to ascending example id."""
    ids = np.array(encodings.row_ids)
    order = np.argsort(ids)
    fm = FeatureMatrix(encodings.values[order], [str(i) for i in ids[order]])
    return (fm, *[np.asarray(a)[order] for a in aligned])


def _rank(ids: np.ndarray, scores: np.ndarray, b: int, descending: bool) -> np.ndarray:
    key = -scores if descending else scores
    order = np.lexsort((ids, key))  # primary: score, secondary: ascending id
    return order[: min(b, len(ids))]


def _pool(terms: np.ndarray, mode: str) -> np.ndarray:
    if mode == "mean":
        return terms.mean(axis=1)
    if mode == "max":
        return terms.max(axis=1)
    return np.median(terms, axis=1)


# ---------------------------------------------------------------------------
# contrastive acquisition


def acquire_cal(pool_probs, pool_encodings: FeatureMatrix,
                labeled_probs, labeled_encodings: FeatureMatrix,
                config: AcquisitionConfig, labeled_labels=None) -> BatchSelection:
    """Select the pool batch whose predictions diverge most from labeled neighbors.

    Per candidate: find its k nearest labeled examples in encoding space,
    compute one divergence term per neighbor (KL with the neighbor as target,
    or cross-entropy against the neighbor's gold label), pool the terms
    (mean/max/median), and take the top b scores (bottom b under ``argmin``).

    ``cal_neighborhood="per_labeled"`` inverts the loop: each labeled example
    scores its k nearest pool neighbors; a pool point picked several times
    averages its terms and an unpicked point scores exactly 0. Pooling and
    the distance term apply only to the per-unlabeled form.
    """
    pool_probs = np.asarray(pool_probs, dtype=np.float64)
    labeled_probs = np.asarray(labeled_probs, dtype=np.float64)
    if pool_encodings.rows == 0:
        raise StateError("pool is empty")
    if labeled_encodings.rows < 1:
        raise StateError("no labeled examples to build neighborhoods from")
    if pool_encodings.cols != labeled_encodings.cols:
        raise ShapeError(
            f"encoding dims differ: pool {pool_encodings.cols}, labeled {labeled_encodings.cols}"
        )
    if pool_probs.shape[1] != labeled_probs.shape[1]:
        raise ShapeError("pool and labeled probability matrices disagree on C")
    if pool_probs.shape[0] != pool_encodings.rows or labeled_probs.shape[0] != labeled_encodings.rows:
        raise ShapeError("probability rows misaligned with encoding rows")
    if config.cal_scoring == "cross_entropy" and labeled_labels is None:
        raise ValidationError("cross_entropy scoring needs labeled_labels")

    t0 = time.perf_counter()
    pool_enc, pool_probs = _canonical(pool_encodings, pool_probs)
    ids = np.array(pool_enc.row_ids)

    if config.cal_neighborhood == "per_unlabeled":
        index = build_index(labeled_encodings)
        nbr, dist, clamped = query_batch(index, pool_enc, config.k)
        if config.cal_scoring == "kl":
            # target P = labeled neighbor, input Q = pool candidate
            terms = _kl_rows(labeled_probs[nbr], pool_probs[:, None, :])
        else:
            y = np.asarray(labeled_labels, dtype=np.int64)[nbr]  # (n, k)
            picked = np.take_along_axis(pool_probs, y, axis=1)
            terms = -np.log(np.maximum(picked, PROB_FLOOR))
        scores = _pool(terms, config.cal_pooling)
        if config.add_distance_term:
            scores = scores + dist.mean(axis=1)
    else:
        index = build_index(pool_enc)
        nbr, _, clamped = query_batch(index, labeled_encodings, config.k)  # (m, k)
        if config.cal_scoring == "kl":
            terms = _kl_rows(labeled_probs[:, None, :], pool_probs[nbr])
        else:
            y = np.asarray(labeled_labels, dtype=np.int64)
            picked = np.take_along_axis(pool_probs[nbr], np.broadcast_to(
                y[:, None, None], (*nbr.shape, 1)), axis=2)[..., 0]
            terms = -np.log(np.maximum(picked, PROB_FLOOR))
        sums = np.zeros(len(ids))
        counts = np.zeros(len(ids))
        np.add.at(sums, nbr.ravel(), terms.ravel())
        np.add.at(counts, nbr.ravel(), 1.0)
        scores = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)

    take = _rank(ids, scores, config.b, descending=config.cal_direction == "argmax")
    selection = BatchSelection(
        ids=[str(i) for i in ids[take]],
        scores=[float(s) for s in scores[take]],
        candidate_scores={str(i): float(s) for i, s in zip(ids, scores)},
        selection_seconds=time.perf_counter() - t0,
        k_clamped=clamped,
    )
    return selection


# ---------------------------------------------------------------------------
# baselines


def acquire_entropy(pool_probs, pool_ids, b: int) -> BatchSelection:
    """Top-b pool candidates by predictive entropy, ties by ascending id."""
    t0 = time.perf_counter()
    probs = np.asarray(pool_probs, dtype=np.float64)
    ids = np.array([str(i) for i in pool_ids])
    if probs.shape[0] != len(ids):
        raise ShapeError("probability rows misaligned with ids")
    if len(ids) == 0:
        raise StateError("pool is empty")
    order = np.argsort(ids)
    ids, probs = ids[order], probs[order]
    scores = _entropy_rows(probs)
    take = _rank(ids, scores, b, descending=True)
    return BatchSelection(
        ids=[str(i) for i in ids[take]],
        scores=[float(s) for s in scores[take]],
        candidate_scores={str(i): float(s) for i, s in zip(ids, scores)},
        selection_seconds=time.perf_counter() - t0,
    )


def acquire_random(pool_ids, b: int, rng: np.random.Generator) -> BatchSelection:
    """b distinct ids drawn uniformly without replacement, in draw order."""
    t0 = time.perf_counter()
    ids = sorted(str(i) for i in pool_ids)
    if not ids:
        raise StateError("pool is empty")
    take = rng.choice(len(ids), size=min(b, len(ids)), replace=False)
    return BatchSelection(
        ids=[ids[int(i)] for i in take],
        selection_seconds=time.perf_counter() - t0,
    )


def kmeans_pp_init(points, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: k distinct row indices.

    First center uniform; each next drawn with probability proportional to
    the squared distance to the nearest chosen center. If every remaining
    point coincides with a center (total weight 0), falls back to a uniform
    draw over the unchosen rows so the indices stay distinct.
    """
    X = np.asarray(points, dtype=np.float64)
    n = X.shape[0]
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if k > n:
        raise SizingError(f"cannot seed {k} centers from {n} points")
    chosen = np.zeros(n, dtype=bool)
    first = int(rng.integers(n))
    picks = [first]
    chosen[first] = True
    d2 = ((X - X[first]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = float(d2.sum())
        if total > 0.0:
            pick = int(rng.choice(n, p=d2 / total))
        else:
            unchosen = np.flatnonzero(~chosen)
            pick = int(unchosen[rng.integers(len(unchosen))])
        picks.append(pick)
        chosen[pick] = True
        d2 = np.minimum(d2, ((X - X[pick]) ** 2).sum(axis=1))
    return np.array(picks, dtype=np.int64)


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    inertia_history: list[float] = field(default_factory=list)


def _pairwise_sq(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    pn = np.einsum("ij,ij->i", points, points)
    cn = np.einsum("ij,ij->i", centers, centers)
    d2 = pn[:, None] + cn[None, :] - 2.0 * (points @ centers.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def lloyd_kmeans(points, k: int, iters: int = 100, rng: np.random.Generator | None = None,
                 tol: float = 1e-6) -> KMeansResult:
    """Lloyd iteration from k-means++ seeds.

    Empty clusters are reseeded to the point currently farthest from its
    nearest centroid. Stops after ``iters`` updates or when the relative
    inertia improvement drops to ``tol``. The recorded inertia sequence is
    non-increasing.
    """
    X = np.asarray(points, dtype=np.float64)
    if rng is None:
        rng = np.random.default_rng(0)
    n = X.shape[0]
    centroids = X[kmeans_pp_init(X, k, rng)].copy()

    history: list[float] = []
    assign = None
    prev = None
    updates = 0
    while True:
        d2 = _pairwise_sq(X, centroids)
        assign = d2.argmin(axis=1)  # ties: lowest centroid index
        nearest = d2[np.arange(n), assign]
        inertia = float(nearest.sum())
        history.append(inertia)
        if prev is not None and prev - inertia <= tol * max(prev, 1e-300):
            break
        if updates >= iters:
            break
        prev = inertia
        new_centroids = centroids.copy()
        for c in range(k):
            members = assign == c
            if members.any():
                new_centroids[c] = X[members].mean(axis=0)
        empties = [c for c in range(k) if not (assign == c).any()]
        if empties:
            far_order = np.argsort(-nearest, kind="stable")
            for slot, c in enumerate(empties):
                new_centroids[c] = X[far_order[slot]]
        centroids = new_centroids
        updates += 1
    return KMeansResult(centroids=centroids, assignments=assign,
                        inertia=history[-1], inertia_history=history)


def acquire_kmeans_embedding(encodings: FeatureMatrix, b: int, rng: np.random.Generator,
                             normalize: bool = True, iters: int = 100) -> BatchSelection:
    """Cluster pool encodings into b groups, take each cluster's nearest point.

    Rows are optionally L2-normalized first. Clusters map to examples
    greedily in cluster-index order, each taking its closest not-yet-selected
    pool point (ties by ascending id), so the batch always holds b distinct ids.
    """
    t0 = time.perf_counter()
    if b > encodings.rows:
        raise SizingError(f"b={b} exceeds pool size {encodings.rows}")
    enc, = _canonical(encodings)
    X = enc.values.astype(np.float64)
    if normalize:
        norms = np.linalg.norm(X, axis=1)
        X = np.divide(X, norms[:, None], out=X.copy(), where=norms[:, None] > 0)
    result = lloyd_kmeans(X, b, iters=iters, rng=rng)
    d2 = _pairwise_sq(X, result.centroids)
    picked = []
    for c in range(b):
        col = d2[:, c].copy()
        col[picked] = np.inf
        picked.append(int(col.argmin()))  # rows are id-sorted: ties go to lowest id
    return BatchSelection(
        ids=[enc.row_ids[i] for i in picked],
        selection_seconds=time.perf_counter() - t0,
    )


def acquire_badge(model: Classifier, pool_features: FeatureMatrix, b: int,
                  rng: np.random.Generator) -> BatchSelection:
    """k-means++ seeding over last-layer gradient embeddings, in draw order."""
    t0 = time.perf_counter()
    emb = gradient_embedding(model, pool_features)
    emb, = _canonical(emb)
    take = kmeans_pp_init(emb.values.astype(np.float64), b, rng)
    return BatchSelection(
        ids=[emb.row_ids[int(i)] for i in take],
        selection_seconds=time.perf_counter() - t0,
    )
