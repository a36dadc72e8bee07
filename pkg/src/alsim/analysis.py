"""Diagnostics for an acquired batch Q relative to the pool U.

Four metrics characterize what a strategy selects:

* ``div_input``: Jaccard similarity between the token vocabulary of Q and
  that of the unsampled rest; high overlap means the batch is not a
  vocabulary outlier.
* ``div_feature``: inverse of the mean distance from each pool point to its
  nearest batch member; batches that cover the pool geometrically score high.
* ``uncertainty_of_batch``: mean predictive entropy of Q under a reference
  model trained on everything.
* ``representativeness``: inverse of the batch-mean distance to each
  member's K nearest pool neighbors (self excluded); dense, non-outlier
  batches score high. ``literal=True`` switches to the inverse-of-average-
  density reading.
"""

import math
from dataclasses import dataclass

import numpy as np

from .acquisition import _entropy_rows
from .dataset import FeatureMatrix
from .errors import SizingError, StateError, UndefinedMetricError, ValidationError


@dataclass
class BatchDiagnostics:
    """The four batch metrics; fields are None when a metric is undefined."""

    div_input: float | None
    div_feature: float | None
    uncertainty: float | None
    representativeness: float | None


def div_input(q_tokens, rest_tokens) -> float:
    """Jaccard similarity of the two vocabulary sets."""
    a, b = set(q_tokens), set(rest_tokens)
    if not a and not b:
        raise UndefinedMetricError("both vocabulary sets are empty")
    return len(a & b) / len(a | b)


def _sq_dists(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    an = np.einsum("ij,ij->i", A, A)
    bn = np.einsum("ij,ij->i", B, B)
    d2 = an[:, None] + bn[None, :] - 2.0 * (A @ B.T)
    np.maximum(d2, 0.0, out=d2)
    return d2


def div_feature(q_ids, u_ids, encodings: FeatureMatrix) -> float:
    """Inverse of the mean over U of the distance to the nearest Q member.

    Q must be a non-empty subset of U; batch members contribute distance 0.
    A zero mean (Q covers U's geometry exactly) returns +inf.
    """
    q_ids, u_ids = list(q_ids), list(u_ids)
    if not q_ids:
        raise ValidationError("Q is empty")
    if not set(q_ids) <= set(u_ids):
        raise ValidationError("Q must be a subset of U")
    U = encodings.subset(u_ids).values.astype(np.float64)
    Q = encodings.subset(q_ids).values.astype(np.float64)
    nearest = np.sqrt(_sq_dists(U, Q)).min(axis=1)
    mean = float(nearest.mean())
    return math.inf if mean == 0.0 else 1.0 / mean


def uncertainty_of_batch(q_ids, probs, prob_ids) -> float:
    """Mean predictive entropy (nats) of the batch under the reference model."""
    probs = np.asarray(probs, dtype=np.float64)
    row_of = {str(i): n for n, i in enumerate(prob_ids)}
    rows = []
    for ex_id in q_ids:
        if str(ex_id) not in row_of:
            raise StateError(f"no probability row for id {ex_id!r}")
        rows.append(row_of[str(ex_id)])
    return float(_entropy_rows(probs[rows]).mean())


def representativeness(q_ids, u_ids, encodings: FeatureMatrix, K: int = 10,
                       literal: bool = False) -> float:
    """Density score of the batch from each member's K nearest pool neighbors.

    For each q in Q: the mean Euclidean distance to its K nearest neighbors
    within U, the point itself excluded. Default reading: inverse of the
    batch-mean of those distances. ``literal=True``: inverse of the
    batch-mean density (density = inverse mean distance). Any zero mean
    distance yields the +inf sentinel.
    """
    q_ids, u_ids = [str(i) for i in q_ids], [str(i) for i in u_ids]
    if not q_ids:
        raise ValidationError("Q is empty")
    if len(u_ids) <= K:
        raise SizingError(f"need |U| >= {K + 1}, got {len(u_ids)}")
    U = encodings.subset(u_ids).values.astype(np.float64)
    Q = encodings.subset(q_ids).values.astype(np.float64)
    d = np.sqrt(_sq_dists(Q, U))
    u_pos = {u: n for n, u in enumerate(u_ids)}
    for row, q in enumerate(q_ids):
        if q in u_pos:
            d[row, u_pos[q]] = np.inf  # self-exclusion
    d.sort(axis=1)
    mean_k = d[:, :K].mean(axis=1)
    if np.any(mean_k == 0.0):
        return math.inf
    if literal:
        return float(1.0 / (1.0 / mean_k).mean())
    return float(1.0 / mean_k.mean())
