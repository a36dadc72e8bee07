"""Exact K-nearest-neighbor search with Euclidean distance.

Distances are computed in float64 via ||a||^2 + ||b||^2 - 2 a.b over query
blocks (a blocked matrix-multiply), with negative round-off clamped to zero.
Results are exact: equal-distance candidates are ordered by ascending
reference row index, so output is independent of query block size.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .errors import ShapeError, ValidationError

log = logging.getLogger(__name__)

_QUERY_BLOCK = 512


class KnnIndex:
    """Immutable search structure over a reference matrix (e.g. labeled encodings)."""

    def __init__(self, reference: FeatureMatrix):
        if reference.rows == 0:
            raise ValidationError("reference matrix is empty")
        if not np.all(np.isfinite(reference.values)):
            raise ValidationError("reference matrix has non-finite values")
        self.reference = reference
        self._ref = reference.values.astype(np.float64)
        self.norms = np.einsum("ij,ij->i", self._ref, self._ref)

    @property
    def size(self) -> int:
        return self.reference.rows

    @property
    def dim(self) -> int:
        return self.reference.cols


@dataclass
class NeighborSet:
    """k reference rows ascending by distance to one query point."""

    ids: list[str]
    indices: np.ndarray
    distances: np.ndarray
    clamped: bool = False


def build_index(reference: FeatureMatrix) -> KnnIndex:
    """Precompute row norms over the reference corpus; queries never mutate it."""
    return KnnIndex(reference)


def query(index: KnnIndex, q, k: int) -> NeighborSet:
    """Exact k nearest reference rows to a single query vector."""
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dim:
        raise ShapeError(f"query has dim {q.shape[0]}, reference has {index.dim}")
    indices, distances, clamped = query_batch(index, q[None, :], k)
    ids = [index.reference.row_ids[i] for i in indices[0]]
    return NeighborSet(ids=ids, indices=indices[0], distances=distances[0], clamped=clamped)


def query_batch(index: KnnIndex, queries, k: int):
    """Exact k-NN for many queries at once.

    Returns (indices, distances, clamped) where both arrays have shape
    (n_queries, k_eff) and k_eff = min(k, reference size); ``clamped`` flags
    that k exceeded the reference size (logged, not an error).
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    Q = queries.values if isinstance(queries, FeatureMatrix) else queries
    Q = np.asarray(Q, dtype=np.float64)
    if Q.ndim != 2 or Q.shape[1] != index.dim:
        raise ShapeError(f"queries have shape {Q.shape}, reference dim is {index.dim}")

    clamped = k > index.size
    if clamped:
        log.warning("k=%d exceeds reference size %d; clamping", k, index.size)
    k_eff = min(k, index.size)

    n = Q.shape[0]
    indices = np.empty((n, k_eff), dtype=np.int64)
    distances = np.empty((n, k_eff), dtype=np.float64)
    for start in range(0, n, _QUERY_BLOCK):
        block = Q[start:start + _QUERY_BLOCK]
        qnorm = np.einsum("ij,ij->i", block, block)
        d2 = qnorm[:, None] + index.norms[None, :] - 2.0 * (block @ index._ref.T)
        np.maximum(d2, 0.0, out=d2)
        # stable sort: equal distances keep ascending reference row index
        order = np.argsort(d2, axis=1, kind="stable")[:, :k_eff]
        indices[start:start + block.shape[0]] = order
        distances[start:start + block.shape[0]] = np.sqrt(
            np.take_along_axis(d2, order, axis=1)
        )
    return indices, distances, clamped
