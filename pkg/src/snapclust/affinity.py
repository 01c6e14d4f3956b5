"""Sparse point-to-landmark affinity matrices.

Each data point keeps Gaussian kernel weights to its r nearest landmarks
and drops everything else, so each row has exactly r nonzeros and sums to
one after normalization. Density is r/p by construction, independent of n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distances import EUCLIDEAN, Metric, pairwise_distance
from .errors import ConfigError, DataError, NumericalError
from .landmarks import LandmarkSet
from .sparse import SparseRowMatrix

ROW_SUM_TOL = 1e-10


def scott_bandwidth(Y: np.ndarray) -> float:
    """Scott's rule on the embedding: mean per-dim std times n^(-1/(d+4)).

    Standard deviations use the n-1 denominator. Degenerate input (fewer
    than two samples, or all rows identical) has no usable spread.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise DataError("bandwidth needs at least two samples")
    n, d = Y.shape
    sigma = float(np.mean(np.std(Y, axis=0, ddof=1))) * n ** (-1.0 / (d + 4))
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise DataError("degenerate embedding: zero spread in every dimension")
    return sigma


@dataclass(frozen=True)
class AffinityParams:
    """Sparsity r, the distance metric, and an optional fixed bandwidth."""

    r: int
    metric: Metric = EUCLIDEAN
    sigma: float | None = None

    def __post_init__(self):
        if self.r < 1:
            raise ConfigError(f"sparsity must be at least 1, got r={self.r}")
        if self.sigma is not None and not self.sigma > 0:
            raise ConfigError(f"bandwidth must be positive, got {self.sigma}")


def _nearest_rows(dists: np.ndarray, r: int) -> np.ndarray:
    # stable sort keeps the original (lower) index first on exact ties
    return np.argsort(dists, axis=1, kind="stable")[:, :r]


def nearest_landmarks(
    x: np.ndarray, landmarks: LandmarkSet, r: int, metric: Metric = EUCLIDEAN
) -> np.ndarray:
    """Indices of the r landmarks nearest to x, ties to the lower index."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("nearest_landmarks expects a single vector")
    if not 1 <= r < landmarks.p:
        raise ConfigError(f"need 1 <= r < p, got r={r}, p={landmarks.p}")
    dists = pairwise_distance(x[None, :], landmarks.centers, metric)
    return _nearest_rows(dists, r)[0]


@dataclass
class SparseAffinity:
    """Row-stochastic n x p affinity with exactly r nonzeros per row."""

    matrix: SparseRowMatrix
    params: AffinityParams
    bandwidth: float
    landmark_ref: str = ""

    def __post_init__(self):
        counts = self.matrix.row_counts()
        if not np.all(counts == self.params.r):
            raise DataError(f"affinity rows must hold exactly r={self.params.r} nonzeros")
        sums = self.matrix.row_sums()
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOL):
            raise DataError("affinity rows must sum to 1")
        if self.matrix.nnz and self.matrix.values.min() <= 0.0:
            raise DataError("affinity values must lie in (0, 1]")
        if self.bandwidth <= 0:
            raise DataError("bandwidth must be positive")

    @property
    def r(self) -> int:
        return self.params.r

    @property
    def shape(self) -> tuple[int, int]:
        return (self.matrix.rows, self.matrix.cols)

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    @property
    def density(self) -> float:
        return self.params.r / self.matrix.cols

    def footprint_bytes(self) -> int:
        return self.matrix.footprint_bytes()


def build_affinity(
    Y: np.ndarray,
    landmarks: LandmarkSet | np.ndarray,
    params: AffinityParams,
) -> SparseAffinity:
    """Gaussian affinities from every point to its r nearest landmarks.

    Kernel weights are exp(-dist^2 / (2 sigma^2)) with sigma from Scott's
    rule unless fixed in params. Each row is shifted by its smallest
    squared distance before exponentiation; the shift cancels in
    normalization and keeps the largest term at exp(0), so a row can
    never underflow to all zeros. A row whose farther kernels still
    underflow would break the strictly-positive-values contract, which is
    reported as a numerical failure rather than silently densified.
    """
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if isinstance(landmarks, LandmarkSet):
        centers, ref = landmarks.centers, landmarks.fingerprint()
    else:
        centers, ref = np.ascontiguousarray(landmarks, dtype=np.float64), ""
    if Y.ndim != 2 or centers.ndim != 2 or Y.shape[1] != centers.shape[1]:
        raise DataError(f"embedding/landmark dims disagree: {Y.shape} vs {centers.shape}")
    n, p = Y.shape[0], centers.shape[0]
    r = params.r
    if not 1 <= r < p:
        raise ConfigError(f"sparsity must satisfy 1 <= r < p, got r={r}, p={p}")
    sigma = scott_bandwidth(Y) if params.sigma is None else float(params.sigma)

    dists = pairwise_distance(Y, centers, params.metric)
    nearest = _nearest_rows(dists, r)
    rows = np.arange(n)[:, None]
    sel_sq = dists[rows, nearest] ** 2
    shifted = sel_sq - sel_sq.min(axis=1, keepdims=True)
    weights = np.exp(-shifted / (2.0 * sigma * sigma))
    if weights.min() <= 0.0:
        bad = int(np.nonzero(weights.min(axis=1) <= 0.0)[0][0])
        raise NumericalError(
            f"kernel underflow in affinity row {bad}; increase the bandwidth "
            f"(sigma={sigma:.3e}) or reduce sparsity r"
        )
    weights /= weights.sum(axis=1, keepdims=True)

    # CSR wants ascending columns per row; sort the r picks by landmark index
    order = np.argsort(nearest, axis=1, kind="stable")
    cols = np.take_along_axis(nearest, order, axis=1).reshape(-1)
    vals = np.take_along_axis(weights, order, axis=1).reshape(-1)
    offsets = np.arange(n + 1, dtype=np.int64) * r
    matrix = SparseRowMatrix(n, p, offsets, cols.astype(np.int64), vals)
    return SparseAffinity(matrix, params=params, bandwidth=sigma, landmark_ref=ref)
