"""Member fusion and the spectral embedding of the fused affinity.

Fusion concatenates the m member affinities column-wise and scales by
1/sqrt(m), so the fused Gram matrix is the average of the member Grams.
The k leading left singular vectors are recovered through the small
(m*p x m*p) Gram eigendecomposition and a single sparse back-multiply,
never by densifying the n x m*p matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .affinity import SparseAffinity
from .errors import ConfigError, DataError, NumericalError
from .sparse import GRAM_COLS_CAP, SparseRowMatrix, hstack_scaled

RANK_TOL = 1e-10
FUSED_ROW_SUM_TOL = 1e-9


@dataclass
class FusedAffinity:
    """Column-concatenated member affinities, scaled by 1/sqrt(m).

    Every row sums to sqrt(m): each member row contributes 1/sqrt(m) * 1.
    member_boundaries[i] is the first column of member i's block, with a
    closing entry at the total width, so members may differ in p.
    """

    matrix: SparseRowMatrix
    member_count: int
    member_boundaries: tuple[int, ...]

    def __post_init__(self):
        if self.member_count < 1:
            raise DataError("fusion needs at least one member")
        b = self.member_boundaries
        if (
            len(b) != self.member_count + 1
            or b[0] != 0
            or b[-1] != self.matrix.cols
            or any(b[i] >= b[i + 1] for i in range(len(b) - 1))
        ):
            raise DataError("member boundaries must partition the fused columns")
        target = math.sqrt(self.member_count)
        sums = self.matrix.row_sums()
        if np.any(np.abs(sums - target) > FUSED_ROW_SUM_TOL * max(1.0, target)):
            raise DataError(f"fused rows must sum to sqrt(m) = {target:.6g}")

    @property
    def rows(self) -> int:
        return self.matrix.rows

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def footprint_bytes(self) -> int:
        return self.matrix.footprint_bytes()


def fuse(members: list[SparseAffinity]) -> FusedAffinity:
    """Fuse member affinities into one row-scaled block matrix."""
    if not members:
        raise DataError("fuse: empty member list")
    m = len(members)
    factor = 1.0 / math.sqrt(m)
    fused = hstack_scaled([a.matrix for a in members], factor)
    boundaries = (0, *np.cumsum([a.matrix.cols for a in members]).tolist())
    return FusedAffinity(fused, m, tuple(int(x) for x in boundaries))


@dataclass
class SpectralEmbedding:
    """Rows of U are the spectral coordinates fed to the final clustering."""

    U: np.ndarray
    singular_values: np.ndarray
    degree_normalized: bool = False
    row_normalized: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.U = np.ascontiguousarray(self.U, dtype=np.float64)
        self.singular_values = np.ascontiguousarray(self.singular_values, dtype=np.float64)
        if self.U.ndim != 2 or self.singular_values.shape != (self.U.shape[1],):
            raise DataError("embedding shape mismatch between U and singular values")
        if not np.all(np.isfinite(self.U)):
            raise DataError("spectral embedding must be finite")
        if np.any(self.singular_values < 0) or np.any(np.diff(self.singular_values) > 0):
            raise DataError("singular values must be nonnegative and nonincreasing")
        if not self.row_normalized:
            # row normalization deliberately trades orthonormality for unit rows
            G = self.U.T @ self.U
            if np.max(np.abs(G - np.eye(self.k))) > 1e-8:
                raise DataError("embedding columns must be orthonormal within 1e-8")

    @property
    def k(self) -> int:
        return self.U.shape[1]


def _degree_scale(M: SparseRowMatrix) -> SparseRowMatrix:
    # scale column j by 1/sqrt(column sum); all-zero columns stay zero
    colsums = np.zeros(M.cols, dtype=np.float64)
    np.add.at(colsums, M.col_indices, M.values)
    scale = np.where(colsums > 0, 1.0 / np.sqrt(np.where(colsums > 0, colsums, 1.0)), 0.0)
    return SparseRowMatrix(
        M.rows, M.cols, M.row_offsets, M.col_indices, M.values * scale[M.col_indices]
    )


def left_singular_vectors(
    fused: FusedAffinity | SparseRowMatrix,
    k: int,
    degree_normalize: bool = False,
    row_normalize: bool = False,
) -> SpectralEmbedding:
    """Top-k left singular vectors of the fused matrix, via its Gram matrix.

    Eigendecomposing G = Z^T Z (small, m*p wide) and back-substituting
    u_i = Z v_i / s_i costs O(nnz * k) instead of an O(n * (mp)^2) dense
    SVD. Raises when the requested rank is not numerically supported
    (s_k <= 1e-10 * s_1). Column signs are fixed so the entry of largest
    magnitude in each vector is positive.
    """
    M = fused.matrix if isinstance(fused, FusedAffinity) else fused
    if not 1 <= k <= min(M.rows, M.cols):
        raise ConfigError(f"k must satisfy 1 <= k <= min(n, m*p), got k={k} for {M.rows}x{M.cols}")
    if M.cols > GRAM_COLS_CAP:
        raise DataError(f"fused width {M.cols} exceeds the dense Gram cap {GRAM_COLS_CAP}")
    if degree_normalize:
        M = _degree_scale(M)

    G = M.gram()
    w, V = np.linalg.eigh(G)
    # eigh orders ascending; keep the top k, largest first
    w = w[::-1][:k]
    V = V[:, ::-1][:, :k]
    s = np.sqrt(np.maximum(w, 0.0))
    if s[0] <= 0.0 or s[k - 1] <= RANK_TOL * s[0]:
        raise NumericalError(
            f"fused affinity is rank deficient: s_{k}={s[k - 1]:.3e} vs s_1={s[0]:.3e}"
        )
    U = M.matmul_dense(V) / s[None, :]

    # deterministic sign: largest-magnitude entry of each column positive
    anchor = np.argmax(np.abs(U), axis=0)
    signs = np.where(U[anchor, np.arange(k)] < 0, -1.0, 1.0)
    U *= signs[None, :]

    if row_normalize:
        norms = np.linalg.norm(U, axis=1, keepdims=True)
        U = U / np.where(norms > 0, norms, 1.0)

    return SpectralEmbedding(
        U,
        s,
        degree_normalized=bool(degree_normalize),
        row_normalized=bool(row_normalize),
    )
