"""Fusion and the Gram-path SVD against dense oracles."""

import numpy as np
import pytest
import scipy.linalg

from snapclust.affinity import AffinityParams, build_affinity
from snapclust.consensus import (
    FusedAffinity,
    SpectralEmbedding,
    fuse,
    left_singular_vectors,
)
from snapclust.errors import ConfigError, DataError, NumericalError
from snapclust.landmarks import LandmarkSet
from snapclust.sparse import sparse_from_triplets


def random_affinity(gen, n, p, r):
    Y = gen.normal(size=(n, 3))
    lm = LandmarkSet(gen.normal(size=(p, 3)), seed=0)
    return build_affinity(Y, lm, AffinityParams(r=r))


def random_sparse(gen, n, p, r):
    trips = []
    for i in range(n):
        cols = sorted(gen.choice(p, size=r, replace=False).tolist())
        trips.extend((i, int(j), float(gen.uniform(0.05, 1.0))) for j in cols)
    return sparse_from_triplets(n, p, trips)


def test_fuse_single_member_is_identity():
    gen = np.random.default_rng(0)
    aff = random_affinity(gen, 12, 5, 2)
    fused = fuse([aff])
    assert fused.member_count == 1
    assert fused.member_boundaries == (0, 5)
    assert np.array_equal(fused.matrix.to_dense(), aff.matrix.to_dense())


def test_fuse_four_members_halves_values():
    gen = np.random.default_rng(1)
    members = [random_affinity(gen, 10, 4, 2) for _ in range(4)]
    fused = fuse(members)
    block = fused.matrix.to_dense()[:, :4]
    assert np.allclose(block, members[0].matrix.to_dense() * 0.5)
    assert fused.matrix.nnz == 4 * 10 * 2


def test_fused_row_sums_sqrt_m():
    gen = np.random.default_rng(2)
    for m in (1, 2, 3, 6):
        members = [random_affinity(gen, 15, 6, 3) for _ in range(m)]
        fused = fuse(members)
        assert np.allclose(fused.matrix.row_sums(), np.sqrt(m), atol=1e-9)


def test_fuse_mixed_widths_records_boundaries():
    gen = np.random.default_rng(3)
    a = random_affinity(gen, 10, 4, 2)
    b = random_affinity(gen, 10, 7, 2)
    fused = fuse([a, b])
    assert fused.member_boundaries == (0, 4, 11)
    assert fused.matrix.cols == 11


def test_fuse_rejects_row_mismatch():
    gen = np.random.default_rng(4)
    a = random_affinity(gen, 10, 4, 2)
    b = random_affinity(gen, 11, 4, 2)
    with pytest.raises(DataError):
        fuse([a, b])
    with pytest.raises(DataError):
        fuse([])


def test_identity_matrix_embedding():
    Z = sparse_from_triplets(4, 4, [(i, i, 1.0) for i in range(4)])
    emb = left_singular_vectors(Z, 2)
    assert np.allclose(emb.singular_values, [1.0, 1.0])
    # columns of U span a 2-D coordinate subspace; each is a standard basis vector
    for col in emb.U.T:
        assert np.isclose(np.abs(col).max(), 1.0)
        assert np.isclose(np.linalg.norm(col), 1.0)


def test_rank_one_example():
    a = np.array([3.0, 0.0, 4.0])
    b = np.array([1.0, 2.0])
    trips = [(i, j, a[i] * b[j]) for i in range(3) for j in range(2) if a[i] * b[j] != 0]
    Z = sparse_from_triplets(3, 2, trips)
    emb = left_singular_vectors(Z, 1)
    assert emb.singular_values[0] == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b))
    u = emb.U[:, 0]
    assert np.allclose(np.abs(u), np.abs(a) / np.linalg.norm(a), atol=1e-12)


def test_matches_dense_svd_oracle():
    gen = np.random.default_rng(5)
    done = 0
    while done < 25:
        n = int(gen.integers(10, 120))
        p = int(gen.integers(4, 30))
        r = int(gen.integers(1, min(p, 5)))
        Z = random_sparse(gen, n, p, r)
        U_ref, s_ref, _ = scipy.linalg.svd(Z.to_dense(), full_matrices=False)
        k = int(gen.integers(1, min(5, p) + 1))
        # subspace comparison needs a spectral gap at k
        if s_ref[0] <= 0 or s_ref[k - 1] <= 1e-8 * s_ref[0]:
            continue
        if k < len(s_ref) and (s_ref[k - 1] - s_ref[k]) < 1e-5 * s_ref[0]:
            continue
        emb = left_singular_vectors(Z, k)
        assert np.max(np.abs(emb.singular_values - s_ref[:k]) / s_ref[:k]) <= 1e-10
        P_impl = emb.U @ emb.U.T
        P_ref = U_ref[:, :k] @ U_ref[:, :k].T
        assert np.linalg.norm(P_impl - P_ref) <= 1e-8
        done += 1


def test_orthonormal_columns():
    gen = np.random.default_rng(6)
    for _ in range(10):
        Z = random_sparse(gen, 40, 8, 3)
        emb = left_singular_vectors(Z, 3)
        G = emb.U.T @ emb.U
        assert np.max(np.abs(G - np.eye(3))) <= 1e-8
        assert np.all(np.diff(emb.singular_values) <= 1e-12)


def test_sign_fix_deterministic():
    gen = np.random.default_rng(7)
    Z = random_sparse(gen, 30, 6, 2)
    a = left_singular_vectors(Z, 3)
    b = left_singular_vectors(Z, 3)
    assert np.array_equal(a.U, b.U)
    # largest-magnitude entry of each column is positive
    for col in a.U.T:
        assert col[np.argmax(np.abs(col))] > 0


def test_rank_deficiency_rejected():
    # rank-1 matrix cannot support k=2
    trips = [(i, j, 1.0) for i in range(4) for j in range(2)]
    Z = sparse_from_triplets(4, 2, trips)
    with pytest.raises(NumericalError, match="rank"):
        left_singular_vectors(Z, 2)


def test_k_bounds():
    Z = sparse_from_triplets(3, 2, [(0, 0, 1.0), (1, 1, 1.0)])
    with pytest.raises(ConfigError):
        left_singular_vectors(Z, 0)
    with pytest.raises(ConfigError):
        left_singular_vectors(Z, 3)  # k > cols


def test_fused_affinity_accepts_valid_only():
    gen = np.random.default_rng(8)
    aff = random_affinity(gen, 10, 4, 2)
    scaled = aff.matrix.scaled(1.0)
    FusedAffinity(scaled, 1, (0, 4))
    with pytest.raises(DataError):
        FusedAffinity(scaled, 4, (0, 4))  # row sums inconsistent with m=4
    with pytest.raises(DataError):
        FusedAffinity(scaled, 1, (0, 3))  # boundary mismatch


def test_row_normalize_flag():
    gen = np.random.default_rng(9)
    Z = random_sparse(gen, 25, 6, 3)
    emb = left_singular_vectors(Z, 2, row_normalize=True)
    norms = np.linalg.norm(emb.U, axis=1)
    assert np.allclose(norms[norms > 1e-12], 1.0, atol=1e-9)
    assert emb.row_normalized


def test_degree_normalize_flag_changes_embedding():
    gen = np.random.default_rng(10)
    Z = random_sparse(gen, 25, 6, 3)
    plain = left_singular_vectors(Z, 2)
    deg = left_singular_vectors(Z, 2, degree_normalize=True)
    assert deg.degree_normalized and not plain.degree_normalized
    assert not np.allclose(plain.U, deg.U)


def test_spectral_embedding_validation():
    with pytest.raises(DataError):
        SpectralEmbedding(np.ones((4, 2)), np.array([2.0, 1.0]))  # not orthonormal
