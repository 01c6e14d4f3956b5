"""Landmark selection via minibatch KMeans (Sculley-style online updates).

Landmarks are the cluster centers of a streamed KMeans over the embedding;
selection always measures euclidean distance, independent of the metric
later used for affinities. Per-batch center updates use the running-mean
form, which is the sequential per-point rule in closed form.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .kmeans import kmeans_pp_init, _sq_dists
from .rng import STAGE_BATCH, STAGE_INIT, SeedStream

DEFAULT_BATCH_SIZE = 1024
DEFAULT_MAX_BATCHES = 100
MOVEMENT_TOL = 1e-4


@dataclass
class LandmarkSet:
    """p representative points in embedding space, selected euclidean-only."""

    centers: np.ndarray
    seed: int
    source_metric: str = "euclidean"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.ascontiguousarray(self.centers, dtype=np.float64)
        if self.centers.ndim != 2 or self.centers.shape[0] < 2:
            raise DataError("landmark set needs a 2-D center matrix with p >= 2")
        if not np.all(np.isfinite(self.centers)):
            raise DataError("landmark centers must be finite")

    @property
    def p(self) -> int:
        return self.centers.shape[0]

    @property
    def dims(self) -> int:
        return self.centers.shape[1]

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.centers.tobytes())
        h.update(f"{self.p}:{self.source_metric}:{self.seed}".encode())
        return h.hexdigest()[:16]


def minibatch_kmeans(
    Y: np.ndarray,
    p: int,
    rng: SeedStream,
    batch_size: int = DEFAULT_BATCH_SIZE,
    max_iters: int = DEFAULT_MAX_BATCHES,
) -> LandmarkSet:
    """Select p landmarks from embedding Y by streamed KMeans.

    Initialization is k-means++ on a uniform subset of max(10p, 2048)
    points. Each batch assigns its points to the nearest center and moves
    every touched center to the running mean of all points it has ever
    absorbed. Stops after `max_iters` batches or when relative center
    movement falls below 1e-4. Centers never leave the bounding box of Y.
    """
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    if Y.ndim != 2 or Y.shape[0] == 0:
        raise DataError("minibatch_kmeans: empty input")
    n = Y.shape[0]
    if not 2 <= p < n:
        raise ConfigError(f"landmark count must satisfy 2 <= p < n, got p={p}, n={n}")

    init_gen = rng.child(STAGE_INIT).generator()
    subset_size = min(n, max(10 * p, 2048))
    subset = init_gen.choice(n, size=subset_size, replace=False)
    centers = kmeans_pp_init(Y[subset], p, init_gen)

    counts = np.zeros(p, dtype=np.int64)
    batch_gen = rng.child(STAGE_BATCH).generator()
    bsz = min(batch_size, n)
    for _ in range(max_iters):
        idx = batch_gen.choice(n, size=bsz, replace=False)
        B = Y[idx]
        sq = _sq_dists(B, centers)
        assign = np.argmin(sq, axis=1)

        old = centers.copy()
        batch_counts = np.bincount(assign, minlength=p)
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, B)
        touched = batch_counts > 0
        new_total = counts + batch_counts
        centers[touched] = (
            counts[touched, None] * centers[touched] + sums[touched]
        ) / new_total[touched, None]
        counts = new_total

        dead = np.nonzero(counts == 0)[0]
        if dead.size:
            # farthest batch points from their assigned centers, one per dead center
            mind = sq[np.arange(bsz), assign]
            order = np.argsort(mind, kind="stable")[::-1]
            for j, c in enumerate(dead[: bsz]):
                centers[c] = B[order[j]]
                counts[c] = 1

        movement = np.linalg.norm(centers - old) / max(np.linalg.norm(old), 1e-300)
        if movement < MOVEMENT_TOL:
            break

    meta = {"n": n, "batch_size": bsz, "max_iters": max_iters}
    return LandmarkSet(centers, seed=rng.seed, meta=meta)


def save_landmarks(path, landmarks: LandmarkSet) -> None:
    """Write a landmark set as a single-block binary container."""
    from .trainer import LANDMARK_MAGIC, _write_container

    meta = {
        "seed": landmarks.seed,
        "source_metric": landmarks.source_metric,
        "meta": landmarks.meta,
    }
    empty_bias = np.zeros(landmarks.dims, dtype=np.float64)
    _write_container(path, LANDMARK_MAGIC, [(landmarks.centers, empty_bias)], meta)


def load_landmarks(path) -> LandmarkSet:
    from .trainer import LANDMARK_MAGIC, _read_container

    layers, meta = _read_container(path, LANDMARK_MAGIC)
    if len(layers) != 1:
        raise DataError(f"{path}: landmark container must hold exactly one block")
    centers, _ = layers[0]
    return LandmarkSet(
        centers,
        seed=int(meta.get("seed", 0)),
        source_metric=str(meta.get("source_metric", "euclidean")),
        meta=dict(meta.get("meta", {})),
    )
