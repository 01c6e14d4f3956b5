"""Snapshot training: SGD under a cyclic cosine learning-rate schedule.

One training run produces M encoder snapshots, captured at the end of
each annealing cycle, plus the noise-free embedding of the data under
each snapshot. The learning rate restarts to its maximum at every cycle
start and decays along a half cosine within the cycle.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass

import numpy as np

from .autoencoder import (
    AutoencoderSpec,
    EmbeddingSet,
    EncoderSnapshot,
    backward,
    encode,
    init_params,
    reconstruction_loss,
    sgd_step,
)
from .errors import ConfigError, DataError, NumericalError
from .rng import STAGE_BATCH, STAGE_EPOCH, STAGE_NOISE, SeedStream

SNAPSHOT_MAGIC = b"SSCW"
LANDMARK_MAGIC = b"SSCL"
CONTAINER_VERSION = 1

DEFAULT_MOMENTUM = 0.9


@dataclass(frozen=True)
class SnapshotSchedule:
    """Cyclic cosine annealing: max LR alpha0 over T epochs in M cycles."""

    alpha0: float
    total_epochs: int
    cycles: int

    def __post_init__(self):
        if not self.alpha0 > 0:
            raise ConfigError(f"alpha0 must be > 0, got {self.alpha0}")
        if self.cycles < 1:
            raise ConfigError(f"cycles must be >= 1, got {self.cycles}")
        if self.total_epochs < self.cycles:
            raise ConfigError(
                f"total_epochs {self.total_epochs} must be >= cycles {self.cycles}"
            )

    @property
    def cycle_length(self) -> int:
        return math.ceil(self.total_epochs / self.cycles)

    def fingerprint(self) -> dict:
        return {
            "alpha0": self.alpha0,
            "total_epochs": self.total_epochs,
            "cycles": self.cycles,
        }


def cosine_lr(t: int, schedule: SnapshotSchedule) -> float:
    """Learning rate at epoch t (1-based): restarts each cycle, cosine decay within."""
    if not 1 <= t <= schedule.total_epochs:
        raise ConfigError(f"epoch {t} outside schedule range [1, {schedule.total_epochs}]")
    L = schedule.cycle_length
    # divide before scaling by pi: the cycle fraction is then exact at the
    # endpoints and midpoint, so alpha(1) == alpha0 and the even-L midpoint
    # is exactly alpha0 / 2
    return 0.5 * schedule.alpha0 * (math.cos(math.pi * (((t - 1) % L) / L)) + 1.0)


def snapshot_epochs(schedule: SnapshotSchedule) -> list[int]:
    """Epochs at which the M snapshots are captured: min(i*L, T) for i=1..M.

    Always M entries. When T is not a multiple of M the final cycle is
    truncated at T; if trailing cycles collapse entirely, the last epoch
    repeats and the corresponding snapshots share weights.
    """
    L = schedule.cycle_length
    T = schedule.total_epochs
    return [min(i * L, T) for i in range(1, schedule.cycles + 1)]


def train_snapshots(
    X: np.ndarray,
    spec: AutoencoderSpec,
    schedule: SnapshotSchedule,
    batch_size: int,
    rng: SeedStream,
    momentum: float = DEFAULT_MOMENTUM,
    lr_per_batch: bool = False,
) -> tuple[list[EncoderSnapshot], EmbeddingSet]:
    """Train the denoising autoencoder and capture M encoder snapshots.

    Parameters
    ----------
    X : array, shape (n, d)
        Clean training data; also the reconstruction target.
    spec : AutoencoderSpec
        Architecture, activation, input noise level and weight init seed.
    schedule : SnapshotSchedule
        Cosine annealing schedule; one snapshot per cycle.
    batch_size : int
        Minibatch size, at most n.
    rng : SeedStream
        Source of batch shuffles and input noise. Weight init comes from
        spec.init_seed, so (spec, schedule, rng) fixes the run exactly.
    momentum : float
        Classical momentum coefficient (0 disables).
    lr_per_batch : bool
        Apply the cosine schedule per minibatch instead of per epoch; the
        schedule is then stretched to total_epochs * batches_per_epoch steps
        and snapshots land on the corresponding batch boundaries.

    Returns
    -------
    (snapshots, embeddings) : exactly M snapshots in cycle order, and the
        noise-free embedding of X under each snapshot.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError("training data must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise DataError("training data contains non-finite values")
    n = X.shape[0]
    if X.shape[1] != spec.input_size:
        raise DataError(f"data width {X.shape[1]} != autoencoder input {spec.input_size}")
    if not 1 <= batch_size <= n:
        raise ConfigError(f"batch_size must be in [1, {n}], got {batch_size}")

    n_batches = math.ceil(n / batch_size)
    if lr_per_batch:
        iter_schedule = SnapshotSchedule(
            schedule.alpha0, schedule.total_epochs * n_batches, schedule.cycles
        )
        capture_points = snapshot_epochs(iter_schedule)  # iteration indices
    else:
        iter_schedule = None
        capture_points = snapshot_epochs(schedule)  # epoch indices
    next_capture = 0  # index into the nondecreasing capture_points list

    params = init_params(spec)
    velocity = None
    snapshots: list[EncoderSnapshot] = []
    iteration = 0

    for t in range(1, schedule.total_epochs + 1):
        epoch_stream = rng.child(STAGE_EPOCH, t)
        order = epoch_stream.child(STAGE_BATCH).generator().permutation(n)
        noise_gen = epoch_stream.child(STAGE_NOISE).generator()
        lr = cosine_lr(t, schedule)

        loss_sum = 0.0
        for b in range(n_batches):
            iteration += 1
            if lr_per_batch:
                lr = cosine_lr(iteration, iter_schedule)
            idx = order[b * batch_size : (b + 1) * batch_size]
            clean = X[idx]
            if spec.input_noise_sigma > 0:
                noisy = clean + spec.input_noise_sigma * noise_gen.standard_normal(clean.shape)
            else:
                noisy = clean
            # divergence is detected from the loss, so let overflow reach it
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = backward(noisy, clean, params, spec.activation)
            if not math.isfinite(loss):
                raise NumericalError(
                    f"training diverged at epoch {t} (lr={lr:.6g}): non-finite loss"
                )
            loss_sum += loss
            params, velocity = sgd_step(params, grads, lr, momentum, velocity)
            if lr_per_batch:
                while next_capture < len(capture_points) and capture_points[next_capture] == iteration:
                    snapshots.append(_capture(params, spec, len(snapshots) + 1, loss_sum / (b + 1)))
                    next_capture += 1
        epoch_loss = loss_sum / n_batches
        if not lr_per_batch:
            while next_capture < len(capture_points) and capture_points[next_capture] == t:
                snapshots.append(_capture(params, spec, len(snapshots) + 1, epoch_loss))
                next_capture += 1

    if len(snapshots) != schedule.cycles:
        raise NumericalError(
            f"captured {len(snapshots)} snapshots, expected {schedule.cycles}"
        )
    provenance = {"schedule": schedule.fingerprint(), "autoencoder": spec.fingerprint()}
    members = [encode(X, s) for s in snapshots]
    for i, Y in enumerate(members):
        if not np.all(np.isfinite(Y)):
            raise NumericalError(
                f"embedding of snapshot {i + 1} overflowed; lower alpha0 or add noise"
            )
    return snapshots, EmbeddingSet(members, provenance)


def _capture(params, spec: AutoencoderSpec, cycle_index: int, loss: float) -> EncoderSnapshot:
    enc = [(W.copy(), b.copy()) for W, b in params[: spec.encoder_layer_count]]
    return EncoderSnapshot(enc, cycle_index, loss, spec.activation)


# ---------------------------------------------------------------------------
# Binary containers. Layout (all little-endian):
#   magic[4] | version u16 | layer_count u32
#   per layer: rows u32 | cols u32 | f64 weights row-major | f64 biases[cols]
#   meta_len u32 | UTF-8 JSON metadata
# Snapshots use magic SSCW, landmark sets SSCL (a single "layer" holding the
# p x d' center matrix with an empty bias vector).
# ---------------------------------------------------------------------------


def _write_container(path, magic: bytes, layers, meta: dict) -> None:
    blob = bytearray()
    blob += magic
    blob += struct.pack("<HI", CONTAINER_VERSION, len(layers))
    for W, b in layers:
        W = np.ascontiguousarray(W, dtype="<f8")
        b = np.ascontiguousarray(b, dtype="<f8")
        blob += struct.pack("<II", W.shape[0], W.shape[1])
        blob += W.tobytes()
        blob += b.tobytes()
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    blob += struct.pack("<I", len(meta_bytes))
    blob += meta_bytes
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def _read_container(path, magic: bytes):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 10 or data[:4] != magic:
        raise DataError(f"{path}: bad magic, expected {magic!r}")
    version, layer_count = struct.unpack_from("<HI", data, 4)
    if version != CONTAINER_VERSION:
        raise DataError(f"{path}: unsupported container version {version}")
    offset = 10
    layers = []
    for _ in range(layer_count):
        if offset + 8 > len(data):
            raise DataError(f"{path}: truncated layer header")
        rows, cols = struct.unpack_from("<II", data, offset)
        offset += 8
        need = 8 * (rows * cols + cols)
        if offset + need > len(data):
            raise DataError(f"{path}: truncated layer payload")
        W = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset)
        W = W.reshape(rows, cols).copy()
        offset += 8 * rows * cols
        b = np.frombuffer(data, dtype="<f8", count=cols, offset=offset).copy()
        offset += 8 * cols
        layers.append((W, b))
    if offset + 4 > len(data):
        raise DataError(f"{path}: truncated metadata length")
    (meta_len,) = struct.unpack_from("<I", data, offset)
    offset += 4
    if offset + meta_len > len(data):
        raise DataError(f"{path}: truncated metadata")
    meta = json.loads(data[offset : offset + meta_len].decode("utf-8"))
    return layers, meta


def save_snapshot(path, snapshot: EncoderSnapshot, provenance: dict | None = None) -> None:
    meta = {
        "cycle_index": snapshot.cycle_index,
        "train_loss": snapshot.train_loss,
        "activation": snapshot.activation,
        "provenance": provenance or {},
    }
    _write_container(path, SNAPSHOT_MAGIC, snapshot.weights, meta)


def load_snapshot(path) -> tuple[EncoderSnapshot, dict]:
    layers, meta = _read_container(path, SNAPSHOT_MAGIC)
    snap = EncoderSnapshot(
        layers,
        int(meta["cycle_index"]),
        float(meta["train_loss"]),
        str(meta.get("activation", "relu")),
    )
    return snap, meta.get("provenance", {})
