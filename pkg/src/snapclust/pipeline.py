"""End-to-end clustering pipelines, baselines, sweeps and run artifacts.

One run = `repeats` independent executions with derived seeds, evaluated
against ground truth when available and aggregated into a single report.
Artifacts per run: one labels file per repeat (one integer per line),
report.json (deterministic for a fixed config and seed), config.txt, and
run.json. Wall-clock timings appear only in run.json so every other
artifact is byte-reproducible.

The ensemble pipeline and the dae_lsc baseline intentionally share one
code path: a single-member ensemble IS the base model, so the degeneracy
holds structurally instead of by test luck.
"""

from __future__ import annotations

import contextlib
import dataclasses
import json
import os
import time

import numpy as np

from .affinity import AffinityParams, build_affinity
from .autoencoder import AutoencoderSpec
from .config import PipelineConfig, save_config
from .consensus import fuse, left_singular_vectors
from .datasets import load_dataset, save_labels
from .distances import parse_metric
from .errors import ConfigError, DataError, SnapclustError
from .evaluation import METRIC_KEYS, aggregate, score
from .kmeans import Partition, kmeans
from .landmarks import minibatch_kmeans
from .rng import (
    STAGE_INIT,
    STAGE_KMEANS,
    STAGE_LANDMARKS,
    STAGE_REPEAT,
    STAGE_TRAIN,
    SeedStream,
)
from .trainer import SnapshotSchedule, train_snapshots

MODELS = ("ssc", "ssc_rm", "kmeans", "dae_kmeans", "lsc", "dae_lsc")
BASELINES = ("kmeans", "dae_kmeans", "lsc", "dae_lsc")

_TRAINED = ("ssc", "ssc_rm", "dae_kmeans", "dae_lsc")
_SPECTRAL = ("ssc", "ssc_rm", "lsc", "dae_lsc")

NMI_VARIANT = "sqrt-normalized mutual information, natural log"

# reported struct accounting: 8-byte value + 4-byte column index per entry,
# 8-byte row offsets
_ENTRY_BYTES = 12
_OFFSET_BYTES = 8


@dataclasses.dataclass
class RunRecord:
    """Everything about one aggregated run except the partitions themselves."""

    model: str
    fingerprint: str
    stage_seconds: dict
    total_seconds: float
    artifact_paths: dict
    report: dict
    footprint: dict


@contextlib.contextmanager
def _stage(timings: dict, name: str):
    start = time.perf_counter()
    try:
        yield
    except SnapclustError as exc:
        raise type(exc)(f"{name} stage: {exc}") from exc
    finally:
        timings[name] = timings.get(name, 0.0) + (time.perf_counter() - start)


def _check_matrix(X) -> np.ndarray:
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError("dataset must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(X)):
        raise DataError("dataset contains non-finite values")
    return X


def train_ensemble(
    X: np.ndarray, config: PipelineConfig, repeat_index: int = 0, cycles: int | None = None
):
    """Train the denoising autoencoder under the run's seed tree.

    Returns (snapshots, embeddings). `cycles` defaults to the ensemble
    size; baselines pass 1 to spend the same L*m epoch budget on a single
    snapshot. The repeat index isolates both the weight init and every
    batch/noise stream, so repeats are genuinely independent.
    """
    rep = SeedStream(config.seed).child(STAGE_REPEAT, repeat_index)
    n, d = X.shape
    init_seed = int(rep.child(STAGE_INIT).generator().integers(0, 2**63))
    spec = AutoencoderSpec.from_encoder_widths(
        [d, *config.hidden, config.encoding_size],
        activation=config.activation,
        input_noise_sigma=config.noise_sigma,
        init_seed=init_seed,
    )
    schedule = SnapshotSchedule(
        config.alpha0, config.total_epochs, config.m if cycles is None else cycles
    )
    return train_snapshots(
        X,
        spec,
        schedule,
        min(config.batch_size, n),
        rep.child(STAGE_TRAIN),
        momentum=config.momentum,
    )


def _single_run(
    model: str, X: np.ndarray, config: PipelineConfig, repeat_index: int, timings: dict
) -> tuple[Partition, dict]:
    """One fully seeded pipeline execution; returns (partition, footprint)."""
    rep = SeedStream(config.seed).child(STAGE_REPEAT, repeat_index)
    n = X.shape[0]
    footprint = {}

    if model in _TRAINED:
        cycles = config.m if model in ("ssc", "ssc_rm") else 1
        with _stage(timings, "train"):
            _, embeddings = train_ensemble(X, config, repeat_index, cycles)
        members_Y = embeddings.members
    else:
        members_Y = [X]

    if model in _SPECTRAL:
        members = []
        for j, Y in enumerate(members_Y):
            with _stage(timings, "landmarks"):
                lm = minibatch_kmeans(Y, config.landmarks, rep.child(STAGE_LANDMARKS, j))
            with _stage(timings, "affinity"):
                params = AffinityParams(
                    config.sparsity, parse_metric(config.member_metric(j))
                )
                members.append(build_affinity(Y, lm, params))
        with _stage(timings, "fuse"):
            fused = fuse(members)
        with _stage(timings, "svd"):
            U = left_singular_vectors(
                fused,
                config.k,
                degree_normalize=config.degree_normalize,
                row_normalize=config.row_normalize,
            )
        with _stage(timings, "kmeans"):
            partition = kmeans(U, config.k, rep.child(STAGE_KMEANS))
        footprint = {
            "member_affinity_bytes": members[0].footprint_bytes(),
            "fused_nnz": fused.nnz,
            "density": members[0].density,
            "dense_equivalent_bytes": n * n * 8,
        }
    else:
        with _stage(timings, "kmeans"):
            partition = kmeans(members_Y[0], config.k, rep.child(STAGE_KMEANS))

    return partition, footprint


def _build_report(config: PipelineConfig, per_run: list[dict] | None) -> dict:
    report = {
        "config_fingerprint": config.fingerprint(),
        "repeats": config.repeats,
        "nmi_variant": NMI_VARIANT,
    }
    if not per_run:
        report.update({key: None for key in METRIC_KEYS})
        report.update({"mean": None, "std": None, "runs": []})
        return report
    agg = aggregate(per_run)
    report["runs"] = per_run
    report["mean"] = {key: agg[key]["mean"] for key in agg}
    report["std"] = {key: agg[key]["std"] for key in agg}
    for key in METRIC_KEYS:
        report[key] = agg[key]["mean"] if key in agg else None
    return report


def _write_artifacts(
    out_dir,
    config: PipelineConfig,
    partitions: list[Partition],
    report: dict,
    run_doc: dict,
) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    written = []
    paths = {"labels": []}
    try:
        for i, part in enumerate(partitions):
            path = os.path.join(out_dir, f"labels_rep{i}.txt")
            save_labels(path, part.labels)
            written.append(path)
            paths["labels"].append(path)
        paths["report"] = os.path.join(out_dir, "report.json")
        with open(paths["report"], "w", encoding="utf-8") as fh:
            fh.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
        written.append(paths["report"])
        paths["config"] = os.path.join(out_dir, "config.txt")
        save_config(paths["config"], config)
        written.append(paths["config"])
        run_doc = dict(run_doc, artifacts={k: v for k, v in paths.items()})
        paths["run"] = os.path.join(out_dir, "run.json")
        with open(paths["run"], "w", encoding="utf-8") as fh:
            fh.write(json.dumps(run_doc, sort_keys=True, indent=2) + "\n")
        written.append(paths["run"])
    except OSError as exc:
        # never leave a half-written artifact directory behind
        for path in written:
            with contextlib.suppress(OSError):
                os.remove(path)
        raise DataError(f"cannot write artifacts to {out_dir}: {exc}") from None
    return paths


def run_model(
    model: str,
    config: PipelineConfig,
    X: np.ndarray | None = None,
    truth: np.ndarray | None = None,
    out_dir=None,
) -> tuple[Partition, dict, RunRecord]:
    """Run any pipeline or baseline; the canonical partition is repeat 0.

    With `truth` given, every repeat is scored and the report aggregates
    mean and sample std per metric. With `out_dir` given, artifacts are
    persisted there.
    """
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; expected one of {MODELS}")
    config.validate()
    wall_start = time.perf_counter()
    if X is None:
        if not config.dataset:
            raise ConfigError("no dataset given: pass a matrix or set config.dataset")
        X = load_dataset(config.dataset, config.format)
    X = _check_matrix(X)
    if truth is not None:
        truth = np.asarray(truth)
        if truth.shape != (X.shape[0],):
            raise DataError(
                f"truth labels length {truth.shape} does not match n={X.shape[0]}"
            )
    if config.k > X.shape[0]:
        raise ConfigError(f"k={config.k} exceeds n={X.shape[0]}")

    timings: dict = {}
    partitions: list[Partition] = []
    per_run: list[dict] = []
    footprint: dict = {}
    for i in range(config.repeats):
        partition, footprint = _single_run(model, X, config, i, timings)
        partitions.append(partition)
        entry = {"inertia": partition.inertia}
        if truth is not None:
            with _stage(timings, "evaluate"):
                entry.update(score(partition.labels, truth))
        per_run.append(entry)

    report = _build_report(config, per_run)
    total = time.perf_counter() - wall_start
    run_doc = {
        "model": model,
        "config": dataclasses.asdict(config),
        "config_fingerprint": config.fingerprint(),
        "n": int(X.shape[0]),
        "d": int(X.shape[1]),
        "stage_seconds": timings,
        "total_seconds": total,
        "footprint": footprint,
    }
    paths = _write_artifacts(out_dir, config, partitions, report, run_doc) if out_dir else {}
    record = RunRecord(
        model=model,
        fingerprint=config.fingerprint(),
        stage_seconds=dict(timings),
        total_seconds=total,
        artifact_paths=paths,
        report=report,
        footprint=footprint,
    )
    return partitions[0], report, record


def run_ssc(config: PipelineConfig, X=None, truth=None, out_dir=None):
    """Snapshot-ensemble spectral clustering with a single distance metric."""
    if config.random_metric:
        raise ConfigError("config carries a metric list; use run_ssc_rm")
    return run_model("ssc", config, X, truth, out_dir)


def run_ssc_rm(config: PipelineConfig, X=None, truth=None, out_dir=None):
    """Random-metric variant: member i uses metrics[i mod len(metrics)]."""
    if not config.random_metric:
        raise ConfigError("run_ssc_rm needs a nonempty metric list in config.metrics")
    return run_model("ssc_rm", config, X, truth, out_dir)


def run_baseline(model: str, config: PipelineConfig, X=None, truth=None, out_dir=None):
    """One of the reference models: kmeans, dae_kmeans, lsc, dae_lsc."""
    if model not in BASELINES:
        raise ConfigError(f"unknown baseline {model!r}; expected one of {BASELINES}")
    return run_model(model, config, X, truth, out_dir)


def sweep(
    config: PipelineConfig,
    name: str,
    values,
    X=None,
    truth=None,
    out_dir=None,
) -> list[RunRecord]:
    """One aggregated run per value of a single config field.

    All other fields stay at the template's values. Output directories are
    suffixed with the swept value so runs never collide.
    """
    field_names = {f.name for f in dataclasses.fields(PipelineConfig)}
    if name not in field_names:
        raise ConfigError(f"unknown hyperparameter {name!r}; expected a config field")
    records: list[RunRecord] = []
    if X is None and config.dataset and name not in ("dataset", "format"):
        X = load_dataset(config.dataset, config.format)
    for value in values:
        cfg = config.replace(**{name: value})
        model = "ssc_rm" if cfg.random_metric else "ssc"
        sub_dir = os.path.join(out_dir, f"{name}_{value}") if out_dir else None
        _, _, record = run_model(model, cfg, X, truth, sub_dir)
        records.append(record)
    return records


def footprint_report(n: int, p: int, r: int, m: int) -> dict:
    """Memory accounting for the sparse representation vs a dense n x n one."""
    if n < 1 or p < 1 or r < 1 or m < 1:
        raise ConfigError("footprint needs positive n, p, r, m")
    member_bytes = n * r * _ENTRY_BYTES + (n + 1) * _OFFSET_BYTES
    dense_bytes = n * n * 8
    return {
        "n": n,
        "landmarks": p,
        "sparsity": r,
        "ensemble_size": m,
        "density": r / p,
        "member_affinity_bytes": member_bytes,
        "member_affinity_mib": member_bytes / 2**20,
        "fused_nnz": m * n * r,
        "fused_bytes": m * n * r * _ENTRY_BYTES + (n + 1) * _OFFSET_BYTES,
        "dense_equivalent_bytes": dense_bytes,
        "dense_equivalent_gib": dense_bytes / 2**30,
    }
