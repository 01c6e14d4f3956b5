"""End-to-end pipeline runs, baselines, artifacts, sweeps, footprints."""

import json
import os

import numpy as np
import pytest

from snapclust.config import PipelineConfig, load_config
from snapclust.datasets import make_blobs
from snapclust.errors import ConfigError, DataError, NumericalError
from snapclust.pipeline import (
    BASELINES,
    MODELS,
    footprint_report,
    run_baseline,
    run_model,
    run_ssc,
    run_ssc_rm,
    sweep,
    train_ensemble,
)
from snapclust.rng import STAGE_REPEAT, STAGE_TRAIN, SeedStream
from snapclust.trainer import SnapshotSchedule, train_snapshots

DATA_SEED = 42


def small_config(**overrides):
    base = dict(
        m=2,
        cycle_length=2,
        alpha0=0.001,
        encoding_size=3,
        hidden=(8,),
        landmarks=10,
        sparsity=2,
        k=3,
        seed=0,
        repeats=2,
        batch_size=32,
        activation="identity",
    )
    base.update(overrides)
    return PipelineConfig(**base)


def small_data():
    return make_blobs(90, 5, 3, separation=5.0, noise_sigma=0.3, seed=DATA_SEED)


def test_report_shape_with_truth():
    X, y = small_data()
    cfg = small_config()
    partition, report, record = run_ssc(cfg, X, y)
    assert report["config_fingerprint"] == cfg.fingerprint()
    assert report["repeats"] == cfg.repeats
    assert "mutual information" in report["nmi_variant"]
    assert len(report["runs"]) == cfg.repeats
    for entry in report["runs"]:
        assert set(entry) == {"inertia", "nmi", "ari", "acc"}
        assert np.isfinite(entry["inertia"])
    for key in ("nmi", "ari", "acc"):
        assert report[key] == report["mean"][key]
        vals = [entry[key] for entry in report["runs"]]
        assert report["mean"][key] == pytest.approx(np.mean(vals))
        assert report["std"][key] == pytest.approx(np.std(vals, ddof=1))
    assert partition.labels.shape == (90,)
    assert record.fingerprint == cfg.fingerprint()
    assert record.model == "ssc"
    # timings live on the record, not in the report
    assert "train" in record.stage_seconds and "kmeans" in record.stage_seconds
    assert not any("seconds" in key for key in report)


def test_report_without_truth():
    X, _ = small_data()
    _, report, _ = run_ssc(small_config(repeats=1), X)
    assert report["nmi"] is None and report["ari"] is None and report["acc"] is None
    assert set(report["runs"][0]) == {"inertia"}
    assert set(report["mean"]) == {"inertia"}


def test_spectral_footprint_recorded():
    X, _ = small_data()
    cfg = small_config(repeats=1)
    _, _, record = run_ssc(cfg, X)
    fp = record.footprint
    assert fp["fused_nnz"] == cfg.m * 90 * cfg.sparsity
    assert fp["density"] == cfg.sparsity / cfg.landmarks
    assert fp["member_affinity_bytes"] == 90 * cfg.sparsity * 12 + 91 * 8
    assert fp["dense_equivalent_bytes"] == 90 * 90 * 8
    _, _, plain = run_baseline("kmeans", cfg, X)
    assert plain.footprint == {}


def test_run_ssc_rejects_metric_list():
    X, _ = small_data()
    with pytest.raises(ConfigError, match="use run_ssc_rm"):
        run_ssc(small_config(metrics=("euclidean", "cosine")), X)


def test_run_ssc_rm_requires_metric_list():
    X, _ = small_data()
    with pytest.raises(ConfigError, match="nonempty metric list"):
        run_ssc_rm(small_config(), X)


def test_run_ssc_rm_round_robin_runs():
    X, y = small_data()
    cfg = small_config(m=3, metrics=("euclidean", "cosine", "minkowski:3"), repeats=1)
    partition, report, record = run_ssc_rm(cfg, X, y)
    assert record.model == "ssc_rm"
    assert partition.labels.shape == (90,)
    assert 0.0 <= report["nmi"] <= 1.0


def test_baselines_all_run():
    X, y = small_data()
    cfg = small_config(repeats=1)
    for model in BASELINES:
        partition, report, record = run_baseline(model, cfg, X, y)
        assert record.model == model
        assert partition.labels.shape == (90,)
        assert len(report["runs"]) == 1


def test_kmeans_baseline_separated_blobs():
    # well-separated blobs are trivial for plain kmeans
    X, y = make_blobs(300, 5, 3, separation=8.0, noise_sigma=0.2, seed=1)
    _, report, _ = run_baseline("kmeans", small_config(repeats=3), X, y)
    assert report["nmi"] >= 0.99


def test_lsc_max_landmarks():
    # p up to n-1 is legal for the untrained spectral baseline
    X, y = make_blobs(40, 4, 3, separation=6.0, noise_sigma=0.3, seed=2)
    cfg = small_config(landmarks=39, sparsity=3, repeats=1)
    _, report, _ = run_baseline("lsc", cfg, X, y)
    assert len(report["runs"]) == 1


def test_unknown_model_rejected():
    X, _ = small_data()
    with pytest.raises(ConfigError, match="unknown model"):
        run_model("dbscan", small_config(), X)
    with pytest.raises(ConfigError, match="unknown baseline"):
        run_baseline("ssc", small_config(), X)


def test_input_validation():
    X, y = small_data()
    with pytest.raises(ConfigError, match="no dataset"):
        run_ssc(small_config())
    with pytest.raises(DataError, match="non-finite"):
        bad = X.copy()
        bad[0, 0] = np.nan
        run_ssc(small_config(), bad)
    with pytest.raises(DataError, match="truth labels"):
        run_ssc(small_config(), X, y[:-1])
    with pytest.raises(ConfigError, match="exceeds n"):
        run_ssc(small_config(k=91), X)


def test_stage_error_prefix():
    X, _ = small_data()
    cfg = small_config(alpha0=1e6, repeats=1)
    with pytest.raises(NumericalError, match=r"train stage: training diverged"):
        run_ssc(cfg, X)


def test_artifacts_written_and_deterministic(tmp_path):
    X, y = small_data()
    cfg = small_config()
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    _, _, rec_a = run_ssc(cfg, X, y, out_dir=out_a)
    _, _, rec_b = run_ssc(cfg, X, y, out_dir=out_b)
    names = sorted(os.listdir(out_a))
    assert names == ["config.txt", "labels_rep0.txt", "labels_rep1.txt", "report.json", "run.json"]
    # everything except run.json (wall-clock timings) is byte-identical
    for name in names:
        if name == "run.json":
            continue
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
    # config round trip through the artifact
    assert load_config(out_a / "config.txt") == cfg
    # labels files parse back to the run's labels
    first = np.loadtxt(out_a / "labels_rep0.txt", dtype=np.int64)
    assert first.shape == (90,)
    report = json.loads((out_a / "report.json").read_text())
    assert report == rec_a.report
    run_doc = json.loads((out_a / "run.json").read_text())
    assert run_doc["model"] == "ssc"
    assert run_doc["config_fingerprint"] == cfg.fingerprint()
    assert set(run_doc["artifacts"]) == {"labels", "report", "config"}
    assert rec_a.artifact_paths["report"] == str(out_a / "report.json")
    assert rec_b.report == rec_a.report


def test_dataset_loaded_from_config(tmp_path):
    from snapclust.datasets import save_rawf32

    X, y = small_data()
    path = tmp_path / "blobs.rawf32"
    save_rawf32(path, X)
    cfg = small_config(dataset=str(path), repeats=1)
    partition, _, _ = run_ssc(cfg, truth=y)
    assert partition.labels.shape == (90,)


def test_budget_parity_single_cycle():
    # baselines spend the same L*m epochs, all in one annealing cycle
    X, _ = small_data()
    cfg = small_config(m=3, cycle_length=2)
    snaps, embeds = train_ensemble(X, cfg, repeat_index=0, cycles=1)
    assert len(snaps) == 1 and len(embeds.members) == 1
    rep = SeedStream(cfg.seed).child(STAGE_REPEAT, 0)
    from snapclust.autoencoder import AutoencoderSpec

    init_seed = int(rep.child(4).generator().integers(0, 2**63))
    spec = AutoencoderSpec.from_encoder_widths(
        [5, 8, 3],
        activation="identity",
        input_noise_sigma=cfg.noise_sigma,
        init_seed=init_seed,
    )
    schedule = SnapshotSchedule(cfg.alpha0, cfg.total_epochs, 1)
    direct_snaps, _ = train_snapshots(
        X, spec, schedule, cfg.batch_size, rep.child(STAGE_TRAIN), momentum=cfg.momentum
    )
    for (W, b), (W2, b2) in zip(snaps[0].weights, direct_snaps[0].weights):
        assert np.array_equal(W, W2) and np.array_equal(b, b2)


def test_sweep_empty_values():
    X, _ = small_data()
    assert sweep(small_config(), "sparsity", [], X) == []


def test_sweep_unknown_field():
    X, _ = small_data()
    with pytest.raises(ConfigError, match="unknown hyperparameter"):
        sweep(small_config(), "learning_rate", [0.1], X)


def test_sweep_runs_per_value(tmp_path):
    X, y = small_data()
    cfg = small_config(repeats=1)
    records = sweep(cfg, "sparsity", [2, 3], X, y, out_dir=tmp_path)
    assert len(records) == 2
    fingerprints = {rec.fingerprint for rec in records}
    assert len(fingerprints) == 2
    assert sorted(os.listdir(tmp_path)) == ["sparsity_2", "sparsity_3"]
    for rec, r in zip(records, (2, 3)):
        assert rec.model == "ssc"
        assert rec.report["repeats"] == 1
        assert rec.footprint["density"] == r / cfg.landmarks


def test_sweep_picks_rm_when_metrics_set():
    X, y = small_data()
    cfg = small_config(repeats=1, metrics=("euclidean", "cosine"))
    records = sweep(cfg, "m", [1, 2], X, y)
    assert [rec.model for rec in records] == ["ssc_rm", "ssc_rm"]


def test_footprint_report_reference_scale():
    fp = footprint_report(70000, 350, 3, 6)
    assert fp["member_affinity_bytes"] == 70000 * 3 * 12 + 70001 * 8
    assert fp["member_affinity_mib"] == pytest.approx(2.937, abs=2e-3)
    assert fp["dense_equivalent_bytes"] == 70000 * 70000 * 8
    assert fp["dense_equivalent_gib"] == pytest.approx(36.51, abs=0.01)
    assert fp["fused_nnz"] == 1_260_000
    assert fp["density"] == pytest.approx(3 / 350)


def test_footprint_report_validates():
    with pytest.raises(ConfigError):
        footprint_report(0, 10, 2, 1)
    with pytest.raises(ConfigError):
        footprint_report(100, 10, 2, 0)


def test_models_constant():
    assert MODELS == ("ssc", "ssc_rm", "kmeans", "dae_kmeans", "lsc", "dae_lsc")
    assert set(BASELINES) < set(MODELS)
