"""CLI: subcommands, config precedence, exit codes, artifact flows."""

import json
import subprocess
import sys

import numpy as np
import pytest

from snapclust.cli import main
from snapclust.config import PipelineConfig
from snapclust.datasets import make_blobs, save_labels, save_rawf32

FAST = [
    "--m", "2",
    "--cycle-length", "2",
    "--alpha0", "0.001",
    "--encoding-size", "3",
    "--hidden", "8",
    "--landmarks", "10",
    "--sparsity", "2",
    "--k", "3",
    "--repeats", "1",
    "--batch-size", "32",
    "--activation", "identity",
]


@pytest.fixture(scope="module")
def blob_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("blobdata")
    X, y = make_blobs(90, 5, 3, separation=5.0, noise_sigma=0.3, seed=42)
    data = root / "data.rawf32"
    labels = root / "labels.txt"
    save_rawf32(data, X)
    save_labels(labels, y)
    return str(data), str(labels)


def run_cli(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cluster_json_report(blob_files, capsys, tmp_path):
    data, labels = blob_files
    code, out, _ = run_cli(
        ["cluster", "--dataset", data, "--labels", labels, "--out", str(tmp_path), *FAST],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["model"] == "ssc"
    assert doc["repeats"] == 1
    assert 0.0 <= doc["nmi"] <= 1.0
    assert (tmp_path / "report.json").exists()
    assert (tmp_path / "labels_rep0.txt").exists()


def test_cluster_metrics_flag_selects_rm(blob_files, capsys):
    data, labels = blob_files
    code, out, _ = run_cli(
        ["cluster", "--dataset", data, "--labels", labels,
         "--metrics", "euclidean,cosine", *FAST],
        capsys,
    )
    assert code == 0
    assert json.loads(out)["model"] == "ssc_rm"


def test_cluster_without_labels_or_out(blob_files, capsys):
    data, _ = blob_files
    code, out, _ = run_cli(["cluster", "--dataset", data, *FAST], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["nmi"] is None


def test_train_writes_snapshots(blob_files, capsys, tmp_path):
    data, _ = blob_files
    code, out, _ = run_cli(["train", "--dataset", data, "--out", str(tmp_path), *FAST], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["epochs"] == 4  # cycle_length 2 * m 2
    assert len(doc["members"]) == 2
    assert (tmp_path / "snapshot_cycle1.sscw").exists()
    assert (tmp_path / "embedding_member2.rawf32").exists()
    from snapclust.datasets import load_rawf32
    from snapclust.trainer import load_snapshot

    snap, meta = load_snapshot(tmp_path / "snapshot_cycle1.sscw")
    assert snap.cycle_index == 1
    emb = load_rawf32(tmp_path / "embedding_member1.rawf32")
    assert emb.shape == (90, 3)


def test_baseline_subcommand(blob_files, capsys):
    data, labels = blob_files
    code, out, _ = run_cli(
        ["baseline", "kmeans", "--dataset", data, "--labels", labels, *FAST], capsys
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["model"] == "kmeans"
    assert 0.0 <= doc["nmi"] <= 1.0


def test_synth_cluster_evaluate_flow(capsys, tmp_path):
    code, out, _ = run_cli(
        ["synth", "blobs", "--n", "90", "--d", "5", "--k", "3",
         "--separation", "5", "--noise-sigma", "0.3", "--seed", "42",
         "--out", str(tmp_path)],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["n"] == 90 and doc["d"] == 5

    run_dir = tmp_path / "run"
    code, out, _ = run_cli(
        ["cluster", "--dataset", doc["data"], "--labels", doc["labels"],
         "--out", str(run_dir), *FAST],
        capsys,
    )
    assert code == 0

    code, out, _ = run_cli(
        ["evaluate", str(run_dir / "labels_rep0.txt"), "--labels", doc["labels"]],
        capsys,
    )
    assert code == 0
    scores = json.loads(out)
    assert set(scores) == {"nmi", "ari", "acc"}


def test_synth_moons_csv(capsys, tmp_path):
    code, out, _ = run_cli(
        ["synth", "moons", "--n", "40", "--seed", "1",
         "--data-format", "csv", "--out", str(tmp_path)],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["kind"] == "moons" and doc["d"] == 2
    X = np.loadtxt(doc["data"], delimiter=",")
    assert X.shape == (40, 2)


def test_sweep_subcommand(blob_files, capsys):
    data, labels = blob_files
    code, out, err = run_cli(
        ["sweep", "sparsity", "--values", "2,3",
         "--dataset", data, "--labels", labels, *FAST],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["param"] == "sparsity"
    assert [row["value"] for row in doc["rows"]] == [2, 3]
    assert all(row["nmi_mean"] is not None for row in doc["rows"])
    # human-readable table goes to stderr, json to stdout
    assert "mean NMI" in err


def test_sweep_m_reports_trend(blob_files, capsys):
    data, labels = blob_files
    code, out, _ = run_cli(
        ["sweep", "m", "--values", "1,2",
         "--dataset", data, "--labels", labels, *FAST],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    # the ensemble-size trend is reported as a flag, never asserted
    assert doc["nondecreasing_trend"] in (True, False)


def test_info_subcommand(capsys):
    code, out, _ = run_cli(
        ["info", "--n", "70000", "--landmarks", "350", "--sparsity", "3", "--m", "6"],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["member_affinity_mib"] == pytest.approx(2.937, abs=2e-3)
    assert doc["dense_equivalent_gib"] == pytest.approx(36.51, abs=0.01)
    assert doc["fused_nnz"] == 1_260_000


def test_config_file_with_flag_override(blob_files, capsys, tmp_path):
    from snapclust.config import save_config

    data, labels = blob_files
    cfg = PipelineConfig(
        dataset=data, m=2, cycle_length=2, alpha0=0.001, encoding_size=3,
        hidden=(8,), landmarks=10, sparsity=2, k=3, repeats=1,
        batch_size=32, activation="identity",
    )
    path = tmp_path / "run.cfg"
    save_config(path, cfg)
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(
        ["cluster", "--config", str(path), "--labels", labels,
         "--seed", "7", "--out", str(out_dir)],
        capsys,
    )
    assert code == 0
    doc = json.loads(out)
    # flag overrides the file: fingerprint reflects seed=7
    assert doc["config_fingerprint"] == cfg.replace(seed=7).fingerprint()


def test_exit_code_config_error(capsys):
    code, _, err = run_cli(["cluster", "--k", "0", "--dataset", "whatever"], capsys)
    assert code == 2
    assert "error:" in err


def test_exit_code_missing_dataset(capsys):
    code, _, err = run_cli(["cluster", *FAST], capsys)
    assert code == 2
    assert "no dataset" in err
    # train uses its own helper with the same exit code
    code, _, err = run_cli(["train", "--out", "/tmp/unused", *FAST], capsys)
    assert code == 2
    assert "dataset is required" in err


def test_exit_code_data_error(capsys, tmp_path):
    bad = tmp_path / "bad.rawf32"
    bad.write_bytes(b"NOPE" + b"\x00" * 16)
    code, _, err = run_cli(
        ["cluster", "--dataset", str(bad), "--format", "rawf32", *FAST], capsys
    )
    assert code == 3
    assert "error:" in err


def test_exit_code_numerical_error(blob_files, capsys):
    data, _ = blob_files
    args = [arg for arg in FAST]
    args[args.index("0.001")] = "1e6"  # divergent learning rate
    code, _, err = run_cli(["cluster", "--dataset", data, *args], capsys)
    assert code == 4
    assert "diverged" in err


def test_console_entrypoint_exit_codes(blob_files, tmp_path):
    # the module runs as a subprocess and propagates exit codes to the shell
    data, labels = blob_files
    proc = subprocess.run(
        [sys.executable, "-m", "snapclust.cli", "cluster",
         "--dataset", data, "--labels", labels, "--out", str(tmp_path), *FAST],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    doc = json.loads(proc.stdout)
    assert doc["model"] == "ssc"

    proc = subprocess.run(
        [sys.executable, "-m", "snapclust.cli", "cluster", "--dataset", data,
         "--k", "0"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
