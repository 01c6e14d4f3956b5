"""Command line interface.

Subcommands: train, cluster, baseline, sweep, evaluate, synth, info.
Configuration precedence: built-in defaults < --config file < flags.
Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .config import PipelineConfig, load_config
from .datasets import (
    load_dataset,
    load_labels,
    make_blobs,
    make_moons,
    save_labels,
    save_rawf32,
)
from .errors import ConfigError, SnapclustError
from .evaluation import score
from .pipeline import (
    BASELINES,
    footprint_report,
    run_model,
    sweep,
    train_ensemble,
)
from .trainer import save_snapshot

_CONFIG_FLAGS = (
    "dataset",
    "format",
    "m",
    "cycle_length",
    "alpha0",
    "encoding_size",
    "hidden",
    "landmarks",
    "sparsity",
    "metric",
    "metrics",
    "k",
    "seed",
    "repeats",
    "batch_size",
    "noise_sigma",
    "momentum",
    "activation",
    "degree_normalize",
    "row_normalize",
)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key=value config file")
    p.add_argument("--dataset", metavar="PATH", help="input data matrix")
    p.add_argument("--format", choices=("auto", "idx", "csv", "rawf32"))
    p.add_argument("--m", type=int, help="ensemble size")
    p.add_argument("--cycle-length", dest="cycle_length", type=int)
    p.add_argument("--alpha0", type=float, help="max learning rate")
    p.add_argument("--encoding-size", dest="encoding_size", type=int)
    p.add_argument("--hidden", help="comma list of extra encoder widths")
    p.add_argument("--landmarks", type=int, help="landmark count p")
    p.add_argument("--sparsity", type=int, help="kept nearest landmarks r")
    p.add_argument("--metric", help="euclidean | cosine | minkowski[:q]")
    p.add_argument(
        "--metrics", help="comma list of metrics; enables the random-metric variant"
    )
    p.add_argument("--k", type=int, help="cluster count")
    p.add_argument("--seed", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--activation", choices=("relu", "identity"))
    p.add_argument(
        "--degree-normalize",
        dest="degree_normalize",
        action=argparse.BooleanOptionalAction,
        help="scale columns by inverse sqrt landmark degree before the SVD",
    )
    p.add_argument(
        "--row-normalize",
        dest="row_normalize",
        action=argparse.BooleanOptionalAction,
        help="normalize spectral embedding rows before the final clustering",
    )


def _merge_config(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is None:
            continue
        if name == "hidden":
            parts = [part.strip() for part in value.split(",") if part.strip()]
            try:
                value = tuple(int(part) for part in parts)
            except ValueError:
                raise ConfigError(f"bad --hidden list {value!r}") from None
        elif name == "metrics":
            value = tuple(part.strip() for part in value.split(",") if part.strip())
        overrides[name] = value
    return config.replace(**overrides)


def _require_dataset(config: PipelineConfig) -> np.ndarray:
    if not config.dataset:
        raise ConfigError("a dataset is required: pass --dataset or set it in --config")
    return load_dataset(config.dataset, config.format)


def _maybe_truth(args: argparse.Namespace):
    path = getattr(args, "labels", None)
    return load_labels(path) if path else None


def _print_json(doc) -> None:
    print(json.dumps(doc, sort_keys=True, indent=2))


def _cmd_train(args) -> int:
    config = _merge_config(args).validate()
    X = _require_dataset(config)
    snapshots, embeddings = train_ensemble(X, config)
    os.makedirs(args.out, exist_ok=True)
    paths = []
    for i, (snap, emb) in enumerate(zip(snapshots, embeddings.members)):
        weight_path = os.path.join(args.out, f"snapshot_cycle{i + 1}.sscw")
        save_snapshot(weight_path, snap, embeddings.provenance)
        emb_path = os.path.join(args.out, f"embedding_member{i + 1}.rawf32")
        save_rawf32(emb_path, emb)
        paths.append({"snapshot": weight_path, "embedding": emb_path, "loss": snap.train_loss})
    _print_json(
        {
            "config_fingerprint": config.fingerprint(),
            "epochs": config.total_epochs,
            "members": paths,
        }
    )
    return 0


def _cmd_cluster(args) -> int:
    config = _merge_config(args)
    truth = _maybe_truth(args)
    model = "ssc_rm" if config.random_metric else "ssc"
    _, report, record = run_model(model, config, None, truth, args.out)
    _print_json(dict(report, model=model, artifacts=record.artifact_paths))
    return 0


def _cmd_baseline(args) -> int:
    config = _merge_config(args)
    truth = _maybe_truth(args)
    _, report, record = run_model(args.model, config, None, truth, args.out)
    _print_json(dict(report, model=args.model, artifacts=record.artifact_paths))
    return 0


def _cmd_sweep(args) -> int:
    from .config import _parse_value  # same typing rules as config files

    config = _merge_config(args)
    truth = _maybe_truth(args)
    raw = [part.strip() for part in args.values.split(",") if part.strip()]
    if not raw and args.values.strip():
        raise ConfigError(f"bad --values list {args.values!r}")
    values = [_parse_value(args.param, part) for part in raw]
    records = sweep(config, args.param, values, None, truth, args.out)

    rows = []
    for value, record in zip(values, records):
        mean = record.report.get("nmi")
        std = (record.report.get("std") or {}).get("nmi")
        rows.append({"value": value, "nmi_mean": mean, "nmi_std": std})
    doc = {"param": args.param, "rows": rows}
    if args.param == "m" and all(row["nmi_mean"] is not None for row in rows):
        ordered = sorted(rows, key=lambda row: row["value"])
        means = [row["nmi_mean"] for row in ordered]
        doc["nondecreasing_trend"] = all(b >= a for a, b in zip(means, means[1:]))
    _print_json(doc)

    print(f"\n{args.param:>16}  {'mean NMI':>10}  {'std':>8}", file=sys.stderr)
    for row in rows:
        mean = "-" if row["nmi_mean"] is None else f"{row['nmi_mean']:.4f}"
        std = "-" if row["nmi_std"] is None else f"{row['nmi_std']:.4f}"
        print(f"{str(row['value']):>16}  {mean:>10}  {std:>8}", file=sys.stderr)
    return 0


def _cmd_evaluate(args) -> int:
    truth = load_labels(args.labels)
    pred = load_labels(args.predictions)
    _print_json(score(pred, truth))
    return 0


def _cmd_synth(args) -> int:
    if args.kind == "blobs":
        X, labels = make_blobs(
            args.n, args.d, args.k, args.separation, args.noise_sigma, args.seed
        )
    else:
        X, labels = make_moons(args.n, args.noise_sigma, args.seed)
    os.makedirs(args.out, exist_ok=True)
    if args.data_format == "csv":
        data_path = os.path.join(args.out, "data.csv")
        np.savetxt(data_path, X, delimiter=",", fmt="%.17g")
    else:
        data_path = os.path.join(args.out, "data.rawf32")
        save_rawf32(data_path, X)
    labels_path = os.path.join(args.out, "labels.txt")
    save_labels(labels_path, labels)
    _print_json(
        {
            "kind": args.kind,
            "n": int(X.shape[0]),
            "d": int(X.shape[1]),
            "data": data_path,
            "labels": labels_path,
        }
    )
    return 0


def _cmd_info(args) -> int:
    config = _merge_config(args)
    _print_json(footprint_report(args.n, config.landmarks, config.sparsity, config.m))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snapclust",
        description="Snapshot-ensemble spectral clustering on landmark affinities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the autoencoder, save snapshots + embeddings")
    _add_config_flags(p)
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("cluster", help="full ensemble clustering pipeline")
    _add_config_flags(p)
    p.add_argument("--labels", metavar="PATH", help="ground-truth labels for scoring")
    p.add_argument("--out", metavar="DIR", help="artifact directory")
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("baseline", help="run a reference model")
    p.add_argument("model", choices=BASELINES)
    _add_config_flags(p)
    p.add_argument("--labels", metavar="PATH")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=_cmd_baseline)

    p = sub.add_parser("sweep", help="one aggregated run per hyperparameter value")
    p.add_argument("param", help="config field to vary")
    p.add_argument("--values", required=True, help="comma list of values")
    _add_config_flags(p)
    p.add_argument("--labels", metavar="PATH")
    p.add_argument("--out", metavar="DIR")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("evaluate", help="score predicted labels against ground truth")
    p.add_argument("predictions", metavar="PRED_LABELS")
    p.add_argument("--labels", required=True, metavar="PATH", help="ground truth")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("kind", choices=("blobs", "moons"))
    p.add_argument("--n", type=int, default=600)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--separation", type=float, default=5.0)
    p.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=0.3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data-format", dest="data_format", choices=("rawf32", "csv"), default="rawf32")
    p.add_argument("--out", required=True, metavar="DIR")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("info", help="memory footprint report for a problem size")
    _add_config_flags(p)
    p.add_argument("--n", type=int, required=True, help="dataset size")
    p.set_defaults(func=_cmd_info)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SnapclustError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
