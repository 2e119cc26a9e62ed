"""Command-line experiment harness.

Subcommands: gen-radar, embed-graph, train-eval, baseline, selfcheck.  Every
command is deterministic given its config (seeds included) and writes
machine-readable, schema-versioned JSON metrics.  Exit codes: 0 success,
1 usage/config error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import torch

from . import baselines, diff, models, selfcheck
from .data import graph as graph_data
from .data import io as data_io
from .data import radar as radar_data
from .errors import ConfigError, DivergedTraining, FormatError, SiegelNetError

METRICS_SCHEMA_VERSION = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _load_json_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"config file not found: {path}") from err
    except json.JSONDecodeError as err:
        raise FormatError(f"{path}: invalid JSON: {err}") from err


def _write_json(path, payload: dict) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# gen-radar
# ---------------------------------------------------------------------------

def cmd_gen_radar(args) -> int:
    cfg = _load_json_config(args.config)
    test_fraction = cfg.pop("test_fraction", 0.5)
    if args.seed is not None:
        cfg["seed"] = args.seed
    config = radar_data.ARDatasetConfig.from_dict(cfg)
    ds = radar_data.build_radar_dataset(config, test_fraction=test_fraction)
    data_io.save_dataset(args.out, ds)
    counts = torch.bincount(ds.labels, minlength=config.n_classes).tolist()
    print(f"wrote {args.out}")
    print(f"signature: {list(ds.signature)}")
    print(f"samples: {int(ds.labels.numel())}  per-class counts: {counts}")
    print(f"split: train={int(ds.train_idx.numel())} test={int(ds.test_idx.numel())}")
    return 0


# ---------------------------------------------------------------------------
# embed-graph
# ---------------------------------------------------------------------------

def _read_features_csv(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except FileNotFoundError as err:
        raise ConfigError(f"features file not found: {path}") from err
    if not lines:
        raise FormatError(f"{path}: empty features file")
    header = None
    first = lines[0].split(",")
    try:
        [float(tok) for tok in first]
    except ValueError:
        header = [tok.strip() for tok in first]
        lines = lines[1:]
    if not lines:
        raise FormatError(f"{path}: no data rows")
    rows = []
    for i, ln in enumerate(lines):
        toks = ln.split(",")
        try:
            rows.append([float(tok) for tok in toks])
        except ValueError as err:
            raise FormatError(f"{path}: line {i + 2 if header else i + 1}: {err}") from err
    mat = np.asarray(rows, dtype=np.float64)
    labels = None
    if header is not None and "label" in [h.lower() for h in header]:
        col = [h.lower() for h in header].index("label")
        labels = mat[:, col].astype(np.int64)
        mat = np.delete(mat, col, axis=1)
    if mat.shape[1] == 0:
        raise FormatError(f"{path}: no feature columns")
    return mat, labels


def cmd_embed_graph(args) -> int:
    cfg = _load_json_config(args.config) if args.config else {}
    if args.seed is not None:
        cfg["seed"] = args.seed
    test_fraction = cfg.pop("test_fraction", 0.5)
    target_median = cfg.pop("target_median", None)
    config = graph_data.GraphEmbeddingConfig.from_dict(cfg)
    feats, labels = _read_features_csv(args.features)
    dist = graph_data.cosine_graph(feats)
    if target_median is not None:
        dist = graph_data.condition_distances(dist, float(target_median))
    result = graph_data.embed_graph(dist, config)
    n = feats.shape[0]
    if labels is None:
        labels = np.zeros(n, dtype=np.int64)
        train_idx = np.arange(n)
        test_idx = np.arange(n)
        has_labels = False
    else:
        train_idx, test_idx = radar_data.stratified_split(labels, test_fraction, config.seed)
        has_labels = True
    from .gyro import ProductPoint

    ds = data_io.ClassifierDataset(
        inputs=ProductPoint((result.points,)),
        labels=torch.as_tensor(labels),
        train_idx=torch.as_tensor(train_idx),
        test_idx=torch.as_tensor(test_idx),
        seed=config.seed,
        meta={
            "source": "embed-graph",
            "avg_distortion": result.avg_distortion,
            "has_labels": has_labels,
            "config": {
                "m": config.m,
                "epochs": config.epochs,
                "lr": config.lr,
                "seed": config.seed,
                "target_median": target_median,
            },
        },
    )
    data_io.save_dataset(args.out, ds, kind="embeddings")
    print(f"wrote {args.out}")
    print(f"nodes: {n}  embedding dimension m={config.m}")
    print(f"final average distortion: {result.avg_distortion:.4f}")
    return 0


# ---------------------------------------------------------------------------
# train-eval
# ---------------------------------------------------------------------------

def _train_config(cfg: dict, seed: int) -> diff.TrainConfig:
    d = dict(cfg)
    d["seed"] = seed
    return diff.TrainConfig.from_dict(d)


def _split_train_val(ds, train_idx, val_fraction: float, seed: int):
    labels = ds.labels[train_idx].numpy()
    if val_fraction <= 0:
        return train_idx, None
    fit_rel, val_rel = radar_data.stratified_split(labels, val_fraction, seed)
    return train_idx[torch.as_tensor(fit_rel)], train_idx[torch.as_tensor(val_rel)]


def _resolve_split(ds, resplit: bool, run_seed: int):
    if not resplit:
        return ds.train_idx, ds.test_idx
    tr, te = radar_data.stratified_split(ds.labels.numpy(), 0.5, run_seed)
    return torch.as_tensor(tr), torch.as_tensor(te)


def cmd_train_eval(args) -> int:
    cfg = _load_json_config(args.config)
    model_name = cfg.get("model")
    dataset_path = cfg.get("dataset")
    if model_name is None or dataset_path is None:
        raise ConfigError("experiment config requires 'model' and 'dataset'")
    runs = args.runs if args.runs is not None else int(cfg.get("runs", 1))
    if runs < 1:
        raise ConfigError("runs must be >= 1")
    base_seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    val_fraction = float(cfg.get("val_fraction", 0.2))
    resplit = bool(cfg.get("resplit_per_run", False))
    ds = data_io.load_dataset(dataset_path)
    if not ds.meta.get("has_labels", True):
        raise ConfigError(f"{dataset_path} carries no labels; cannot train")
    spec = models.ModelSpec(
        name=model_name,
        signature=ds.signature,
        n_classes=ds.n_classes,
        dfc_dims=tuple(cfg["dfc_dims"]) if "dfc_dims" in cfg else None,
        init_noise=float(cfg.get("init_noise", 0.01)),
    )
    run_rows: List[dict] = []
    diverged: List[dict] = []
    for r in range(runs):
        run_seed = base_seed + r
        t0 = time.perf_counter()
        try:
            row = _run_once(ds, spec, cfg, run_seed, val_fraction, resplit)
        except DivergedTraining as err:
            diverged.append({"seed": run_seed, "epoch": err.epoch, "message": str(err)})
            continue
        row["wall_time_s"] = time.perf_counter() - t0
        run_rows.append(row)
    if not run_rows:
        raise SiegelNetError(f"all {runs} runs diverged: {diverged}")
    accs = np.array([row["test_accuracy"] for row in run_rows])
    payload = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "kind": "metrics",
        "command": "train-eval",
        "model": model_name,
        "dataset": str(dataset_path),
        "runs": run_rows,
        "diverged": diverged,
        "mean_accuracy": float(accs.mean()),
        "std_accuracy": float(accs.std()),
    }
    if args.out:
        _write_json(args.out, payload)
        print(f"wrote {args.out}")
    print(
        f"{model_name}: mean accuracy {accs.mean():.4f} +/- {accs.std():.4f} "
        f"over {len(run_rows)} runs"
    )
    return 0


def _run_once(ds, spec, cfg, run_seed, val_fraction, resplit) -> dict:
    train_idx, test_idx = _resolve_split(ds, resplit, run_seed)
    fit_idx, val_idx = _split_train_val(ds, train_idx, val_fraction, run_seed)
    model = models.SiegelClassifier(spec, seed=run_seed)
    tcfg = _train_config(cfg.get("train", {}), run_seed)
    fit_inputs = ds.inputs.take(fit_idx)
    fit_labels = ds.labels[fit_idx]
    val_inputs = ds.inputs.take(val_idx) if val_idx is not None else None
    val_labels = ds.labels[val_idx] if val_idx is not None else None
    result = diff.fit(model, fit_inputs, fit_labels, tcfg, val_inputs, val_labels)
    test_acc = baselines.eval_accuracy(model, ds.inputs.take(test_idx), ds.labels[test_idx])
    return {
        "seed": run_seed,
        "test_accuracy": test_acc,
        "best_epoch": result.best_epoch,
        "final_train_loss": result.loss_trace[-1] if result.loss_trace else None,
        "loss_trace": result.loss_trace,
        "val_accuracy_trace": result.val_acc_trace,
    }


# ---------------------------------------------------------------------------
# baseline
# ---------------------------------------------------------------------------

def cmd_baseline(args) -> int:
    ds = data_io.load_dataset(args.dataset)
    if not ds.meta.get("has_labels", True):
        raise ConfigError(f"{args.dataset} carries no labels; cannot evaluate")
    cfg = _load_json_config(args.config) if args.config else {}
    base_seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    runs = args.runs if args.runs is not None else int(cfg.get("runs", 1))
    train_inputs, train_labels = ds.train_split()
    test_inputs, test_labels = ds.test_split()
    rows: List[dict] = []
    if args.kind == "knn":
        acc = baselines.knn_accuracy(train_inputs, train_labels, test_inputs, test_labels, args.k)
        rows.append({"seed": base_seed, "test_accuracy": acc, "k": args.k})
    elif args.kind == "logfeat-mlr":
        for r in range(runs):
            run_seed = base_seed + r
            tcfg = _train_config(cfg.get("train", {}), run_seed)
            t0 = time.perf_counter()
            model, _ = baselines.fit_logfeat_mlr(train_inputs, train_labels, tcfg)
            acc = baselines.eval_accuracy(model, models.feature_batch(test_inputs), test_labels)
            rows.append(
                {"seed": run_seed, "test_accuracy": acc, "wall_time_s": time.perf_counter() - t0}
            )
    else:
        raise ConfigError(f"unknown baseline kind {args.kind!r}")
    accs = np.array([row["test_accuracy"] for row in rows])
    payload = {
        "schema_version": METRICS_SCHEMA_VERSION,
        "kind": "metrics",
        "command": "baseline",
        "baseline": args.kind,
        "dataset": str(args.dataset),
        "runs": rows,
        "mean_accuracy": float(accs.mean()),
        "std_accuracy": float(accs.std()),
    }
    if args.out:
        _write_json(args.out, payload)
        print(f"wrote {args.out}")
    print(f"{args.kind}: mean accuracy {accs.mean():.4f} +/- {accs.std():.4f} over {len(rows)} runs")
    return 0


# ---------------------------------------------------------------------------
# selfcheck
# ---------------------------------------------------------------------------

def cmd_selfcheck(args) -> int:
    t0 = time.perf_counter()
    results = selfcheck.run_selfcheck(level=args.level)
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.detail}")
    elapsed = time.perf_counter() - t0
    print(f"{len(results) - len(failed)}/{len(results)} checks passed in {elapsed:.1f} s")
    return 0 if not failed else 2


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="siegelnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-radar", help="simulate and parameterize a radar clutter dataset")
    p.add_argument("--config", required=True, help="dataset config JSON")
    p.add_argument("--out", required=True, help="output dataset file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(fn=cmd_gen_radar)

    p = sub.add_parser("embed-graph", help="embed a feature CSV via cosine-distance distortion")
    p.add_argument("--features", required=True, help="CSV of node features (optional label column)")
    p.add_argument("--config", default=None, help="embedding config JSON")
    p.add_argument("--out", required=True, help="output embeddings file")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_embed_graph)

    p = sub.add_parser("train-eval", help="train a model over several seeds and evaluate")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--out", default=None, help="metrics JSON output path")
    p.add_argument("--runs", type=int, default=None, help="override the config run count")
    p.add_argument("--seed", type=int, default=None, help="override the base seed")
    p.set_defaults(fn=cmd_train_eval)

    p = sub.add_parser("baseline", help="evaluate a reference classifier on a dataset")
    p.add_argument("--kind", required=True, choices=["knn", "logfeat-mlr"])
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=5, help="neighbor count for knn")
    p.add_argument("--config", default=None, help="optional config JSON (train block, seed)")
    p.add_argument("--out", default=None, help="metrics JSON output path")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("selfcheck", help="run the property suites")
    p.add_argument("--level", choices=["fast", "full"], default="fast")
    p.set_defaults(fn=cmd_selfcheck)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ConfigError, FormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except SiegelNetError as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
