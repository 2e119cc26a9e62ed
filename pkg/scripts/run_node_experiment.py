#!/usr/bin/env python3
"""Node classification on Iris: cosine graph -> Siegel embeddings -> classifiers."""

import argparse
import json
import tempfile
from pathlib import Path

from sklearn.datasets import load_iris

from siegelnet.cli import main as cli_main


def write_iris_csv(path: Path):
    iris = load_iris()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"f{i}" for i in range(iris.data.shape[1])) + ",label\n")
        for row, label in zip(iris.data, iris.target):
            fh.write(",".join(f"{v:.6f}" for v in row) + f",{label}\n")


def run(workdir: Path, runs: int):
    csv = workdir / "iris.csv"
    write_iris_csv(csv)
    emb_cfg = workdir / "embed.json"
    emb_cfg.write_text(
        json.dumps({"m": 2, "epochs": 1500, "lr": 0.005, "seed": 7, "target_median": 0.4})
    )
    emb = workdir / "iris_embeddings.sgl"
    assert cli_main(["embed-graph", "--features", str(csv), "--config", str(emb_cfg), "--out", str(emb)]) == 0

    print("\nnode classification on the learned embeddings")
    print("-" * 50)
    for model in ("afc-qmlr", "afc-vmlr", "qmlr", "vmlr"):
        exp = workdir / f"{model}.json"
        exp.write_text(
            json.dumps(
                {
                    "model": model,
                    "dataset": str(emb),
                    "runs": runs,
                    "seed": 0,
                    "resplit_per_run": True,
                    "train": {"lr": 0.03, "epochs": 120},
                }
            )
        )
        out = workdir / f"{model}_metrics.json"
        assert cli_main(["train-eval", "--config", str(exp), "--out", str(out)]) == 0
        metrics = json.loads(out.read_text())
        print(
            f"SiegelNet-{model.upper():<10} {100 * metrics['mean_accuracy']:6.2f} "
            f"+/- {100 * metrics['std_accuracy']:.2f}"
        )
    knn_out = workdir / "knn.json"
    assert cli_main(["baseline", "--kind", "knn", "--dataset", str(emb), "--k", "5", "--out", str(knn_out)]) == 0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default=None)
    parser.add_argument("--runs", type=int, default=10)
    args = parser.parse_args()
    if args.workdir:
        workdir = Path(args.workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        run(workdir, args.runs)
    else:
        with tempfile.TemporaryDirectory() as td:
            run(Path(td), args.runs)


if __name__ == "__main__":
    main()
