#!/usr/bin/env python3
"""Write the Iris features (with labels) as a CSV consumable by embed-graph."""

import argparse

from sklearn.datasets import load_iris


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="iris.csv")
    args = parser.parse_args()
    iris = load_iris()
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(",".join(f"f{i}" for i in range(iris.data.shape[1])) + ",label\n")
        for row, label in zip(iris.data, iris.target):
            fh.write(",".join(f"{v:.6f}" for v in row) + f",{label}\n")
    print(f"wrote {args.out} ({len(iris.target)} rows)")


if __name__ == "__main__":
    main()
