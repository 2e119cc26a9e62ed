"""Reference classifiers: product-geometry kNN and Euclidean log-feature MLR."""

from __future__ import annotations

from typing import Tuple

import numpy as np
import torch

from . import diff, models, siegel, spd
from .errors import ConfigError
from .gyro import ProductPoint
from .siegel import SiegelUpperPoint
from .spd import SPDPoint


def product_pairwise_distance(a: ProductPoint, b: ProductPoint) -> torch.Tensor:
    """sqrt(sum of squared per-factor distances) between two batches of points.

    Returns shape (len(a), len(b)).  SPD factors use the affine-invariant
    distance, Siegel factors the Siegel distance.
    """
    if a.signature != b.signature:
        raise ConfigError(f"signatures differ: {a.signature} vs {b.signature}")
    total = None
    for fa, fb in zip(a.factors, b.factors):
        if isinstance(fa, SPDPoint):
            d = spd.spd_distance(fa.unsqueeze(-3), fb.unsqueeze(0))
        else:
            d = siegel.distance(fa.unsqueeze(-3), fb.unsqueeze(0))
        sq = d**2
        total = sq if total is None else total + sq
    return total.sqrt()


def knn_predict(
    train_inputs: ProductPoint,
    train_labels: torch.Tensor,
    test_inputs: ProductPoint,
    k: int,
) -> torch.Tensor:
    """Majority vote over the k nearest training points in the product geometry.

    Ties between classes go to the smaller class index (deterministic).
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    dists = product_pairwise_distance(test_inputs, train_inputs)
    k = min(k, dists.shape[1])
    idx = dists.topk(k, dim=1, largest=False).indices
    votes = train_labels[idx]
    n_classes = int(train_labels.max()) + 1
    counts = torch.zeros(dists.shape[0], n_classes, dtype=torch.int64)
    counts.scatter_add_(1, votes, torch.ones_like(votes))
    return counts.argmax(dim=1)


def knn_accuracy(
    train_inputs: ProductPoint,
    train_labels: torch.Tensor,
    test_inputs: ProductPoint,
    test_labels: torch.Tensor,
    k: int,
) -> float:
    pred = knn_predict(train_inputs, train_labels, test_inputs, k)
    return float((pred == test_labels).double().mean())


def fit_logfeat_mlr(
    train_inputs,
    train_labels: torch.Tensor,
    config: diff.TrainConfig,
    val_inputs=None,
    val_labels=None,
) -> Tuple[models.LogFeatureMLR, diff.FitResult]:
    """Train the Euclidean softmax-regression baseline on log features."""
    feats = models.feature_batch(train_inputs)
    n_classes = int(train_labels.max()) + 1
    model = models.LogFeatureMLR(feats.feats.shape[-1], n_classes, seed=config.seed)
    val_feats = models.feature_batch(val_inputs) if val_inputs is not None else None
    result = diff.fit(model, feats, train_labels, config, val_feats, val_labels)
    return model, result


def eval_accuracy(model, inputs, labels: torch.Tensor) -> float:
    with torch.no_grad():
        pred = model.forward(inputs).argmax(dim=-1)
    return float((pred == torch.as_tensor(labels)).double().mean())
