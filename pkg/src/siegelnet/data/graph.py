"""Graph node embedding by distortion minimization on the Siegel upper space.

The input is a complete distance graph (here: cosine distances between
feature vectors); node embeddings minimize the squared-ratio distortion
sum |(d_emb / d_graph)^2 - 1| over unordered node pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import torch

from .. import diff, siegel
from ..errors import ConfigError, DegenerateInput, DivergedTraining
from ..siegel import SiegelUpperPoint

# Off-diagonal cosine distances are floored here: the distortion loss divides
# by the graph distance.
COSINE_FLOOR = 1e-6


@dataclass
class GraphEmbeddingConfig:
    """Knobs of the distortion-minimizing embedding run."""

    m: int = 2
    epochs: int = 600
    lr: float = 5e-2
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("embedding dimension m must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "GraphEmbeddingConfig":
        allowed = {"m", "epochs", "lr", "seed"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown embedding config keys: {sorted(unknown)}")
        return cls(**d)


def cosine_graph(features) -> np.ndarray:
    """Dense cosine-distance matrix 1 - cos(f_i, f_j), floored off the diagonal."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim != 2 or f.shape[0] < 2:
        raise DegenerateInput(f"expected at least two feature vectors, got shape {f.shape}")
    norms = np.linalg.norm(f, axis=1)
    if (norms < 1e-300).any():
        raise DegenerateInput("cosine distance undefined for a zero feature vector")
    cos = (f @ f.T) / np.outer(norms, norms)
    np.clip(cos, -1.0, 1.0, out=cos)
    dist = 1.0 - cos
    dist = (dist + dist.T) / 2
    np.fill_diagonal(dist, 0.0)
    off = ~np.eye(len(f), dtype=bool)
    dist[off] = np.maximum(dist[off], COSINE_FLOOR)
    return dist


def condition_distances(distances, target_median: float) -> np.ndarray:
    """Rescale a distance graph so its median off-diagonal entry hits a target.

    The squared-ratio distortion loss is scale-sensitive and the Siegel space
    is not scale-flat, so raw cosine distances (often ~1e-2) sit far below
    the resolution a constant-rate first-order optimizer can match.  A global
    rescale is an isometry class choice for the target graph, not a change of
    its shape.
    """
    d = np.asarray(distances, dtype=np.float64)
    off = d[~np.eye(len(d), dtype=bool)]
    med = float(np.median(off))
    if med <= 0:
        raise DegenerateInput("cannot rescale a graph with nonpositive median distance")
    return d * (target_median / med)


@dataclass
class EmbeddingResult:
    points: SiegelUpperPoint
    avg_distortion: float
    loss_trace: List[float]


def _mds_init(d_graph: torch.Tensor, m: int) -> torch.Tensor:
    """Classical MDS layout of the graph in the flat chart coordinates.

    The chart at the origin is nearly Euclidean in the packed (u, log v)
    coordinates (off-diagonal entries weighted by sqrt(2)), so seeding with a
    metric MDS configuration starts the optimizer with roughly correct
    structure at every scale instead of the collapse basin.
    """
    n = d_graph.shape[0]
    width = m * (m + 1)
    d2 = (d_graph**2).numpy()
    centering = np.eye(n) - np.ones((n, n)) / n
    gram = -0.5 * centering @ d2 @ centering
    w, v = np.linalg.eigh(gram)
    order = np.argsort(w)[::-1][:width]
    coords = v[:, order] * np.sqrt(np.clip(w[order], 0, None))
    if coords.shape[1] < width:
        coords = np.pad(coords, ((0, 0), (0, width - coords.shape[1])))
    rows_l, cols_l = torch.tril_indices(m, m)
    offdiag = (rows_l != cols_l).double()
    weights = torch.cat([offdiag, offdiag]) * (1 / np.sqrt(2) - 1) + 1
    return torch.as_tensor(coords) * weights


def embed_graph(distances, config: GraphEmbeddingConfig) -> EmbeddingResult:
    """Optimize one Siegel point per node to match the given distance graph.

    Nodes start at an MDS layout plus seeded noise; the squared-ratio loss is
    minimized with Adam.  Deterministic in the config seed; raises
    DivergedTraining on non-finite losses.  The reported average distortion
    is the mean of |d_emb/d_graph - 1| over unordered pairs.
    """
    d_graph = torch.as_tensor(np.asarray(distances, dtype=np.float64))
    n = d_graph.shape[0]
    if d_graph.shape != (n, n):
        raise DegenerateInput(f"distance matrix must be square, got {tuple(d_graph.shape)}")
    if n < 2:
        raise DegenerateInput("need at least two nodes")
    if (d_graph.diagonal() != 0).any():
        raise DegenerateInput("distance matrix must have a zero diagonal")
    rows, cols = torch.triu_indices(n, n, offset=1)
    d_pairs = d_graph[rows, cols]
    if (d_pairs <= 0).any():
        raise DegenerateInput("off-diagonal graph distances must be positive")

    gen = torch.Generator()
    gen.manual_seed(config.seed & 0x7FFFFFFFFFFFFFFF)
    raw0 = _mds_init(d_graph, config.m) + 0.01 * torch.randn(
        (n, config.m * (config.m + 1)), generator=gen, dtype=torch.float64
    )
    block = diff.ParamBlock("siegel_point", raw0.requires_grad_(True), config.m)
    opt = torch.optim.Adam([block.raw], lr=config.lr)
    trace: List[float] = []
    n_pairs = rows.numel()

    def pair_ratios() -> torch.Tensor:
        pts = diff.materialize(block)
        return siegel.distance(pts.take(rows), pts.take(cols)) / d_pairs

    ratio = pair_ratios()
    for epoch in range(config.epochs):
        loss = (ratio**2 - 1).abs().sum()
        if not torch.isfinite(loss.detach()):
            raise DivergedTraining(epoch, "distortion loss became non-finite")
        opt.zero_grad(set_to_none=True)
        loss.backward()
        opt.step()
        ratio = pair_ratios()
        trace.append(float((ratio.detach() ** 2 - 1).abs().sum()) / n_pairs)

    points = diff.materialize(block).detach()
    distortion = float((ratio.detach() - 1).abs().mean())
    return EmbeddingResult(points=points, avg_distortion=distortion, loss_trace=trace)
