"""SPD manifold with the affine-invariant metric.

This is both a product-space factor for the radar pipeline and the oracle
for the Siegel-restriction consistency check: the Siegel distance between
purely imaginary points i*v and i*v' equals the affine-invariant distance
between v and v'.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from . import matfun
from .errors import ShapeMismatch


@dataclass(frozen=True)
class SPDPoint:
    """Point of the SPD manifold; p has shape (..., m, m), validated SPD."""

    p: torch.Tensor

    def __post_init__(self):
        object.__setattr__(self, "p", matfun.spd_matrix(self.p))

    @property
    def m(self) -> int:
        return self.p.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return tuple(self.p.shape[:-2])

    def unsqueeze(self, dim: int) -> "SPDPoint":
        return _wrap_spd(self.p.unsqueeze(dim))

    def take(self, idx: torch.Tensor) -> "SPDPoint":
        return _wrap_spd(self.p.index_select(0, idx))

    def detach(self) -> "SPDPoint":
        return _wrap_spd(self.p.detach())


def _wrap_spd(p: torch.Tensor) -> SPDPoint:
    obj = object.__new__(SPDPoint)
    object.__setattr__(obj, "p", p)
    return obj


def spd_origin(m: int, batch_shape: tuple = ()) -> SPDPoint:
    return SPDPoint(torch.eye(m, dtype=torch.float64).expand(*batch_shape, m, m).clone())


def spd_distance(p: SPDPoint, q: SPDPoint) -> torch.Tensor:
    """Affine-invariant distance ||log(p^{-1/2} q p^{-1/2})||_F."""
    if p.m != q.m:
        raise ShapeMismatch(f"dimension mismatch: {p.m} vs {q.m}")
    pmh = matfun.spd_fun(p.p, "inv_sqrt")
    inner = matfun.spd_fun(matfun.sym_part(pmh @ q.p @ pmh), "log")
    return torch.linalg.matrix_norm(inner)


def spd_canonical_rep(p: SPDPoint) -> torch.Tensor:
    """Symmetric-PD representative g = p^{1/2} with g g^T = p."""
    return matfun.spd_fun(p.p, "sqrt")


def spd_sample(m: int, seed: int, batch_shape: tuple = ()) -> SPDPoint:
    """Random SPD point p = exp(symmetrized N(0, 0.5)), deterministic in seed."""
    gen = torch.Generator()
    gen.manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
    s = torch.randn(tuple(batch_shape) + (m, m), generator=gen, dtype=torch.float64)
    return SPDPoint(matfun.sym_exp(matfun.sym_part(s * 0.5)))
