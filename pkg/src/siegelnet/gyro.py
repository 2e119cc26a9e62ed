"""Quotient-structure operations: binary operation, inverse, inner product.

A point x = gK is handled exclusively through its canonical representative g
and the Gram matrix g g^T, which is independent of the coset representative.
The binary operation and inverse return points (cosets re-projected through
the action on the origin), so the API stays closed over manifold types.

Everything extends factorwise to Cartesian products of SPD and Siegel
factors, with inner products summed across factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import torch

from . import matfun, siegel, spd
from .errors import ShapeMismatch
from .siegel import SiegelUpperPoint
from .spd import SPDPoint


@dataclass(frozen=True)
class ProductPoint:
    """Point of a Cartesian product of SPD and Siegel factors.

    Factors share identical leading batch dimensions; the signature is the
    per-factor (kind, dimension) list and must match between operands.
    """

    factors: Tuple[Union[SiegelUpperPoint, SPDPoint], ...]

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ShapeMismatch("a product point needs at least one factor")
        shapes = {f.batch_shape for f in factors}
        if len(shapes) != 1:
            raise ShapeMismatch(f"factor batch shapes differ: {sorted(shapes)}")
        object.__setattr__(self, "factors", factors)

    @property
    def signature(self) -> Tuple[Tuple[str, int], ...]:
        return tuple(
            ("siegel" if isinstance(f, SiegelUpperPoint) else "spd", f.m) for f in self.factors
        )

    @property
    def batch_shape(self) -> tuple:
        return self.factors[0].batch_shape

    def unsqueeze(self, dim: int) -> "ProductPoint":
        return ProductPoint(tuple(f.unsqueeze(dim) for f in self.factors))

    def take(self, idx: torch.Tensor) -> "ProductPoint":
        return ProductPoint(tuple(f.take(idx) for f in self.factors))

    def detach(self) -> "ProductPoint":
        return ProductPoint(tuple(f.detach() for f in self.factors))


Point = Union[SiegelUpperPoint, SPDPoint, ProductPoint]


def product_origin(signature, batch_shape: tuple = ()) -> ProductPoint:
    factors = []
    for kind, m in signature:
        if kind == "siegel":
            factors.append(siegel.origin(m, batch_shape))
        elif kind == "spd":
            factors.append(spd.spd_origin(m, batch_shape))
        else:
            raise ShapeMismatch(f"unknown factor kind {kind!r}")
    return ProductPoint(tuple(factors))


def _check_signature(x: Point, y: Point) -> None:
    if type(x) is not type(y):
        raise ShapeMismatch(f"operand kinds differ: {type(x).__name__} vs {type(y).__name__}")
    if isinstance(x, ProductPoint):
        if x.signature != y.signature:
            raise ShapeMismatch(f"signatures differ: {x.signature} vs {y.signature}")
    elif x.m != y.m:
        raise ShapeMismatch(f"dimension mismatch: {x.m} vs {y.m}")


# ---------------------------------------------------------------------------
# binary operation and inverse
# ---------------------------------------------------------------------------

def oplus(x: Point, y: Point) -> Point:
    """x (+) y: the point (g h)[origin] = g[y] for representatives g, h."""
    _check_signature(x, y)
    if isinstance(x, ProductPoint):
        return ProductPoint(tuple(oplus(a, b) for a, b in zip(x.factors, y.factors)))
    if isinstance(x, SPDPoint):
        ph = spd.spd_canonical_rep(x)
        return SPDPoint(ph @ y.p @ ph)
    return siegel.symplectic_action(siegel.canonical_rep(x), y)


def ominus(x: Point) -> Point:
    """(-) x: the point g^{-1}[origin]."""
    if isinstance(x, ProductPoint):
        return ProductPoint(tuple(ominus(f) for f in x.factors))
    if isinstance(x, SPDPoint):
        return SPDPoint(matfun.spd_fun(x.p, "inv"))
    # phi(x)^{-1}[iI] = v^{-1/2} (iI - u) v^{-1/2}
    vmh = matfun.spd_fun(x.v, "inv_sqrt")
    eye = torch.eye(x.m, dtype=torch.complex128)
    return SiegelUpperPoint(vmh.to(torch.complex128) @ (1j * eye - x.u) @ vmh.to(torch.complex128))


# ---------------------------------------------------------------------------
# inner product and norm
# ---------------------------------------------------------------------------

def log_rep_gram(x: Union[SiegelUpperPoint, SPDPoint]) -> torch.Tensor:
    """log(g g^T) for the canonical representative g of a single factor.

    Siegel factors yield a 2m x 2m real symmetric matrix, SPD factors log(p).
    """
    if isinstance(x, SPDPoint):
        return matfun.spd_fun(x.p, "log")
    return matfun.spd_fun(matfun.sym_part(siegel.rep_gram(x)), "log")


def inner_S(x: Point, y: Point) -> torch.Tensor:
    """Quotient inner product <x, y> = <log(g g^T), log(h h^T)>_F, summed over factors."""
    _check_signature(x, y)
    if isinstance(x, ProductPoint):
        terms = [inner_S(a, b) for a, b in zip(x.factors, y.factors)]
        return torch.stack(torch.broadcast_tensors(*terms), dim=0).sum(dim=0)
    return matfun.frobenius_inner(log_rep_gram(x), log_rep_gram(y))


def norm_S(x: Point) -> torch.Tensor:
    """Norm induced by the quotient inner product."""
    if isinstance(x, ProductPoint):
        sq = [torch.linalg.matrix_norm(log_rep_gram(f)) ** 2 for f in x.factors]
        return torch.stack(torch.broadcast_tensors(*sq), dim=0).sum(dim=0).sqrt()
    return torch.linalg.matrix_norm(log_rep_gram(x))
