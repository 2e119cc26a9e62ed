"""Network building blocks: MLR heads and fully-connected Siegel layers.

Two families of multiclass-logistic-regression heads are provided:

* Q-heads parameterize a decision boundary by a pair of points (a, p) and
  score inputs with the quotient-structure inner product
  <log(phi(p)^{-1} phi(x) phi(x)^T phi(p)^{-T}), log(phi(a) phi(a)^T)>,
  including the product-space extension over SPD x Siegel factors.
* V-heads parameterize a boundary by a point p, a unit Weyl-chamber
  direction, and a learnable scale; the score is the pairing of the
  vector-valued distance with the chamber direction, which upper-bounds the
  point-to-hyperplane distance.

The FC layers are the dimension-preserving affine layer (group action by a
learnable point a + ib) and the dimension-reducing bilinear layer (Stiefel
compression), plus their SPD-factor analogs used in product-space networks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Union

import torch

from . import gyro, matfun, siegel, spd
from .errors import ConfigError, DegenerateHyperplane, InvalidInput, ShapeMismatch
from .gyro import ProductPoint
from .siegel import SiegelUpperPoint
from .spd import SPDPoint

# Heads whose direction norm falls below this are degenerate (a at the origin).
DEGENERATE_NORM = 1e-10


def chamber_direction(vec) -> torch.Tensor:
    """Validated Weyl-chamber direction: sorted descending, nonnegative, unit norm."""
    t = matfun.to_tensor(vec).to(torch.float64)
    if t.ndim < 1:
        raise ShapeMismatch("chamber direction must be a vector")
    d = t.detach()
    if (d < -1e-12).any():
        raise InvalidInput("chamber direction has negative components")
    if (d[..., :-1] - d[..., 1:] < -1e-12).any():
        raise InvalidInput("chamber direction not sorted descending")
    norms = torch.linalg.vector_norm(d, dim=-1)
    if ((norms - 1).abs() > 1e-9).any():
        raise InvalidInput("chamber direction must have unit Euclidean norm")
    return t


@dataclass(frozen=True)
class QHyperplane:
    """Quotient-structure hyperplane through p with direction point a."""

    a: SiegelUpperPoint
    p: SiegelUpperPoint

    def __post_init__(self):
        if self.a.m != self.p.m:
            raise ShapeMismatch(f"hyperplane dims differ: a is {self.a.m}, p is {self.p.m}")


@dataclass(frozen=True)
class ProductQHyperplane:
    """Product-space hyperplane; a and p share the product signature."""

    a: ProductPoint
    p: ProductPoint

    def __post_init__(self):
        if self.a.signature != self.p.signature:
            raise ShapeMismatch(
                f"hyperplane signatures differ: {self.a.signature} vs {self.p.signature}"
            )


@dataclass(frozen=True)
class VHyperplane:
    """Vector-valued-distance hyperplane: base point, chamber direction, scale."""

    p: SiegelUpperPoint
    a_xi: torch.Tensor
    scale: torch.Tensor

    def __post_init__(self):
        a_xi = chamber_direction(self.a_xi)
        if a_xi.shape[-1] != self.p.m:
            raise ShapeMismatch(
                f"chamber direction length {a_xi.shape[-1]} vs point dimension {self.p.m}"
            )
        object.__setattr__(self, "a_xi", a_xi)
        object.__setattr__(self, "scale", matfun.to_tensor(self.scale).to(torch.float64))


@dataclass(frozen=True)
class AFCParams:
    """Affine FC layer parameters: translation by the point a + ib."""

    a: torch.Tensor
    b: torch.Tensor

    def __post_init__(self):
        a = matfun.sym_matrix(self.a)
        b = matfun.spd_matrix(self.b)
        if a.shape[-1] != b.shape[-1]:
            raise ShapeMismatch("a and b must have the same dimension")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class DFCParams:
    """Dimension-reducing FC layer parameters: Stiefel b (m x m2) and symmetric a (m2)."""

    a: torch.Tensor
    b: torch.Tensor

    def __post_init__(self):
        b = matfun.stiefel_matrix(self.b)
        a = matfun.sym_matrix(self.a)
        if a.shape[-1] != b.shape[-1]:
            raise ShapeMismatch("a must be m2 x m2 for a m x m2 Stiefel b")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True)
class SPDAffineParams:
    """SPD-factor analog of the affine FC layer: congruence by b^{1/2}."""

    b: torch.Tensor

    def __post_init__(self):
        object.__setattr__(self, "b", matfun.spd_matrix(self.b))


@dataclass(frozen=True)
class SPDReduceParams:
    """SPD-factor analog of the reducing FC layer: bilinear compression b^T p b."""

    b: torch.Tensor

    def __post_init__(self):
        object.__setattr__(self, "b", matfun.stiefel_matrix(self.b))


# ---------------------------------------------------------------------------
# Q-heads
# ---------------------------------------------------------------------------

def _log_translated_gram(x, p) -> torch.Tensor:
    """log of the representative Gram of x translated so that p sits at the origin."""
    if isinstance(x, SPDPoint):
        pmh = matfun.spd_fun(p.p, "inv_sqrt")
        return matfun.spd_fun(matfun.sym_part(pmh @ x.p @ pmh), "log")
    moved = siegel.inv_rep_conjugate(p, siegel.rep_gram(x))
    return matfun.spd_fun(matfun.sym_part(moved), "log")


def _q_terms(x, hyp_a, hyp_p):
    direction = gyro.log_rep_gram(hyp_a)
    num = matfun.frobenius_inner(_log_translated_gram(x, hyp_p), direction)
    den_sq = torch.linalg.matrix_norm(direction) ** 2
    return num, den_sq


def q_logit(x: SiegelUpperPoint, hyp: QHyperplane) -> torch.Tensor:
    """Signed head score; |q_logit| = q_distance * direction norm."""
    num, den_sq = _q_terms(x, hyp.a, hyp.p)
    _check_nondegenerate(den_sq)
    return num


def q_distance(x: SiegelUpperPoint, hyp: QHyperplane) -> torch.Tensor:
    """Closed-form distance from x to the hyperplane through p with direction a."""
    num, den_sq = _q_terms(x, hyp.a, hyp.p)
    _check_nondegenerate(den_sq)
    return num.abs() / den_sq.sqrt()


def q_product_logit(x: ProductPoint, hyp: ProductQHyperplane) -> torch.Tensor:
    """Signed product-space head score (sum of per-factor pairings)."""
    num, den_sq = _q_product_terms(x, hyp)
    _check_nondegenerate(den_sq)
    return num


def q_product_distance(x: ProductPoint, hyp: ProductQHyperplane) -> torch.Tensor:
    """Product-space point-to-hyperplane distance."""
    num, den_sq = _q_product_terms(x, hyp)
    _check_nondegenerate(den_sq)
    return num.abs() / den_sq.sqrt()


def _q_product_terms(x: ProductPoint, hyp: ProductQHyperplane):
    if x.signature != hyp.a.signature:
        raise ShapeMismatch(f"input signature {x.signature} vs hyperplane {hyp.a.signature}")
    nums, dens = [], []
    for xf, af, pf in zip(x.factors, hyp.a.factors, hyp.p.factors):
        num, den_sq = _q_terms(xf, af, pf)
        nums.append(num)
        dens.append(den_sq)
    num = torch.stack(torch.broadcast_tensors(*nums), dim=0).sum(dim=0)
    den_sq = torch.stack(torch.broadcast_tensors(*dens), dim=0).sum(dim=0)
    return num, den_sq


def _check_nondegenerate(den_sq: torch.Tensor) -> None:
    if (den_sq.detach() <= DEGENERATE_NORM**2).any():
        raise DegenerateHyperplane("direction point a is (numerically) at the origin")


# ---------------------------------------------------------------------------
# V-heads
# ---------------------------------------------------------------------------

def v_logit(x: SiegelUpperPoint, hyp: VHyperplane) -> torch.Tensor:
    """scale * <vvd(x, p), a_xi>; the unscaled pairing lies in [0, d(x, p)]."""
    pairing = (siegel.vvd(x, hyp.p) * hyp.a_xi).sum(dim=-1)
    return hyp.scale * pairing


# ---------------------------------------------------------------------------
# FC layers
# ---------------------------------------------------------------------------

def afc_forward(x: SiegelUpperPoint, params: AFCParams) -> SiegelUpperPoint:
    """Affine FC layer: t = (b^{1/2} u b^{1/2} + a) + i b^{1/2} v b^{1/2}.

    Identical to the group action of the canonical representative of a + ib.
    """
    if params.a.shape[-1] != x.m:
        raise ShapeMismatch(f"layer dimension {params.a.shape[-1]} vs input {x.m}")
    bh = matfun.spd_fun(params.b, "sqrt").to(torch.complex128)
    return SiegelUpperPoint(bh @ x.x @ bh + params.a)


def dfc_forward(x: SiegelUpperPoint, params: DFCParams) -> SiegelUpperPoint:
    """Reducing FC layer: t = (b^T u b + a) + i b^T v b, output dimension m2 < m."""
    if params.b.shape[-2] != x.m:
        raise ShapeMismatch(f"Stiefel rows {params.b.shape[-2]} vs input dimension {x.m}")
    b = params.b.to(torch.complex128)
    return SiegelUpperPoint(b.mH @ x.x @ b + params.a)


def afc_forward_spd(x: SPDPoint, params: SPDAffineParams) -> SPDPoint:
    """SPD-factor affine translation b^{1/2} p b^{1/2}."""
    bh = matfun.spd_fun(params.b, "sqrt")
    return SPDPoint(bh @ x.p @ bh)


def dfc_forward_spd(x: SPDPoint, params: SPDReduceParams) -> SPDPoint:
    """SPD-factor bilinear compression b^T p b."""
    return SPDPoint(params.b.mT @ x.p @ params.b)


FCParams = Union[AFCParams, DFCParams, SPDAffineParams, SPDReduceParams]


def product_fc_forward(x: ProductPoint, params: Sequence[FCParams]) -> ProductPoint:
    """Apply per-factor FC layers across a product point."""
    if len(params) != len(x.factors):
        raise ShapeMismatch(f"{len(params)} parameter bundles for {len(x.factors)} factors")
    out = []
    for xf, pf in zip(x.factors, params):
        if isinstance(pf, AFCParams):
            out.append(afc_forward(xf, pf))
        elif isinstance(pf, DFCParams):
            out.append(dfc_forward(xf, pf))
        elif isinstance(pf, SPDAffineParams):
            out.append(afc_forward_spd(xf, pf))
        elif isinstance(pf, SPDReduceParams):
            out.append(dfc_forward_spd(xf, pf))
        else:
            raise ConfigError(f"unsupported FC parameter bundle {type(pf).__name__}")
    return ProductPoint(tuple(out))


# ---------------------------------------------------------------------------
# logit assembly
# ---------------------------------------------------------------------------

Head = Union[QHyperplane, ProductQHyperplane, VHyperplane]


def mlr_logits(x, heads: List[Head]) -> torch.Tensor:
    """Per-class logits for a list of same-kind heads, stacked on the last axis."""
    if len(heads) < 2:
        raise ConfigError("multiclass regression needs at least 2 heads")
    kinds = {type(h) for h in heads}
    if len(kinds) != 1:
        raise ConfigError(f"mixed head kinds: {sorted(k.__name__ for k in kinds)}")
    kind = kinds.pop()
    if kind is QHyperplane:
        cols = [q_logit(x, h) for h in heads]
    elif kind is ProductQHyperplane:
        cols = [q_product_logit(x, h) for h in heads]
    elif kind is VHyperplane:
        cols = [v_logit(x, h) for h in heads]
    else:
        raise ConfigError(f"unsupported head kind {kind.__name__}")
    return torch.stack(torch.broadcast_tensors(*cols), dim=-1)
