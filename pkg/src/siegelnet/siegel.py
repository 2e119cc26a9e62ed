"""Siegel upper space and Siegel disk: points, group actions, distances.

Points of the upper space are complex symmetric matrices x = u + iv with SPD
imaginary part, stored as a single complex tensor with arbitrary leading
batch dimensions.  The real symplectic group acts by Moebius transformations
(ax + b)(cx + d)^{-1}; the canonical representative of x is the block
upper-triangular symplectic matrix carrying i*I to x.

The vector-valued distance (and hence the Riemannian distance) is computed
by translating the first point to the origin and reading the spectrum of
w w^H of the Cayley image of the translated second point.  That spectrum
equals the cross-ratio spectrum but comes from a Hermitian PSD matrix, so it
is exactly real, sorted, and safely differentiable.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from . import matfun
from .errors import InvalidInput, NotPositiveDefinite, NumericalOverflow, ShapeMismatch

# Cross-ratio eigenvalues this close to 1 mean effectively infinite separation.
VVD_R_MAX = 1.0 - 1e-14

# Floor applied to cross-ratio eigenvalues before sqrt; keeps the gradient of
# distance-squared finite (and exactly zero) at coincident points while
# perturbing the distance itself by < 3e-15.
VVD_R_FLOOR = 1e-30


def _eye(m: int, complex_: bool = False) -> torch.Tensor:
    return torch.eye(m, dtype=torch.complex128 if complex_ else torch.float64)


@dataclass(frozen=True)
class SiegelUpperPoint:
    """Point x = u + iv of the Siegel upper space, u symmetric, v SPD.

    ``x`` has shape (..., m, m) complex128; leading dimensions are batch.
    Construction symmetrizes x and validates positive definiteness of the
    imaginary part.
    """

    x: torch.Tensor

    def __post_init__(self):
        x = matfun.complex_sym_matrix(self.x)
        lo = matfun.min_eig(x.imag)
        if lo <= matfun.TOL_PD:
            raise NotPositiveDefinite(f"imaginary part has min eigenvalue {lo:.3e}")
        object.__setattr__(self, "x", x)

    @classmethod
    def from_parts(cls, u, v) -> "SiegelUpperPoint":
        u = matfun.sym_matrix(u)
        v = matfun.sym_matrix(v)
        return cls(torch.complex(u, v))

    @property
    def u(self) -> torch.Tensor:
        return self.x.real

    @property
    def v(self) -> torch.Tensor:
        return self.x.imag

    @property
    def m(self) -> int:
        return self.x.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return tuple(self.x.shape[:-2])

    def unsqueeze(self, dim: int) -> "SiegelUpperPoint":
        return _wrap_upper(self.x.unsqueeze(dim))

    def take(self, idx: torch.Tensor) -> "SiegelUpperPoint":
        return _wrap_upper(self.x.index_select(0, idx))

    def detach(self) -> "SiegelUpperPoint":
        return _wrap_upper(self.x.detach())


@dataclass(frozen=True)
class SiegelDiskPoint:
    """Point w of the Siegel disk: complex symmetric with I - w w^H positive definite."""

    w: torch.Tensor

    def __post_init__(self):
        w = matfun.complex_sym_matrix(self.w)
        m = w.shape[-1]
        gram = _eye(m, complex_=True) - w @ w.mH
        lo = matfun.min_eig(gram)
        if lo <= matfun.TOL_PD:
            raise InvalidInput(f"I - w w^H has min eigenvalue {lo:.3e}; not inside the disk")
        object.__setattr__(self, "w", w)

    @property
    def m(self) -> int:
        return self.w.shape[-1]

    @property
    def batch_shape(self) -> tuple:
        return tuple(self.w.shape[:-2])


@dataclass(frozen=True)
class SymplecticMatrix:
    """Element of Sp(2m, R) stored as the assembled 2m x 2m matrix.

    Block identities a b^T = b a^T, c d^T = d c^T, a d^T - b c^T = I are
    validated to 1e-9 at construction.
    """

    mat: torch.Tensor

    def __post_init__(self):
        t = matfun.to_tensor(self.mat).to(torch.float64)
        if t.ndim < 2 or t.shape[-1] != t.shape[-2] or t.shape[-1] % 2 != 0:
            raise ShapeMismatch(f"symplectic matrix must be 2m x 2m, got {tuple(t.shape)}")
        if not torch.isfinite(t.detach()).all():
            raise InvalidInput("symplectic matrix contains non-finite entries")
        m = t.shape[-1] // 2
        a, b = t[..., :m, :m], t[..., :m, m:]
        c, d = t[..., m:, :m], t[..., m:, m:]
        eye = _eye(m)
        err = max(
            float((a @ b.mT - b @ a.mT).detach().abs().max()),
            float((c @ d.mT - d @ c.mT).detach().abs().max()),
            float((a @ d.mT - b @ c.mT - eye).detach().abs().max()),
        )
        if err > 1e-9:
            raise InvalidInput(f"symplectic block identities violated by {err:.3e}")
        object.__setattr__(self, "mat", t)

    @classmethod
    def from_blocks(cls, a, b, c, d) -> "SymplecticMatrix":
        top = torch.cat([matfun.to_tensor(a), matfun.to_tensor(b)], dim=-1)
        bot = torch.cat([matfun.to_tensor(c), matfun.to_tensor(d)], dim=-1)
        return cls(torch.cat([top, bot], dim=-2))

    @property
    def m(self) -> int:
        return self.mat.shape[-1] // 2

    def blocks(self):
        m = self.m
        t = self.mat
        return t[..., :m, :m], t[..., :m, m:], t[..., m:, :m], t[..., m:, m:]

    def __matmul__(self, other: "SymplecticMatrix") -> "SymplecticMatrix":
        return SymplecticMatrix(self.mat @ other.mat)

    def inverse(self) -> "SymplecticMatrix":
        # [[d^T, -b^T], [-c^T, a^T]] is the symplectic inverse; exact up to round-off.
        a, b, c, d = self.blocks()
        return SymplecticMatrix.from_blocks(d.mT, -b.mT, -c.mT, a.mT)


def _wrap_upper(x: torch.Tensor) -> SiegelUpperPoint:
    """Construct a SiegelUpperPoint from a tensor already known to be valid."""
    obj = object.__new__(SiegelUpperPoint)
    object.__setattr__(obj, "x", x)
    return obj


def origin(m: int, batch_shape: tuple = ()) -> SiegelUpperPoint:
    """The base point i * I_m."""
    x = (1j * _eye(m, complex_=True)).expand(*batch_shape, m, m).clone()
    return SiegelUpperPoint(x)


# ---------------------------------------------------------------------------
# Cayley maps
# ---------------------------------------------------------------------------

def cayley(x: SiegelUpperPoint) -> SiegelDiskPoint:
    """Upper space to disk: w = (x - iI)(x + iI)^{-1}."""
    eye = _eye(x.m, complex_=True)
    return SiegelDiskPoint((x.x - 1j * eye) @ matfun.complex_inv(x.x + 1j * eye))


def inverse_cayley(w: SiegelDiskPoint) -> SiegelUpperPoint:
    """Disk to upper space: x = i (I + w)(I - w)^{-1}."""
    eye = _eye(w.m, complex_=True)
    return SiegelUpperPoint(1j * (eye + w.w) @ matfun.complex_inv(eye - w.w))


# ---------------------------------------------------------------------------
# symplectic machinery
# ---------------------------------------------------------------------------

def canonical_rep(x: SiegelUpperPoint) -> SymplecticMatrix:
    """The block upper-triangular symplectic matrix mapping iI to x.

    Blocks [[v^{1/2}, u v^{-1/2}], [0, v^{-1/2}]].
    """
    vh = matfun.spd_fun(x.v, "sqrt")
    vmh = matfun.spd_fun(x.v, "inv_sqrt")
    zero = torch.zeros_like(vh)
    return SymplecticMatrix.from_blocks(vh, x.u @ vmh, zero, vmh)


def symplectic_action(s: SymplecticMatrix, x: SiegelUpperPoint) -> SiegelUpperPoint:
    """Moebius action s[x] = (a x + b)(c x + d)^{-1}."""
    if s.m != x.m:
        raise ShapeMismatch(f"symplectic size {s.m} vs point size {x.m}")
    a, b, c, d = (blk.to(torch.complex128) for blk in s.blocks())
    return SiegelUpperPoint((a @ x.x + b) @ matfun.complex_inv(c @ x.x + d))


def rep_gram(x: SiegelUpperPoint) -> torch.Tensor:
    """The 2m x 2m SPD matrix phi(x) phi(x)^T of the canonical representative.

    Invariant under the choice of coset representative; every quotient-layer
    formula consumes points only through this matrix.
    """
    f = canonical_rep(x).mat
    return f @ f.mT


def inv_rep_conjugate(p: SiegelUpperPoint, gram: torch.Tensor) -> torch.Tensor:
    """phi(p)^{-1} G phi(p)^{-T} for a 2m x 2m SPD G, built from closed-form blocks."""
    vmh = matfun.spd_fun(p.v, "inv_sqrt")
    vh = matfun.spd_fun(p.v, "sqrt")
    zero = torch.zeros_like(vh)
    inv = SymplecticMatrix.from_blocks(vmh, -vmh @ p.u, zero, vh).mat
    return inv @ gram @ inv.mT


# ---------------------------------------------------------------------------
# cross-ratio, vector-valued distance, Riemannian distance
# ---------------------------------------------------------------------------

def cross_ratio(x: SiegelUpperPoint, y: SiegelUpperPoint) -> torch.Tensor:
    """R(x, y) = (x-y)(x-conj(y))^{-1}(conj(x)-conj(y))(conj(x)-y)^{-1}.

    Returned as a raw complex tensor; its spectrum is real and contained in
    [0, 1) for valid points.
    """
    _check_same_m(x, y)
    xb, yb = x.x.conj(), y.x.conj()
    return (
        (x.x - y.x)
        @ matfun.complex_inv(x.x - yb)
        @ (xb - yb)
        @ matfun.complex_inv(xb - y.x)
    )


def _origin_translate(x: SiegelUpperPoint, y: SiegelUpperPoint) -> torch.Tensor:
    """phi(x)^{-1}[y] = v^{-1/2} (y - u) v^{-1/2}, the action moving x to iI."""
    vmh = matfun.spd_fun(x.v, "inv_sqrt").to(torch.complex128)
    return vmh @ (y.x - x.u) @ vmh


def cross_ratio_eigs(x: SiegelUpperPoint, y: SiegelUpperPoint) -> torch.Tensor:
    """Cross-ratio eigenvalues r_1 <= ... <= r_m, via the Hermitian reduction.

    With z = phi(x)^{-1}[y] and w its Cayley image, the r_j are the (real,
    in [0,1)) eigenvalues of the Hermitian PSD matrix w w^H.
    """
    _check_same_m(x, y)
    z = _origin_translate(x, y)
    eye = _eye(x.m, complex_=True)
    w = (z - 1j * eye) @ matfun.complex_inv(z + 1j * eye)
    r = torch.linalg.eigvalsh(w @ w.mH)
    r_det = r.detach()
    if float(r_det.min()) < -1e-14:
        raise InvalidInput(f"cross-ratio eigenvalue {float(r_det.min()):.3e} < -1e-14")
    if float(r_det.max()) >= VVD_R_MAX:
        raise NumericalOverflow(
            "cross-ratio eigenvalue within 1e-14 of 1: points at effectively infinite separation"
        )
    return r.clamp_min(VVD_R_FLOOR)


def vvd(x: SiegelUpperPoint, y: SiegelUpperPoint) -> torch.Tensor:
    """Vector-valued distance: sorted-descending nonnegative m-vector.

    Components log((1 + sqrt(r_j)) / (1 - sqrt(r_j))); the Euclidean norm of
    the vector is the Riemannian distance.
    """
    r = cross_ratio_eigs(x, y)
    s = r.sqrt()
    comps = torch.log1p(2 * s / (1 - s))
    return comps.flip(-1)


def distance(x: SiegelUpperPoint, y: SiegelUpperPoint) -> torch.Tensor:
    """Riemannian distance on the Siegel upper space."""
    return torch.linalg.vector_norm(vvd(x, y), dim=-1)


def _check_same_m(x: SiegelUpperPoint, y: SiegelUpperPoint) -> None:
    if x.m != y.m:
        raise ShapeMismatch(f"dimension mismatch: {x.m} vs {y.m}")


# ---------------------------------------------------------------------------
# deterministic sampling for tests and self-checks
# ---------------------------------------------------------------------------

def _gen(seed: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
    return g


def _randn(shape, gen) -> torch.Tensor:
    return torch.randn(shape, generator=gen, dtype=torch.float64)


def sample(kind: str, m: int, seed: int, batch_shape: tuple = ()):
    """Draw a valid random instance of the requested type, deterministic in seed.

    kinds: 'upper_point', 'disk_point', 'symplectic', 'spo'.  Upper points use
    u ~ symmetrized N(0,1) and v = exp(symmetrized N(0, 0.5)), which keeps
    random pairs at well-conditioned distances.
    """
    if m < 1:
        raise InvalidInput("m must be >= 1")
    gen = _gen(seed)
    shape = tuple(batch_shape) + (m, m)
    if kind == "upper_point":
        u = matfun.sym_part(_randn(shape, gen))
        v = matfun.sym_exp(matfun.sym_part(_randn(shape, gen) * 0.5))
        return SiegelUpperPoint.from_parts(u, v)
    if kind == "disk_point":
        u = matfun.sym_part(_randn(shape, gen))
        v = matfun.sym_exp(matfun.sym_part(_randn(shape, gen) * 0.5))
        return cayley(SiegelUpperPoint.from_parts(u, v))
    if kind == "spo":
        return _sample_spo(m, gen, batch_shape)
    if kind == "symplectic":
        u = matfun.sym_part(_randn(shape, gen))
        v = matfun.sym_exp(matfun.sym_part(_randn(shape, gen) * 0.5))
        rep = canonical_rep(SiegelUpperPoint.from_parts(u, v))
        return rep @ _sample_spo(m, gen, batch_shape)
    raise InvalidInput(f"unknown sample kind {kind!r}")


def _sample_spo(m: int, gen: torch.Generator, batch_shape: tuple = ()) -> SymplecticMatrix:
    """Random symplectic orthogonal matrix from a Haar-ish random unitary a + ib."""
    shape = tuple(batch_shape) + (m, m)
    zr = torch.complex(_randn(shape, gen), _randn(shape, gen))
    q, r = torch.linalg.qr(zr)
    diag = torch.diagonal(r, dim1=-2, dim2=-1)
    q = q * (diag / diag.abs().clamp_min(1e-300)).unsqueeze(-2)
    a, b = q.real, q.imag
    return SymplecticMatrix.from_blocks(a, b, -b, a)
