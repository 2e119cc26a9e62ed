"""Dense matrix-function kernel on symmetric / Hermitian matrices.

All heavy geometry upstream reduces to a handful of primitives implemented
here: eigendecompositions, SPD/HPD matrix functions f(P) = Q f(L) Q^H, their
directional (Daleckii-Krein) derivatives, and the sign-fixed thin QR used as
a Stiefel projection.

Everything operates on ``torch.Tensor`` values in float64/complex128 with
arbitrary leading batch dimensions, shape ``(..., m, m)``.  Matrix functions
carry a custom reverse-mode rule built from the Loewner matrix of divided
differences, which stays finite at (near-)repeated eigenvalues; torch's
native ``eigh`` backward does not.
"""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np
import torch

from .errors import InvalidInput, NotPositiveDefinite, RankDeficient, ShapeMismatch, SingularMatrix

# Minimum eigenvalue for a matrix to count as positive definite.  Inputs
# failing it are rejected rather than clamped, to keep geometry errors loud.
TOL_PD = 1e-12

# Relative spectral gap below which Loewner divided differences fall back to
# the derivative value f'((l_i + l_j) / 2).
LOEWNER_REL_GAP = 1e-8

# Condition-number ceiling for complex_inv.
COND_MAX = 1e14

_REAL = torch.float64
_COMPLEX = torch.complex128


def to_tensor(a) -> torch.Tensor:
    """as_tensor, but non-tensor input goes through numpy's float64 defaults.

    torch.as_tensor on Python lists would produce float32/complex64 and
    silently truncate literals before any cast back to 64-bit could help.
    """
    if isinstance(a, torch.Tensor):
        return a
    return torch.as_tensor(np.asarray(a))


def _as_real(a) -> torch.Tensor:
    t = to_tensor(a)
    if t.is_complex():
        raise InvalidInput("expected a real matrix, got complex entries")
    return t.to(_REAL)


def _as_complex(a) -> torch.Tensor:
    return to_tensor(a).to(_COMPLEX)


def _check_finite(t: torch.Tensor, what: str) -> None:
    if not torch.isfinite(t.detach()).all():
        raise InvalidInput(f"{what} contains non-finite entries")


def _check_square(t: torch.Tensor, what: str) -> None:
    if t.ndim < 2 or t.shape[-1] != t.shape[-2]:
        raise ShapeMismatch(f"{what} must be square, got shape {tuple(t.shape)}")


def sym_part(a: torch.Tensor) -> torch.Tensor:
    """(A + A^T) / 2, transpose without conjugation (works for complex symmetric)."""
    return (a + a.mT) / 2


def herm_part(a: torch.Tensor) -> torch.Tensor:
    """(A + A^H) / 2."""
    return (a + a.mH) / 2


# ---------------------------------------------------------------------------
# constructors: normalize + validate, return plain tensors
# ---------------------------------------------------------------------------

def sym_matrix(a) -> torch.Tensor:
    """Real symmetric matrix: symmetrizes the input, rejects non-finite entries."""
    t = _as_real(a)
    _check_square(t, "symmetric matrix")
    _check_finite(t, "symmetric matrix")
    return sym_part(t)


def min_eig(a: torch.Tensor) -> torch.Tensor:
    """Smallest eigenvalue over the batch of a symmetric/Hermitian matrix."""
    return torch.linalg.eigvalsh(a.detach()).min()


def spd_matrix(a) -> torch.Tensor:
    """Real SPD matrix: symmetrized, minimum eigenvalue must exceed TOL_PD."""
    t = sym_matrix(a)
    lo = min_eig(t)
    if lo <= TOL_PD:
        raise NotPositiveDefinite(f"minimum eigenvalue {lo:.3e} <= {TOL_PD:.0e}")
    return t


def complex_sym_matrix(a) -> torch.Tensor:
    """Complex symmetric (A = A^T, not Hermitian) matrix, symmetrized."""
    t = _as_complex(a)
    _check_square(t, "complex symmetric matrix")
    _check_finite(torch.view_as_real(t), "complex symmetric matrix")
    return sym_part(t)


def hpd_matrix(a) -> torch.Tensor:
    """Hermitian positive definite matrix, hermitized and validated."""
    t = _as_complex(a)
    _check_square(t, "Hermitian matrix")
    _check_finite(torch.view_as_real(t), "Hermitian matrix")
    t = herm_part(t)
    lo = min_eig(t)
    if lo <= TOL_PD:
        raise NotPositiveDefinite(f"minimum eigenvalue {lo:.3e} <= {TOL_PD:.0e}")
    return t


def stiefel_matrix(a) -> torch.Tensor:
    """Tall m x m2 matrix with orthonormal columns (m > m2), validated to 1e-10."""
    t = _as_real(a)
    if t.ndim < 2 or t.shape[-2] <= t.shape[-1]:
        raise ShapeMismatch(f"Stiefel matrix must be tall (m > m2), got {tuple(t.shape)}")
    _check_finite(t, "Stiefel matrix")
    m2 = t.shape[-1]
    gram = t.mT @ t
    err = (gram - torch.eye(m2, dtype=t.dtype)).abs().max()
    if err > 1e-10:
        raise InvalidInput(f"columns not orthonormal: max |Q^T Q - I| = {err:.3e}")
    return t


# ---------------------------------------------------------------------------
# eigendecompositions
# ---------------------------------------------------------------------------

def sym_eig(s: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Eigendecomposition of a real symmetric matrix.

    Returns eigenvalues in ascending order and an orthogonal eigenvector
    matrix Q with S = Q diag(w) Q^T.
    """
    s = sym_matrix(s)
    return torch.linalg.eigh(s)


def herm_eig(h: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
    """Eigendecomposition of a complex Hermitian matrix (real eigenvalues, unitary Q)."""
    t = _as_complex(h)
    _check_square(t, "Hermitian matrix")
    _check_finite(torch.view_as_real(t), "Hermitian matrix")
    return torch.linalg.eigh(herm_part(t))


# ---------------------------------------------------------------------------
# matrix functions with Daleckii-Krein derivatives
# ---------------------------------------------------------------------------

_SCALAR_FUNS: dict[str, Tuple[Callable, Callable, bool]] = {
    # name: (f, f', requires positive spectrum)
    "log": (torch.log, lambda x: 1.0 / x, True),
    "sqrt": (torch.sqrt, lambda x: 0.5 / torch.sqrt(x), True),
    "inv_sqrt": (lambda x: 1.0 / torch.sqrt(x), lambda x: -0.5 * x ** (-1.5), True),
    "inv": (lambda x: 1.0 / x, lambda x: -1.0 / x**2, True),
    "exp": (torch.exp, torch.exp, False),
}


def _loewner(fname: str, w: torch.Tensor) -> torch.Tensor:
    """Loewner matrix L_ij = f[w_i, w_j] with f'(midpoint) at near-coincident pairs."""
    f, df, _ = _SCALAR_FUNS[fname]
    fw = f(w)
    li, lj = w.unsqueeze(-1), w.unsqueeze(-2)
    gap = li - lj
    thresh = (LOEWNER_REL_GAP * w.abs().amax(dim=-1, keepdim=True).unsqueeze(-1)).clamp_min(1e-300)
    near = gap.abs() < thresh
    safe_gap = torch.where(near, torch.ones_like(gap), gap)
    divided = (fw.unsqueeze(-1) - fw.unsqueeze(-2)) / safe_gap
    return torch.where(near, df((li + lj) / 2), divided)


class _EigMatrixFunction(torch.autograd.Function):
    """f(A) = Q f(L) Q^H for symmetric/Hermitian A, with Loewner-matrix backward.

    The reverse rule is the Daleckii-Krein Frechet derivative, which is
    self-adjoint in the Frobenius pairing; it stays finite when eigenvalues
    collide (the divided difference degenerates to f').
    """

    @staticmethod
    def forward(ctx, a: torch.Tensor, fname: str):
        w, q = torch.linalg.eigh(a)
        _, _, needs_pd = _SCALAR_FUNS[fname]
        if needs_pd and w.min() <= TOL_PD:
            raise NotPositiveDefinite(
                f"{fname}: minimum eigenvalue {w.min().item():.3e} <= {TOL_PD:.0e}"
            )
        f = _SCALAR_FUNS[fname][0]
        out = (q * f(w).unsqueeze(-2).to(q.dtype)) @ q.mH
        ctx.save_for_backward(w, q)
        ctx.fname = fname
        return herm_part(out)

    @staticmethod
    @torch.autograd.function.once_differentiable
    def backward(ctx, grad: torch.Tensor):
        w, q = ctx.saved_tensors
        loewner = _loewner(ctx.fname, w).to(q.dtype)
        g = herm_part(grad)
        out = q @ (loewner * (q.mH @ g @ q)) @ q.mH
        return herm_part(out), None


def spd_fun(p: torch.Tensor, fname: str) -> torch.Tensor:
    """Apply f in {sqrt, inv_sqrt, log, inv} to an SPD/HPD matrix via its spectrum.

    Eigenvectors are preserved; sqrt(P) @ sqrt(P) reproduces P.  The output is
    symmetric/Hermitian of the same reality class; log output need not be PD.
    Raises NotPositiveDefinite when the spectrum touches TOL_PD.
    """
    if fname not in ("sqrt", "inv_sqrt", "log", "inv"):
        raise InvalidInput(f"unsupported matrix function {fname!r}")
    t = to_tensor(p)
    t = t.to(_COMPLEX) if t.is_complex() else t.to(_REAL)
    _check_square(t, "positive definite matrix")
    _check_finite(t if not t.is_complex() else torch.view_as_real(t), "positive definite matrix")
    return _EigMatrixFunction.apply(herm_part(t), fname)


def sym_exp(s: torch.Tensor) -> torch.Tensor:
    """Matrix exponential of a real symmetric (or Hermitian) matrix; SPD by construction."""
    t = to_tensor(s)
    t = t.to(_COMPLEX) if t.is_complex() else t.to(_REAL)
    _check_square(t, "symmetric matrix")
    _check_finite(t if not t.is_complex() else torch.view_as_real(t), "symmetric matrix")
    return _EigMatrixFunction.apply(herm_part(t), "exp")


def matfun_jvp(p: torch.Tensor, fname: str, direction: torch.Tensor) -> torch.Tensor:
    """Directional derivative D f(P)[E] of a spectral matrix function.

    Computed as Q (L * (Q^H E Q)) Q^H where L is the Loewner matrix of divided
    differences f[l_i, l_j], with f'((l_i + l_j)/2) substituted when
    |l_i - l_j| < LOEWNER_REL_GAP * max|l|.
    """
    if fname not in _SCALAR_FUNS:
        raise InvalidInput(f"unsupported matrix function {fname!r}")
    t = to_tensor(p)
    t = herm_part(t.to(_COMPLEX) if t.is_complex() else t.to(_REAL))
    e = to_tensor(direction)
    e = herm_part(e.to(t.dtype))
    w, q = torch.linalg.eigh(t)
    _, _, needs_pd = _SCALAR_FUNS[fname]
    if needs_pd and w.min() <= TOL_PD:
        raise NotPositiveDefinite(f"{fname}: spectrum not positive definite")
    loewner = _loewner(fname, w).to(q.dtype)
    return herm_part(q @ (loewner * (q.mH @ e @ q)) @ q.mH)


# ---------------------------------------------------------------------------
# general inversion and Stiefel projection
# ---------------------------------------------------------------------------

def complex_inv(m: torch.Tensor) -> torch.Tensor:
    """Inverse of a general (complex or real) square matrix.

    Rejects inputs whose condition estimate exceeds COND_MAX instead of
    returning garbage; valid geometry never gets near that ceiling.
    """
    t = to_tensor(m)
    t = t.to(_COMPLEX) if t.is_complex() else t.to(_REAL)
    _check_square(t, "matrix to invert")
    _check_finite(t if not t.is_complex() else torch.view_as_real(t), "matrix to invert")
    sv = torch.linalg.svdvals(t.detach())
    smin, smax = sv.amin(dim=-1), sv.amax(dim=-1)
    if (smin <= 0).any() or (smax / smin > COND_MAX).any():
        raise SingularMatrix(
            f"condition estimate {(smax / smin.clamp_min(1e-300)).max():.3e} exceeds {COND_MAX:.0e}"
        )
    return torch.linalg.inv(t)


def stiefel_qr(m: torch.Tensor) -> torch.Tensor:
    """Project a full-column-rank tall matrix onto the Stiefel manifold.

    Thin QR factor with the sign convention diag(R) > 0, which makes the
    factor unique and the map idempotent on Stiefel points.
    """
    t = _as_real(m)
    if t.ndim < 2 or t.shape[-2] <= t.shape[-1]:
        raise ShapeMismatch(f"expected a tall matrix (m > m2), got {tuple(t.shape)}")
    _check_finite(t, "matrix to orthonormalize")
    sv = torch.linalg.svdvals(t.detach())
    if (sv.amin(dim=-1) <= 1e-12 * sv.amax(dim=-1).clamp_min(1.0)).any():
        raise RankDeficient("input does not have full column rank")
    q, r = torch.linalg.qr(t, mode="reduced")
    diag = torch.diagonal(r, dim1=-2, dim2=-1)
    sign = torch.where(diag < 0, -torch.ones_like(diag), torch.ones_like(diag))
    return q * sign.unsqueeze(-2)


def frobenius_inner(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    """Real Frobenius pairing <A, B> = Re tr(A^H B), batched over leading dims."""
    prod = a.conj() * b if a.is_complex() else a * b
    out = prod.sum(dim=(-2, -1))
    return out.real if out.is_complex() else out


def eye_like(m: int, ref: torch.Tensor) -> torch.Tensor:
    """Identity of size m with ref's dtype, broadcastable against ref's batch."""
    return torch.eye(m, dtype=ref.dtype, device=ref.device)


def vech_dim(m: int) -> int:
    """Number of free entries of a symmetric m x m matrix."""
    return m * (m + 1) // 2


def sym_from_vech(raw: torch.Tensor, m: int) -> torch.Tensor:
    """Assemble a symmetric matrix from its m(m+1)/2 packed lower-triangle entries."""
    if raw.shape[-1] != vech_dim(m):
        raise ShapeMismatch(f"expected {vech_dim(m)} packed entries, got {raw.shape[-1]}")
    rows, cols = torch.tril_indices(m, m)
    out = raw.new_zeros(raw.shape[:-1] + (m, m))
    out[..., rows, cols] = raw
    return out + out.mT - torch.diag_embed(torch.diagonal(out, dim1=-2, dim2=-1))


def vech(s: torch.Tensor) -> torch.Tensor:
    """Packed lower-triangle entries of a symmetric matrix (inverse of sym_from_vech)."""
    m = s.shape[-1]
    rows, cols = torch.tril_indices(m, m)
    return s[..., rows, cols]


def rel_error(a: torch.Tensor, b: torch.Tensor) -> float:
    """Relative Frobenius discrepancy used by self-checks."""
    denom = max(1.0, float(torch.linalg.vector_norm(b.detach().flatten())))
    return float(torch.linalg.vector_norm((a - b).detach().flatten())) / denom
