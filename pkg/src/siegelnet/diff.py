"""Differentiation and optimization over constrained geometric parameters.

Constrained parameters (symmetric, SPD, Stiefel, chamber directions, Siegel
points) are optimized through smooth unconstrained parameterizations of flat
raw vectors; ``materialize`` maps raw storage to a valid constrained object,
always.  Reverse-mode gradients flow through the matrix-function kernel's
Daleckii-Krein rules, so spectra may collide without producing NaNs.

``grad_check`` compares every differentiable forward operation against a
central finite-difference oracle on the raw parameterization; the oracle is
independent of the reverse-mode path it validates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import torch
import torch.nn.functional as F

from . import gyro, layers, matfun, siegel, spd
from .errors import (
    ConfigError,
    DivergedTraining,
    InvalidInput,
    NotDifferentiable,
    ShapeMismatch,
    SiegelNetError,
)
from .gyro import ProductPoint
from .siegel import SiegelUpperPoint
from .spd import SPDPoint

Signature = Tuple[Tuple[str, int], ...]

BLOCK_KINDS = ("sym", "spd", "stiefel", "chamber", "siegel_point", "product_point", "scalar", "free")


def block_size(kind: str, dims) -> int:
    """Flat raw length per batch element for a block kind."""
    if kind in ("sym", "spd"):
        return matfun.vech_dim(dims)
    if kind == "stiefel":
        m, m2 = dims
        return m * m2
    if kind == "chamber":
        return dims
    if kind == "siegel_point":
        return dims * (dims + 1)
    if kind == "product_point":
        return sum(block_size("siegel_point" if k == "siegel" else "spd", m) for k, m in dims)
    if kind == "scalar":
        return 1
    if kind == "free":
        return int(torch.tensor(dims).prod()) if not isinstance(dims, int) else dims
    raise ConfigError(f"unknown block kind {kind!r}")


@dataclass
class ParamBlock:
    """Flat raw storage for one trainable constrained parameter.

    raw has shape batch_shape + (block_size,), float64, requires_grad.
    """

    kind: str
    raw: torch.Tensor
    dims: object = None

    def __post_init__(self):
        if self.kind not in BLOCK_KINDS:
            raise ConfigError(f"unknown block kind {self.kind!r}")
        raw = torch.as_tensor(self.raw).to(torch.float64)
        expected = block_size(self.kind, self.dims)
        if raw.shape[-1] != expected:
            raise ShapeMismatch(
                f"{self.kind} block expects raw width {expected}, got {raw.shape[-1]}"
            )
        if not raw.requires_grad:
            raw = raw.clone().requires_grad_(True)
        self.raw = raw

    @property
    def batch_shape(self) -> tuple:
        return tuple(self.raw.shape[:-1])


def materialize(block: ParamBlock):
    """Map raw storage to the constrained object the block represents."""
    raw, dims = block.raw, block.dims
    if block.kind == "sym":
        return matfun.sym_from_vech(raw, dims)
    if block.kind == "spd":
        return matfun.sym_exp(matfun.sym_from_vech(raw, dims))
    if block.kind == "stiefel":
        m, m2 = dims
        return matfun.stiefel_qr(raw.reshape(raw.shape[:-1] + (m, m2)))
    if block.kind == "chamber":
        mags = raw.abs().sort(dim=-1, descending=True).values
        norms = torch.linalg.vector_norm(mags, dim=-1, keepdim=True)
        if (norms.detach() < 1e-300).any():
            raise InvalidInput("chamber block raw vector is numerically zero")
        return mags / norms
    if block.kind == "siegel_point":
        return _materialize_siegel_point(raw, dims)
    if block.kind == "product_point":
        return _materialize_product(raw, dims)
    if block.kind == "scalar":
        return raw.squeeze(-1)
    if block.kind == "free":
        shape = (dims,) if isinstance(dims, int) else tuple(dims)
        return raw.reshape(raw.shape[:-1] + shape)
    raise ConfigError(f"unknown block kind {block.kind!r}")


def _materialize_siegel_point(raw: torch.Tensor, m: int) -> SiegelUpperPoint:
    # exp makes the imaginary part positive definite by construction, so the
    # strict constructor validation is skipped: materialize stays total even
    # when transiently extreme parameters push eigenvalues below the PD
    # tolerance (downstream geometry then fails loudly if it truly degenerates)
    k = matfun.vech_dim(m)
    u = matfun.sym_from_vech(raw[..., :k], m)
    v = matfun.sym_exp(matfun.sym_from_vech(raw[..., k:], m))
    return siegel._wrap_upper(torch.complex(u, v))


def _materialize_product(raw: torch.Tensor, signature: Signature) -> ProductPoint:
    from .spd import _wrap_spd

    factors = []
    offset = 0
    for kind, m in signature:
        if kind == "siegel":
            width = block_size("siegel_point", m)
            factors.append(_materialize_siegel_point(raw[..., offset : offset + width], m))
        elif kind == "spd":
            width = block_size("spd", m)
            factors.append(
                _wrap_spd(matfun.sym_exp(matfun.sym_from_vech(raw[..., offset : offset + width], m)))
            )
        else:
            raise ConfigError(f"unknown factor kind {kind!r}")
        offset += width
    return ProductPoint(tuple(factors))


def new_block(
    kind: str,
    dims,
    batch_shape: tuple = (),
    seed: int = 0,
    noise: float = 0.0,
) -> ParamBlock:
    """Create a block with the conventional initialization for its kind.

    sym/spd/siegel_point/product_point start at the origin plus N(0, noise^2)
    raw perturbations; chamber starts at the uniform direction; stiefel raw is
    standard normal (its QR is a random Stiefel point); scalar starts at 1.
    """
    gen = torch.Generator()
    gen.manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
    width = block_size(kind, dims)
    shape = tuple(batch_shape) + (width,)
    noise_t = noise * torch.randn(shape, generator=gen, dtype=torch.float64)
    if kind in ("sym", "spd", "siegel_point", "product_point", "free"):
        raw = noise_t
    elif kind == "chamber":
        raw = torch.ones(shape, dtype=torch.float64) + noise_t
    elif kind == "stiefel":
        raw = torch.randn(shape, generator=gen, dtype=torch.float64)
    elif kind == "scalar":
        raw = torch.ones(shape, dtype=torch.float64) + noise_t
    else:
        raise ConfigError(f"unknown block kind {kind!r}")
    return ParamBlock(kind, raw.requires_grad_(True), dims)


# ---------------------------------------------------------------------------
# gradients
# ---------------------------------------------------------------------------

def backward(loss: torch.Tensor, blocks: Dict[str, ParamBlock]) -> Dict[str, torch.Tensor]:
    """Gradient of a scalar loss with respect to every block's raw vector."""
    if loss.numel() != 1:
        raise InvalidInput("backward expects a scalar loss")
    leaves = [b.raw for b in blocks.values()]
    try:
        grads = torch.autograd.grad(loss, leaves, allow_unused=True)
    except RuntimeError as err:
        raise NotDifferentiable(str(err)) from err
    return {
        name: (g if g is not None else torch.zeros_like(b.raw))
        for (name, b), g in zip(blocks.items(), grads)
    }


def finite_difference(
    loss_fn: Callable[[], torch.Tensor],
    blocks: Dict[str, ParamBlock],
    step: float = 1e-6,
) -> Dict[str, torch.Tensor]:
    """Central finite differences of a (possibly per-trial vector) loss.

    loss_fn re-evaluates the forward pass from the blocks' current raw
    storage.  For vector-valued losses the batch axes of the loss must align
    with the blocks' batch axes (per-trial independence), so one component
    sweep perturbs all trials simultaneously.
    """
    out = {}
    with torch.no_grad():
        for name, blk in blocks.items():
            width = blk.raw.shape[-1]
            g = torch.zeros_like(blk.raw)
            for i in range(width):
                blk.raw[..., i] += step
                up = loss_fn().detach().clone()
                blk.raw[..., i] -= 2 * step
                down = loss_fn().detach().clone()
                blk.raw[..., i] += step
                g[..., i] = (up - down) / (2 * step)
            out[name] = g
    return out


def compare_gradients(
    loss_fn: Callable[[], torch.Tensor],
    blocks: Dict[str, ParamBlock],
    step: float = 1e-6,
    skip_below: float = 1e-8,
) -> Dict[str, float]:
    """Max relative error of reverse-mode gradients against finite differences.

    Components where both gradients are below ``skip_below`` are skipped, and
    differences under the oracle's own round-off floor (machine epsilon times
    the loss scale over the step) are discounted: a central difference cannot
    resolve below that, regardless of the gradient's correctness.
    """
    loss = loss_fn()
    grads = backward(loss.sum(), blocks)
    fd = finite_difference(loss_fn, blocks, step=step)
    # composite eigendecomposition/log forwards evaluate to ~tens of eps in
    # relative error; below this the central difference reflects round-off,
    # not the derivative
    noise_floor = 64 * torch.finfo(torch.float64).eps * max(1.0, float(loss.detach().abs().max())) / (2 * step)
    report = {}
    for name in blocks:
        g, f = grads[name], fd[name]
        keep = (g.abs() >= skip_below) | (f.abs() >= skip_below)
        if not keep.any():
            report[name] = 0.0
            continue
        rel = ((g - f).abs() - noise_floor).clamp_min(0.0) / f.abs().clamp_min(skip_below)
        report[name] = float(rel[keep].max())
    return report


# ---------------------------------------------------------------------------
# grad-check registry: one named case per differentiable forward op
# ---------------------------------------------------------------------------

def _case_gen(seed: int) -> torch.Generator:
    g = torch.Generator()
    g.manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
    return g


def _point_block(name_seed: int, m: int, trials: int, scale: float = 0.4) -> ParamBlock:
    return new_block("siegel_point", m, batch_shape=(trials,), seed=name_seed, noise=scale)


def _weights(gen: torch.Generator, shape) -> torch.Tensor:
    return torch.randn(shape, generator=gen, dtype=torch.float64)


def _case_distance(m, trials, seed):
    blocks = {"x": _point_block(seed, m, trials), "y": _point_block(seed + 1, m, trials)}

    def loss():
        x = materialize(blocks["x"])
        y = materialize(blocks["y"])
        return siegel.distance(x, y) ** 2

    return loss, blocks


def _case_vvd(m, trials, seed):
    gen = _case_gen(seed + 2)
    w = _weights(gen, (trials, m))
    blocks = {"x": _point_block(seed, m, trials), "y": _point_block(seed + 1, m, trials)}

    def loss():
        return (siegel.vvd(materialize(blocks["x"]), materialize(blocks["y"])) * w).sum(-1)

    return loss, blocks


def _case_cayley(m, trials, seed):
    const = siegel.sample("upper_point", m, seed + 9, batch_shape=(trials,))
    blocks = {"x": _point_block(seed, m, trials)}

    def loss():
        w = siegel.cayley(materialize(blocks["x"]))
        y = siegel.inverse_cayley(w)
        return siegel.distance(y, const) ** 2

    return loss, blocks


def _case_canonical_rep(m, trials, seed):
    gen = _case_gen(seed + 3)
    w = _weights(gen, (trials, 2 * m, 2 * m))
    blocks = {"x": _point_block(seed, m, trials)}

    def loss():
        rep = siegel.canonical_rep(materialize(blocks["x"]))
        return (rep.mat * w).sum((-2, -1))

    return loss, blocks


def _case_symplectic_action(m, trials, seed):
    s = siegel.sample("symplectic", m, seed + 4, batch_shape=(trials,))
    const = siegel.sample("upper_point", m, seed + 5, batch_shape=(trials,))
    blocks = {"x": _point_block(seed, m, trials)}

    def loss():
        return siegel.distance(siegel.symplectic_action(s, materialize(blocks["x"])), const) ** 2

    return loss, blocks


def _case_cross_ratio(m, trials, seed):
    blocks = {"x": _point_block(seed, m, trials), "y": _point_block(seed + 1, m, trials)}

    def loss():
        r = siegel.cross_ratio(materialize(blocks["x"]), materialize(blocks["y"]))
        return (r.abs() ** 2).sum((-2, -1))

    return loss, blocks


def _case_spd_distance(m, trials, seed):
    blocks = {
        "p": new_block("spd", m, (trials,), seed, noise=0.4),
        "q": new_block("spd", m, (trials,), seed + 1, noise=0.4),
    }

    def loss():
        return spd.spd_distance(SPDPoint(materialize(blocks["p"])), SPDPoint(materialize(blocks["q"]))) ** 2

    return loss, blocks


def _case_spd_canonical_rep(m, trials, seed):
    gen = _case_gen(seed + 2)
    w = _weights(gen, (trials, m, m))
    blocks = {"p": new_block("spd", m, (trials,), seed, noise=0.4)}

    def loss():
        return (spd.spd_canonical_rep(SPDPoint(materialize(blocks["p"]))) * w).sum((-2, -1))

    return loss, blocks


def _case_oplus(m, trials, seed):
    const = siegel.sample("upper_point", m, seed + 7, batch_shape=(trials,))
    blocks = {"x": _point_block(seed, m, trials), "y": _point_block(seed + 1, m, trials)}

    def loss():
        z = gyro.oplus(materialize(blocks["x"]), materialize(blocks["y"]))
        return siegel.distance(z, const) ** 2

    return loss, blocks


def _case_ominus(m, trials, seed):
    const = siegel.sample("upper_point", m, seed + 7, batch_shape=(trials,))
    blocks = {"x": _point_block(seed, m, trials)}

    def loss():
        return siegel.distance(gyro.ominus(materialize(blocks["x"])), const) ** 2

    return loss, blocks


def _case_inner_S(m, trials, seed):
    blocks = {"x": _point_block(seed, m, trials), "y": _point_block(seed + 1, m, trials)}

    def loss():
        return gyro.inner_S(materialize(blocks["x"]), materialize(blocks["y"]))

    return loss, blocks


def _case_norm_S(m, trials, seed):
    blocks = {"x": _point_block(seed, m, trials)}

    def loss():
        return gyro.norm_S(materialize(blocks["x"])) ** 2

    return loss, blocks


def _case_q_logit(m, trials, seed):
    blocks = {
        "x": _point_block(seed, m, trials),
        "a": _point_block(seed + 1, m, trials),
        "p": _point_block(seed + 2, m, trials),
    }

    def loss():
        hyp = layers.QHyperplane(materialize(blocks["a"]), materialize(blocks["p"]))
        return layers.q_logit(materialize(blocks["x"]), hyp)

    return loss, blocks


def _case_q_distance(m, trials, seed):
    _, blocks = _case_q_logit(m, trials, seed)

    def loss():
        hyp = layers.QHyperplane(materialize(blocks["a"]), materialize(blocks["p"]))
        return layers.q_distance(materialize(blocks["x"]), hyp)

    return loss, blocks


def _case_q_product_logit(m, trials, seed):
    signature = (("spd", m), ("siegel", m))
    blocks = {
        "x": new_block("product_point", signature, (trials,), seed, noise=0.4),
        "a": new_block("product_point", signature, (trials,), seed + 1, noise=0.4),
        "p": new_block("product_point", signature, (trials,), seed + 2, noise=0.4),
    }

    def loss():
        hyp = layers.ProductQHyperplane(materialize(blocks["a"]), materialize(blocks["p"]))
        return layers.q_product_logit(materialize(blocks["x"]), hyp)

    return loss, blocks


def _case_v_logit(m, trials, seed):
    blocks = {
        "x": _point_block(seed, m, trials),
        "p": _point_block(seed + 1, m, trials),
        "xi": new_block("chamber", m, (trials,), seed + 2, noise=0.3),
        "scale": new_block("scalar", None, (trials,), seed + 3, noise=0.3),
    }

    def loss():
        hyp = layers.VHyperplane(
            materialize(blocks["p"]), materialize(blocks["xi"]), materialize(blocks["scale"])
        )
        return layers.v_logit(materialize(blocks["x"]), hyp)

    return loss, blocks


def _case_afc_forward(m, trials, seed):
    x = siegel.sample("upper_point", m, seed + 8, batch_shape=(trials,))
    const = siegel.sample("upper_point", m, seed + 9, batch_shape=(trials,))
    blocks = {
        "a": new_block("sym", m, (trials,), seed, noise=0.4),
        "b": new_block("spd", m, (trials,), seed + 1, noise=0.4),
    }

    def loss():
        params = layers.AFCParams(materialize(blocks["a"]), materialize(blocks["b"]))
        return siegel.distance(layers.afc_forward(x, params), const) ** 2

    return loss, blocks


def _case_dfc_forward(m, trials, seed):
    m2 = max(1, m - 1)
    x = siegel.sample("upper_point", m + 1, seed + 8, batch_shape=(trials,))
    const = siegel.sample("upper_point", m2, seed + 9, batch_shape=(trials,))
    blocks = {
        "a": new_block("sym", m2, (trials,), seed, noise=0.4),
        "b": new_block("stiefel", (m + 1, m2), (trials,), seed + 1),
    }

    def loss():
        params = layers.DFCParams(materialize(blocks["a"]), materialize(blocks["b"]))
        return siegel.distance(layers.dfc_forward(x, params), const) ** 2

    return loss, blocks


def _case_mlr_logits(m, trials, seed):
    gen = _case_gen(seed + 11)
    labels = torch.randint(0, 2, (trials,), generator=gen)
    blocks = {
        "x": _point_block(seed, m, trials),
        "a0": _point_block(seed + 1, m, trials),
        "p0": _point_block(seed + 2, m, trials),
        "a1": _point_block(seed + 3, m, trials),
        "p1": _point_block(seed + 4, m, trials),
    }

    def loss():
        x = materialize(blocks["x"])
        h0 = layers.QHyperplane(materialize(blocks["a0"]), materialize(blocks["p0"]))
        h1 = layers.QHyperplane(materialize(blocks["a1"]), materialize(blocks["p1"]))
        logits = layers.mlr_logits(x, [h0, h1])
        return F.cross_entropy(logits, labels, reduction="none")

    return loss, blocks


def _case_spd_fun(fname):
    def build(m, trials, seed):
        gen = _case_gen(seed + 2)
        w = _weights(gen, (trials, m, m))
        blocks = {"p": new_block("spd", m, (trials,), seed, noise=0.4)}

        def loss():
            return (matfun.spd_fun(materialize(blocks["p"]), fname) * w).sum((-2, -1))

        return loss, blocks

    return build


def _case_sym_exp(m, trials, seed):
    gen = _case_gen(seed + 2)
    w = _weights(gen, (trials, m, m))
    blocks = {"s": new_block("sym", m, (trials,), seed, noise=0.6)}

    def loss():
        return (matfun.sym_exp(materialize(blocks["s"])) * w).sum((-2, -1))

    return loss, blocks


def _case_stiefel_qr(m, trials, seed):
    gen = _case_gen(seed + 2)
    m2 = max(1, m - 1)
    w = _weights(gen, (trials, m + 1, m2))
    blocks = {"b": new_block("stiefel", (m + 1, m2), (trials,), seed)}

    def loss():
        return (materialize(blocks["b"]) * w).sum((-2, -1))

    return loss, blocks


GRAD_CHECK_CASES: Dict[str, Callable] = {
    "spd_fun_log": _case_spd_fun("log"),
    "spd_fun_sqrt": _case_spd_fun("sqrt"),
    "spd_fun_inv_sqrt": _case_spd_fun("inv_sqrt"),
    "spd_fun_inv": _case_spd_fun("inv"),
    "sym_exp": _case_sym_exp,
    "stiefel_qr": _case_stiefel_qr,
    "cayley": _case_cayley,
    "canonical_rep": _case_canonical_rep,
    "symplectic_action": _case_symplectic_action,
    "cross_ratio": _case_cross_ratio,
    "vvd": _case_vvd,
    "distance": _case_distance,
    "spd_distance": _case_spd_distance,
    "spd_canonical_rep": _case_spd_canonical_rep,
    "oplus": _case_oplus,
    "ominus": _case_ominus,
    "inner_S": _case_inner_S,
    "norm_S": _case_norm_S,
    "q_logit": _case_q_logit,
    "q_distance": _case_q_distance,
    "q_product_logit": _case_q_product_logit,
    "v_logit": _case_v_logit,
    "afc_forward": _case_afc_forward,
    "dfc_forward": _case_dfc_forward,
    "mlr_logits": _case_mlr_logits,
}


def grad_check(
    op_name: str,
    trials: int = 100,
    seed: int = 0,
    dims: Sequence[int] = (1, 2, 3, 4),
    step: float = 1e-6,
) -> Dict[str, float]:
    """Reverse-mode vs finite-difference comparison for one named operation.

    Trials are split across the requested dimensions; each trial carries its
    own independent parameters.  Returns the max relative error per parameter
    block, aggregated over dimensions.
    """
    if op_name not in GRAD_CHECK_CASES:
        raise NotDifferentiable(f"no gradient-check case registered for {op_name!r}")
    build = GRAD_CHECK_CASES[op_name]
    per_dim = max(1, trials // len(tuple(dims)))
    report: Dict[str, float] = {}
    for j, m in enumerate(dims):
        loss_fn, blocks = build(m, per_dim, seed + 1000 * j)
        res = compare_gradients(loss_fn, blocks, step=step)
        for name, err in res.items():
            report[name] = max(report.get(name, 0.0), err)
    return report


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass
class TrainConfig:
    """Adam-style first-order training configuration.

    Defaults are desk-scale conventions, not tuned claims.
    """

    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 300
    batch_size: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if not (self.lr > 0):
            raise ConfigError(f"learning rate must be positive, got {self.lr}")
        for name in ("beta1", "beta2"):
            val = getattr(self, name)
            if not (0.0 < val < 1.0):
                raise ConfigError(f"{name} must lie in (0, 1), got {val}")
        if self.eps <= 0:
            raise ConfigError("eps must be positive")
        if self.epochs < 0:
            raise ConfigError("epochs must be nonnegative")
        if self.batch_size is not None and self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        allowed = {"lr", "beta1", "beta2", "eps", "epochs", "batch_size", "seed"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class FitResult:
    best_params: Dict[str, torch.Tensor]
    best_epoch: int
    loss_trace: List[float] = field(default_factory=list)
    train_acc_trace: List[float] = field(default_factory=list)
    val_acc_trace: List[float] = field(default_factory=list)


def _accuracy(model, inputs, labels) -> float:
    with torch.no_grad():
        pred = model.forward(inputs).argmax(dim=-1)
    return float((pred == labels).double().mean())


def fit(
    model,
    train_inputs,
    train_labels: torch.Tensor,
    config: TrainConfig,
    val_inputs=None,
    val_labels: Optional[torch.Tensor] = None,
) -> FitResult:
    """Train a model's parameter blocks with Adam on softmax cross-entropy.

    Deterministic given the config seed.  Returns (and restores into the
    model) the parameters of the epoch with the best validation accuracy, or
    the best training loss when no validation split is given.  Non-finite
    losses and manifold-exit errors raise DivergedTraining with the epoch.
    """
    labels = torch.as_tensor(train_labels).to(torch.int64)
    n = labels.numel()
    blocks = model.blocks
    opt = torch.optim.Adam(
        [b.raw for b in blocks.values()],
        lr=config.lr,
        betas=(config.beta1, config.beta2),
        eps=config.eps,
    )
    gen = torch.Generator()
    gen.manual_seed(config.seed & 0x7FFFFFFFFFFFFFFF)

    def snapshot():
        return {name: b.raw.detach().clone() for name, b in blocks.items()}

    best = snapshot()
    best_metric = -math.inf
    best_epoch = -1
    result = FitResult(best_params=best, best_epoch=-1)
    batch = config.batch_size or n

    for epoch in range(config.epochs):
        order = torch.randperm(n, generator=gen) if batch < n else torch.arange(n)
        epoch_loss = 0.0
        try:
            for chunk in order.split(batch):
                logits = model.forward(train_inputs.take(chunk))
                loss = F.cross_entropy(logits, labels[chunk])
                if not torch.isfinite(loss.detach()):
                    raise DivergedTraining(epoch, f"non-finite loss at epoch {epoch}")
                opt.zero_grad(set_to_none=True)
                loss.backward()
                opt.step()
                epoch_loss += float(loss.detach()) * chunk.numel()
            train_acc = _accuracy(model, train_inputs, labels)
            if val_inputs is not None:
                val_acc = _accuracy(model, val_inputs, torch.as_tensor(val_labels).to(torch.int64))
            else:
                val_acc = float("nan")
        except DivergedTraining:
            raise
        except (SiegelNetError, RuntimeError) as err:
            raise DivergedTraining(epoch, f"epoch {epoch}: {err}") from err
        epoch_loss /= n
        result.loss_trace.append(epoch_loss)
        result.train_acc_trace.append(train_acc)
        result.val_acc_trace.append(val_acc)
        metric = val_acc if val_inputs is not None else -epoch_loss
        if metric > best_metric:
            best_metric = metric
            best = snapshot()
            best_epoch = epoch

    with torch.no_grad():
        for name, blk in blocks.items():
            blk.raw.copy_(best[name])
    result.best_params = best
    result.best_epoch = best_epoch
    return result
