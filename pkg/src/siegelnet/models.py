"""Classifier assembly: FC layer + MLR head over Siegel or product inputs.

Model names follow the experiment harness convention:

* ``qmlr`` / ``vmlr``: bare MLR head.
* ``afc-qmlr`` / ``afc-vmlr``: dimension-preserving affine FC layer first.
* ``dfc-qmlr``: dimension-reducing FC layer first.

On product inputs the FC layer acts per factor (SPD factors get the
congruence / bilinear analogs); V-heads require a single Siegel factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import torch

from . import diff, layers, matfun
from .diff import ParamBlock
from .errors import ConfigError, ShapeMismatch
from .gyro import ProductPoint
from .siegel import SiegelUpperPoint
from .spd import SPDPoint

MODEL_NAMES = ("qmlr", "vmlr", "afc-qmlr", "dfc-qmlr", "afc-vmlr")

# Reduced dimensions used by the reducing FC layer when none are configured.
DEFAULT_DFC_DIM = {3: 2, 4: 3, 5: 3, 6: 4}

Signature = Tuple[Tuple[str, int], ...]


def default_dfc_dim(m: int) -> int:
    return DEFAULT_DFC_DIM.get(m, max(1, m - 1))


@dataclass
class ModelSpec:
    """Architecture description, independent of parameter values."""

    name: str
    signature: Signature
    n_classes: int
    dfc_dims: Optional[Tuple[int, ...]] = None
    init_noise: float = 0.01

    def __post_init__(self):
        if self.name not in MODEL_NAMES:
            raise ConfigError(f"unknown model {self.name!r}; expected one of {MODEL_NAMES}")
        self.signature = tuple((str(k), int(m)) for k, m in self.signature)
        for kind, m in self.signature:
            if kind not in ("siegel", "spd") or m < 1:
                raise ConfigError(f"bad signature entry {(kind, m)}")
        if self.n_classes < 2:
            raise ConfigError("need at least 2 classes")
        if "vmlr" in self.name and self.signature_kinds != ("siegel",):
            raise ConfigError("V-head models require a single-Siegel signature")
        if self.name == "dfc-qmlr":
            dims = self.dfc_dims or tuple(default_dfc_dim(m) for _, m in self.signature)
            if len(dims) != len(self.signature):
                raise ConfigError("dfc_dims must list one output dimension per factor")
            for (kind, m), m2 in zip(self.signature, dims):
                if not (1 <= m2 < m):
                    raise ConfigError(f"dfc output dim {m2} must satisfy 1 <= m2 < m={m}")
            self.dfc_dims = tuple(int(d) for d in dims)

    @property
    def signature_kinds(self) -> tuple:
        return tuple(k for k, _ in self.signature)

    @property
    def head_signature(self) -> Signature:
        if self.name == "dfc-qmlr":
            return tuple((k, m2) for (k, _), m2 in zip(self.signature, self.dfc_dims))
        return self.signature

    @property
    def is_product(self) -> bool:
        return len(self.signature) > 1


class SiegelClassifier:
    """Trainable FC + MLR classifier over Siegel / product inputs."""

    def __init__(self, spec: ModelSpec, seed: int = 0):
        self.spec = spec
        self.blocks: Dict[str, ParamBlock] = {}
        self._build(seed)

    def _build(self, seed: int) -> None:
        spec = self.spec
        noise = spec.init_noise
        sub = 0

        def next_seed():
            nonlocal sub
            sub += 1
            return seed * 10007 + sub

        if spec.name.startswith("afc"):
            for j, (kind, m) in enumerate(spec.signature):
                if kind == "siegel":
                    self.blocks[f"fc{j}_a"] = diff.new_block("sym", m, seed=next_seed(), noise=noise)
                self.blocks[f"fc{j}_b"] = diff.new_block("spd", m, seed=next_seed(), noise=noise)
        elif spec.name.startswith("dfc"):
            for j, ((kind, m), m2) in enumerate(zip(spec.signature, spec.dfc_dims)):
                if kind == "siegel":
                    self.blocks[f"fc{j}_a"] = diff.new_block("sym", m2, seed=next_seed(), noise=noise)
                self.blocks[f"fc{j}_b"] = diff.new_block("stiefel", (m, m2), seed=next_seed())

        M = spec.n_classes
        head_sig = spec.head_signature
        if "qmlr" in spec.name:
            if spec.is_product:
                self.blocks["head_a"] = diff.new_block(
                    "product_point", head_sig, (M,), seed=next_seed(), noise=noise
                )
                self.blocks["head_p"] = diff.new_block(
                    "product_point", head_sig, (M,), seed=next_seed(), noise=noise
                )
            else:
                m = head_sig[0][1]
                self.blocks["head_a"] = diff.new_block(
                    "siegel_point", m, (M,), seed=next_seed(), noise=noise
                )
                self.blocks["head_p"] = diff.new_block(
                    "siegel_point", m, (M,), seed=next_seed(), noise=noise
                )
        else:
            m = head_sig[0][1]
            self.blocks["head_p"] = diff.new_block(
                "siegel_point", m, (M,), seed=next_seed(), noise=noise
            )
            self.blocks["head_xi"] = diff.new_block("chamber", m, (M,), seed=next_seed(), noise=noise)
            self.blocks["head_scale"] = diff.new_block("scalar", None, (M,), seed=next_seed(), noise=noise)

    # -- forward ------------------------------------------------------------

    def _check_input(self, inputs) -> ProductPoint:
        if isinstance(inputs, SiegelUpperPoint):
            inputs = ProductPoint((inputs,))
        if not isinstance(inputs, ProductPoint):
            raise ConfigError(f"unsupported input type {type(inputs).__name__}")
        if inputs.signature != self.spec.signature:
            raise ShapeMismatch(
                f"input signature {inputs.signature} does not match model {self.spec.signature}"
            )
        return inputs

    def _apply_fc(self, inputs: ProductPoint) -> ProductPoint:
        spec = self.spec
        if spec.name in ("qmlr", "vmlr"):
            return inputs
        bundles = []
        for j, (kind, _) in enumerate(spec.signature):
            b = diff.materialize(self.blocks[f"fc{j}_b"])
            if spec.name.startswith("afc"):
                if kind == "siegel":
                    bundles.append(layers.AFCParams(diff.materialize(self.blocks[f"fc{j}_a"]), b))
                else:
                    bundles.append(layers.SPDAffineParams(b))
            else:
                if kind == "siegel":
                    bundles.append(layers.DFCParams(diff.materialize(self.blocks[f"fc{j}_a"]), b))
                else:
                    bundles.append(layers.SPDReduceParams(b))
        return layers.product_fc_forward(inputs, bundles)

    def forward(self, inputs) -> torch.Tensor:
        """Per-class logits, shape batch_shape + (n_classes,)."""
        x = self._apply_fc(self._check_input(inputs))
        x = x.unsqueeze(-3)  # broadcast samples against the class axis
        if "qmlr" in self.spec.name:
            a = diff.materialize(self.blocks["head_a"])
            p = diff.materialize(self.blocks["head_p"])
            if self.spec.is_product:
                hyp = layers.ProductQHyperplane(a, p)
                return layers.q_product_logit(x, hyp)
            hyp = layers.QHyperplane(_only(a), _only(p))
            return layers.q_logit(_only(x), hyp)
        hyp = layers.VHyperplane(
            diff.materialize(self.blocks["head_p"]),
            diff.materialize(self.blocks["head_xi"]),
            diff.materialize(self.blocks["head_scale"]),
        )
        return layers.v_logit(_only(x), hyp)


def _only(x):
    if isinstance(x, ProductPoint):
        if len(x.factors) != 1:
            raise ShapeMismatch("expected a single-factor product")
        return x.factors[0]
    return x


# ---------------------------------------------------------------------------
# Euclidean log-feature baseline
# ---------------------------------------------------------------------------

def log_features(inputs) -> torch.Tensor:
    """Euclidean feature map: packed (u, log v) per Siegel factor, log p per SPD factor."""
    if isinstance(inputs, SiegelUpperPoint):
        inputs = ProductPoint((inputs,))
    feats = []
    with torch.no_grad():
        for f in inputs.factors:
            if isinstance(f, SPDPoint):
                feats.append(matfun.vech(matfun.spd_fun(f.p, "log")))
            else:
                feats.append(matfun.vech(f.u))
                feats.append(matfun.vech(matfun.spd_fun(f.v, "log")))
    return torch.cat(feats, dim=-1)


class LogFeatureMLR:
    """Plain linear softmax regression on the Euclidean log-feature map."""

    def __init__(self, n_features: int, n_classes: int, seed: int = 0):
        self.n_features = n_features
        self.blocks = {
            "weight": diff.new_block("free", (n_classes, n_features), seed=seed * 10007 + 1, noise=0.01),
            "bias": diff.new_block("free", n_classes, seed=seed * 10007 + 2, noise=0.0),
        }

    def forward(self, inputs) -> torch.Tensor:
        if isinstance(inputs, FeatureBatch):
            feats = inputs.feats
        elif isinstance(inputs, torch.Tensor):
            feats = inputs
        else:
            feats = log_features(inputs)
        w = diff.materialize(self.blocks["weight"])
        b = diff.materialize(self.blocks["bias"])
        return feats @ w.mT + b


@dataclass
class FeatureBatch:
    """Tensor features with the .take interface diff.fit expects."""

    feats: torch.Tensor

    def take(self, idx: torch.Tensor) -> "FeatureBatch":
        return FeatureBatch(self.feats.index_select(0, idx))


def feature_batch(inputs) -> FeatureBatch:
    return FeatureBatch(log_features(inputs))
