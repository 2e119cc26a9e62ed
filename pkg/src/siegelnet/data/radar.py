"""Synthetic radar clutter: vector AR simulation and reflection-coefficient estimation.

A stationary centered complex Gaussian vector AR process
``u_n + sum_j c_j u_{n-j} = v_n`` is parameterized by its zero-lag HPD
covariance p0 together with q-1 normalized reflection-coefficient matrices
living in the Siegel disk.  The order convention is fixed here once: a
dataset of "order q" carries (p0, Omega_1, ..., Omega_{q-1}), i.e. the AR
filter has q-1 coefficient matrices.

Generation draws per-class ground-truth reflection coefficients (class means
separated by the configured scale) plus a per-class HPD order-0 innovation
covariance, converts them to a stable AR filter via the multichannel Levinson
recursion, and simulates with Gaussian innovations after a burn-in.
Estimation is the multichannel Burg method in the forward-backward-averaged
(Vieira-Morf) normalization, whose reflection estimates are contractions by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import torch

from .. import matfun, siegel
from ..errors import ConfigError, DegenerateInput
from ..gyro import ProductPoint
from ..siegel import SiegelDiskPoint, SiegelUpperPoint
from ..spd import SPDPoint

# Class-generation constants.  Ground-truth reflection coefficients are the
# Cayley images of points u + iv with broad random v (log-spread VSCALE) and
# the class signal carried in the shape-normalized real part:
# u = v^{1/2} (C_class + UNOISE * noise) v^{1/2}.  This couples the real and
# imaginary parts the way the Siegel geometry does, so classes that are
# well-separated on the manifold stay entangled for any fixed Euclidean
# feature map.
VSCALE = 1.2
UNOISE = 0.2
P0_SEP = 0.1
P0_JITTER = 0.05
OMEGA_CLIP = 0.995

# Ridge added to the sample covariance, scaled by its trace.
P0_RIDGE = 1e-9

# Multiplicative shrink applied to boundary-violating reflection estimates.
BOUNDARY_SHRINK = 1.0 - 1e-9


@dataclass
class ARDatasetConfig:
    """Shape and difficulty knobs of a synthetic radar clutter dataset."""

    m: int
    q: int
    n_classes: int
    n_samples: int
    series_length: int
    separation: float
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("signal dimension m must be >= 1")
        if self.q < 2:
            raise ConfigError("AR order q must be >= 2")
        if self.n_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.n_samples < self.n_classes:
            raise ConfigError("need at least one sample per class")
        if self.series_length <= self.q:
            raise ConfigError("series length must exceed q")
        if self.separation < 0:
            raise ConfigError("separation scale must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "ARDatasetConfig":
        allowed = {"m", "q", "n_classes", "n_samples", "series_length", "separation", "seed"}
        unknown = set(d) - allowed
        if unknown:
            raise ConfigError(f"unknown dataset config keys: {sorted(unknown)}")
        missing = {"m", "q", "n_classes", "n_samples", "series_length", "separation"} - set(d)
        if missing:
            raise ConfigError(f"missing dataset config keys: {sorted(missing)}")
        return cls(**d)


@dataclass
class RadarSample:
    """One parameterized time series: HPD covariance plus disk reflections."""

    p0: torch.Tensor
    reflections: List[SiegelDiskPoint]
    label: int


# ---------------------------------------------------------------------------
# multichannel Levinson / Burg machinery (numpy, complex128)
# ---------------------------------------------------------------------------

def _hermfun(p: np.ndarray, f) -> np.ndarray:
    w, q = np.linalg.eigh(p)
    return (q * f(w)) @ q.conj().swapaxes(-1, -2)


def _csym(a: np.ndarray) -> np.ndarray:
    return (a + a.swapaxes(-1, -2)) / 2


def levinson_from_reflections(
    p0: np.ndarray, omegas: Sequence[np.ndarray]
) -> Tuple[List[np.ndarray], np.ndarray]:
    """Normalized reflection coefficients -> forward AR coefficients.

    Runs the multichannel Levinson (Whittle) recursion starting from the
    order-0 innovation covariance p0.  Contractive reflections yield a stable
    (stationary) filter; returns the coefficient list c_1..c_{len(omegas)}
    and the final innovation covariance.
    """
    fwd: List[np.ndarray] = []
    bwd: List[np.ndarray] = []
    p = np.array(p0, dtype=complex)
    q = np.array(p0, dtype=complex)
    for om in omegas:
        delta = _hermfun(p, np.sqrt) @ om @ _hermfun(q, np.sqrt)
        q_inv = np.linalg.inv(q)
        p_inv = np.linalg.inv(p)
        a_new = -delta @ q_inv
        b_new = -delta.conj().T @ p_inv
        order = len(fwd)
        fwd2 = [fwd[j] + a_new @ bwd[order - 1 - j] for j in range(order)] + [a_new]
        bwd2 = [bwd[j] + b_new @ fwd[order - 1 - j] for j in range(order)] + [b_new]
        p, q = p - delta @ q_inv @ delta.conj().T, q - delta.conj().T @ p_inv @ delta
        fwd, bwd = fwd2, bwd2
    return fwd, p


def simulate_var(
    coeffs: Sequence[np.ndarray],
    innov_cov: np.ndarray,
    length: int,
    burn: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Simulate u_n + sum_j c_j u_{n-j} = v_n with circular Gaussian innovations."""
    m = innov_cov.shape[0]
    chol = _hermfun(innov_cov, np.sqrt)
    total = length + burn
    u = np.zeros((total, m), dtype=complex)
    eps = (rng.standard_normal((total, m)) + 1j * rng.standard_normal((total, m))) / np.sqrt(2)
    noise = eps @ chol.T
    for n in range(total):
        acc = noise[n].copy()
        for j, c in enumerate(coeffs, start=1):
            if n - j >= 0:
                acc -= c @ u[n - j]
        u[n] = acc
    return u[burn:]


def burg_reflections(series: np.ndarray, order: int) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Multichannel Burg estimator with forward-backward averaging.

    Returns the sample zero-lag covariance and the normalized reflection
    coefficient estimates F^{-1/2} D G^{-1/2}, where F, G, D are the forward
    residual, delayed backward residual, and cross energy matrices.  The
    normalization makes every estimate a contraction.
    """
    n = series.shape[0]
    r0 = np.einsum("ni,nj->ij", series, series.conj()) / n
    f = series.copy()
    b = series.copy()
    omegas: List[np.ndarray] = []
    for p in range(1, order + 1):
        fc = f[p:]
        bc = b[p - 1 : -1]
        fwd_energy = np.einsum("ni,nj->ij", fc, fc.conj())
        bwd_energy = np.einsum("ni,nj->ij", bc, bc.conj())
        cross = np.einsum("ni,nj->ij", fc, bc.conj())
        f_mh = _hermfun(fwd_energy, lambda t: 1.0 / np.sqrt(np.maximum(t, 1e-300)))
        g_mh = _hermfun(bwd_energy, lambda t: 1.0 / np.sqrt(np.maximum(t, 1e-300)))
        omegas.append(f_mh @ cross @ g_mh)
        a_new = -cross @ np.linalg.inv(bwd_energy)
        b_new = -cross.conj().T @ np.linalg.inv(fwd_energy)
        f_next = fc + bc @ a_new.T
        b_next = bc + fc @ b_new.T
        f = np.vstack([f[:p], f_next])
        b = np.vstack([b[:p], b_next])
    return r0, omegas


# ---------------------------------------------------------------------------
# dataset generation
# ---------------------------------------------------------------------------

def _unit_vec(rng: np.random.Generator, k: int) -> np.ndarray:
    v = rng.standard_normal(k)
    return v / max(np.linalg.norm(v), 1e-12)


def _sym_from_vech_np(raw: np.ndarray, m: int) -> np.ndarray:
    out = np.zeros((m, m))
    rows, cols = np.tril_indices(m)
    out[rows, cols] = raw
    return out + out.T - np.diag(np.diag(out))


def _symfun(s: np.ndarray, f) -> np.ndarray:
    w, q = np.linalg.eigh(s)
    return (q * f(w)) @ q.T


def draw_class_params(config: ARDatasetConfig) -> List[Tuple[np.ndarray, List[np.ndarray]]]:
    """Per-class ground truth: (order-0 innovation covariance, shape targets).

    Each lag gets a symmetric shape target C of norm equal to the separation
    scale; samples of the class realize reflection coefficients whose
    underlying point has real part v^{1/2} C v^{1/2}.  Zero separation
    collapses every class onto the same distribution.
    """
    rng = np.random.default_rng([config.seed, 0xC1A55])
    k = config.m * (config.m + 1) // 2
    out = []
    for _ in range(config.n_classes):
        herm_dir = rng.standard_normal((config.m, config.m)) + 1j * rng.standard_normal(
            (config.m, config.m)
        )
        herm_dir = (herm_dir + herm_dir.conj().T) / 2
        herm_dir /= max(np.linalg.norm(herm_dir, 2), 1e-12)
        r0 = _hermfun(P0_SEP * config.separation * herm_dir, np.exp)
        shapes = [
            config.separation * _sym_from_vech_np(_unit_vec(rng, k), config.m)
            for _ in range(config.q - 1)
        ]
        out.append((r0, shapes))
    return out


def _shrink_to_disk(w: np.ndarray, radius: float) -> np.ndarray:
    top = np.linalg.norm(w, 2)
    if top > radius:
        w = w * (radius / top)
    return w


def _sample_reflection(shape: np.ndarray, rng: np.random.Generator, m: int) -> np.ndarray:
    """One ground-truth reflection: Cayley image of u + iv with coupled real part."""
    k = m * (m + 1) // 2
    v = _symfun(_sym_from_vech_np(VSCALE * rng.standard_normal(k), m), np.exp)
    vh = _symfun(v, np.sqrt)
    u = vh @ (shape + _sym_from_vech_np(UNOISE * rng.standard_normal(k), m)) @ vh
    x = u + 1j * v
    eye = np.eye(m)
    w = (x - 1j * eye) @ np.linalg.inv(x + 1j * eye)
    return _shrink_to_disk(_csym(w), OMEGA_CLIP)


def simulate_ar(config: ARDatasetConfig) -> Tuple[List[np.ndarray], np.ndarray]:
    """Simulate the configured dataset; returns per-sample series and labels.

    Labels are balanced round-robin; each sample draws its own reflection
    coefficients around the class shape targets and is simulated with a
    per-sample derived seed after a burn-in of 10*q steps.
    """
    class_params = draw_class_params(config)
    labels = np.arange(config.n_samples) % config.n_classes
    series: List[np.ndarray] = []
    for idx in range(config.n_samples):
        label = int(labels[idx])
        r0_mean, shapes = class_params[label]
        rng = np.random.default_rng([config.seed, 1, idx])
        jitter = rng.standard_normal((config.m, config.m)) + 1j * rng.standard_normal(
            (config.m, config.m)
        )
        jitter = (jitter + jitter.conj().T) / 2
        jitter /= max(np.linalg.norm(jitter, 2), 1e-12)
        r0 = _hermfun(_hermfun(r0_mean, np.log) + P0_JITTER * jitter, np.exp)
        omegas = [_sample_reflection(shape, rng, config.m) for shape in shapes]
        coeffs, innov = levinson_from_reflections(r0, omegas)
        series.append(simulate_var(coeffs, innov, config.series_length, 10 * config.q, rng))
    return series, labels


# ---------------------------------------------------------------------------
# parameterization and network input
# ---------------------------------------------------------------------------

def burg_parameterize(series: np.ndarray, q: int, label: int = -1) -> RadarSample:
    """Estimate (p0, q-1 disk reflections) from one complex time series.

    p0 is the trace-ridged sample covariance; reflection estimates are
    symmetrized (the Siegel-disk parameterization concerns complex-symmetric
    processes; finite-sample asymmetry is estimation noise) and shrunk toward
    zero if round-off puts them on the disk boundary.
    """
    arr = np.asarray(series, dtype=complex)
    if arr.ndim != 2:
        raise DegenerateInput(f"expected a (N, m) series, got shape {arr.shape}")
    n = arr.shape[0]
    if n <= 4 * q:
        raise DegenerateInput(f"series too short: N={n} must exceed 4q={4 * q}")
    power = float(np.mean(np.abs(arr) ** 2))
    if power < 1e-300:
        raise DegenerateInput("series has (numerically) zero variance")
    r0, omegas = burg_reflections(arr, q - 1)
    r0 = (r0 + r0.conj().T) / 2
    r0 = r0 + P0_RIDGE * np.trace(r0).real * np.eye(arr.shape[1])
    reflections = []
    for om in omegas:
        w = _csym(om)
        while np.linalg.norm(w, 2) ** 2 >= 1.0 - 1e-12:
            w = w * BOUNDARY_SHRINK
        reflections.append(SiegelDiskPoint(w))
    return RadarSample(p0=matfun.hpd_matrix(r0), reflections=reflections, label=label)


def to_network_input(sample: RadarSample) -> ProductPoint:
    """(p0, w_1..w_{q-1}) -> (Re p0, inverse Cayley images) as a product point."""
    factors = [SPDPoint(sample.p0.real)]
    for w in sample.reflections:
        factors.append(siegel.inverse_cayley(w))
    return ProductPoint(tuple(factors))


def stack_inputs(samples: Sequence[RadarSample]) -> Tuple[ProductPoint, torch.Tensor]:
    """Batch per-sample product points into one ProductPoint with leading (s,)."""
    if not samples:
        raise DegenerateInput("no samples to stack")
    points = [to_network_input(s) for s in samples]
    factors = []
    for j, factor in enumerate(points[0].factors):
        if isinstance(factor, SPDPoint):
            factors.append(SPDPoint(torch.stack([p.factors[j].p for p in points])))
        else:
            factors.append(SiegelUpperPoint(torch.stack([p.factors[j].x for p in points])))
    labels = torch.tensor([s.label for s in samples], dtype=torch.int64)
    return ProductPoint(tuple(factors)), labels


def build_radar_dataset(config: ARDatasetConfig, test_fraction: float = 0.5):
    """simulate -> parameterize -> stack, with a stratified train/test split.

    Returns a ClassifierDataset (see data.io).
    """
    from .io import ClassifierDataset  # local import: io is the serialization layer above this one

    if not (0.0 < test_fraction < 1.0):
        raise ConfigError("test fraction must lie in (0, 1)")
    series, labels = simulate_ar(config)
    samples = [
        burg_parameterize(s, config.q, label=int(lbl)) for s, lbl in zip(series, labels)
    ]
    inputs, label_t = stack_inputs(samples)
    train_idx, test_idx = stratified_split(labels, test_fraction, config.seed)
    return ClassifierDataset(
        inputs=inputs,
        labels=label_t,
        train_idx=torch.as_tensor(train_idx, dtype=torch.int64),
        test_idx=torch.as_tensor(test_idx, dtype=torch.int64),
        seed=config.seed,
        meta={
            "source": "gen-radar",
            "config": {
                "m": config.m,
                "q": config.q,
                "n_classes": config.n_classes,
                "n_samples": config.n_samples,
                "series_length": config.series_length,
                "separation": config.separation,
                "seed": config.seed,
            },
        },
    )


def stratified_split(labels: np.ndarray, test_fraction: float, seed: int):
    """Deterministic per-class shuffle split; returns (train_idx, test_idx)."""
    rng = np.random.default_rng([seed, 0x5B11])
    labels = np.asarray(labels)
    train, test = [], []
    for cls in np.unique(labels):
        idx = np.flatnonzero(labels == cls)
        idx = idx[rng.permutation(len(idx))]
        n_test = max(1, int(round(len(idx) * test_fraction)))
        n_test = min(n_test, len(idx) - 1) if len(idx) > 1 else n_test
        test.append(idx[:n_test])
        train.append(idx[n_test:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))
