"""Property suites runnable as one command: every module invariant, checked.

Each check draws deterministic samples, evaluates one documented invariant at
its stated tolerance, and reports a single pass/fail line.  The ``fast``
level caps dimensions at 3 and trials at 100; ``full`` raises the caps to 6
and 1000.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Tuple

import torch

from . import diff, gyro, layers, matfun, siegel, spd
from .data import graph as graph_data
from .data import radar as radar_data
from .gyro import ProductPoint
from .siegel import SiegelUpperPoint
from .spd import SPDPoint

LEVELS = {
    "fast": {"max_m": 3, "trials": 100},
    "full": {"max_m": 6, "trials": 1000},
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _dims(max_m: int, cap: int) -> List[int]:
    return list(range(1, min(max_m, cap) + 1))


def _split(trials: int, parts: int) -> int:
    return max(1, trials // max(1, parts))


# ---------------------------------------------------------------------------
# matfun
# ---------------------------------------------------------------------------

def check_matfun_eig_reconstruction(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 6)
    per = _split(trials, len(dims))
    for m in dims:
        g = torch.Generator().manual_seed(11 + m)
        s = matfun.sym_part(torch.randn((per, m, m), generator=g, dtype=torch.float64))
        w, q = matfun.sym_eig(s)
        rec = (q * w.unsqueeze(-2)) @ q.mT
        denom = torch.linalg.matrix_norm(s).clamp_min(1.0)
        worst = max(worst, float(((rec - s).norm(dim=(-2, -1)) / denom).max()))
        orth = q.mT @ q - torch.eye(m, dtype=torch.float64)
        worst = max(worst, float(orth.abs().amax()))
        h = torch.randn((per, m, m), generator=g, dtype=torch.float64)
        hmat = matfun.herm_part(torch.complex(h, torch.randn_like(h)))
        wh, qh = matfun.herm_eig(hmat)
        rech = (qh * wh.unsqueeze(-2).to(qh.dtype)) @ qh.mH
        denomh = torch.linalg.matrix_norm(hmat).clamp_min(1.0)
        worst = max(worst, float(((rech - hmat).norm(dim=(-2, -1)) / denomh).max()))
    return worst <= 1e-10, f"max reconstruction/orthogonality residual {worst:.2e} (tol 1e-10)"


def check_matfun_roundtrips(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 6)
    per = _split(trials, len(dims))
    for m in dims:
        p = spd.spd_sample(m, 23 + m, (per,)).p
        log_rt = matfun.sym_exp(matfun.spd_fun(p, "log"))
        worst = max(worst, _rel(log_rt, p))
        rt = matfun.spd_fun(p, "sqrt")
        worst = max(worst, _rel(rt @ rt, p))
        imh = matfun.spd_fun(p, "inv_sqrt")
        eye = torch.eye(m, dtype=torch.float64)
        worst = max(worst, float((imh @ p @ imh - eye).abs().amax()))
    return worst <= 1e-8, f"max round-trip relative error {worst:.2e} (tol 1e-8)"


def _rel(a: torch.Tensor, b: torch.Tensor) -> float:
    num = torch.linalg.matrix_norm(a - b)
    den = torch.linalg.matrix_norm(b).clamp_min(1.0)
    return float((num / den).max())


def check_matfun_jvp(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    h = 1e-6
    dims = _dims(max_m, 6)
    per = _split(trials, len(dims) * 5)
    for m in dims:
        gen = torch.Generator().manual_seed(37 + m)
        for fname in ("log", "sqrt", "inv_sqrt", "inv", "exp"):
            for _ in range(per):
                p = spd.spd_sample(m, int(torch.randint(1 << 30, (1,), generator=gen)), ()).p
                e = matfun.sym_part(torch.randn((m, m), generator=gen, dtype=torch.float64))
                jvp = matfun.matfun_jvp(p, fname, e)
                if fname == "exp":
                    fd = (matfun.sym_exp(p + h * e) - matfun.sym_exp(p - h * e)) / (2 * h)
                else:
                    fd = (matfun.spd_fun(p + h * e, fname) - matfun.spd_fun(p - h * e, fname)) / (2 * h)
                num = float(torch.linalg.matrix_norm(jvp - fd))
                den = max(float(torch.linalg.matrix_norm(fd)), 1e-10)
                worst = max(worst, num / den)
    return worst <= 1e-4, f"max JVP vs finite-difference relative error {worst:.2e} (tol 1e-4)"


# ---------------------------------------------------------------------------
# siegel geometry
# ---------------------------------------------------------------------------

def check_distance_axioms(max_m: int, trials: int) -> Tuple[bool, str]:
    sym_w = id_w = tri_w = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 101 + m, (per,))
        y = siegel.sample("upper_point", m, 202 + m, (per,))
        z = siegel.sample("upper_point", m, 303 + m, (per,))
        dxy = siegel.distance(x, y)
        sym_w = max(sym_w, float((dxy - siegel.distance(y, x)).abs().max()))
        id_w = max(id_w, float(siegel.distance(x, x).max()))
        tri = siegel.distance(x, z) - dxy - siegel.distance(y, z)
        tri_w = max(tri_w, float(tri.max()))
    ok = sym_w <= 1e-9 and id_w <= 1e-9 and tri_w <= 1e-8
    return ok, f"symmetry {sym_w:.2e} (1e-9), identity {id_w:.2e} (1e-9), triangle excess {tri_w:.2e} (1e-8)"


def check_sp_invariance(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 404 + m, (per,))
        y = siegel.sample("upper_point", m, 505 + m, (per,))
        s = siegel.sample("symplectic", m, 606 + m, (per,))
        base = siegel.distance(x, y)
        moved = siegel.distance(siegel.symplectic_action(s, x), siegel.symplectic_action(s, y))
        worst = max(worst, float((base - moved).abs().max()))
    return worst <= 1e-8, f"max |d(s[x],s[y]) - d(x,y)| = {worst:.2e} (tol 1e-8)"


def check_cayley_roundtrip(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 707 + m, (per,))
        back = siegel.inverse_cayley(siegel.cayley(x))
        worst = max(worst, float((back.x - x.x).abs().amax()))
        w = siegel.sample("disk_point", m, 808 + m, (per,))
        fwd = siegel.cayley(siegel.inverse_cayley(w))
        worst = max(worst, float((fwd.w - w.w).abs().amax()))
    return worst <= 1e-9, f"max round-trip error {worst:.2e} (tol 1e-9)"


def check_cross_ratio_spectrum(max_m: int, trials: int) -> Tuple[bool, str]:
    imag_w = low_w = -0.0
    high_ok = True
    agree_w = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 909 + m, (per,))
        y = siegel.sample("upper_point", m, 1010 + m, (per,))
        r_mat = siegel.cross_ratio(x, y)
        ev = torch.linalg.eigvals(r_mat)
        imag_w = max(imag_w, float(ev.imag.abs().max()))
        real = ev.real.sort(dim=-1).values
        low_w = min(low_w, float(real.min()))
        high_ok = high_ok and bool((real < 1.0).all())
        r_trick = siegel.cross_ratio_eigs(x, y)
        agree_w = max(agree_w, float((real - r_trick).abs().max()))
    ok = imag_w <= 1e-8 and low_w >= -1e-8 and high_ok and agree_w <= 1e-8
    return ok, (
        f"imag {imag_w:.2e} (1e-8), min {low_w:.2e} (>= -1e-8), sup < 1: {high_ok}, "
        f"general-eig vs Hermitian route {agree_w:.2e} (1e-8)"
    )


def check_spd_restriction(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        v1 = spd.spd_sample(m, 111 + m, (per,))
        v2 = spd.spd_sample(m, 222 + m, (per,))
        airm = spd.spd_distance(v1, v2)
        emb = siegel.distance(
            SiegelUpperPoint(1j * v1.p.to(torch.complex128)),
            SiegelUpperPoint(1j * v2.p.to(torch.complex128)),
        )
        worst = max(worst, float((airm - emb).abs().max()))
    return worst <= 1e-8, f"max |AIRM - Siegel restriction| = {worst:.2e} (tol 1e-8)"


# ---------------------------------------------------------------------------
# gyro
# ---------------------------------------------------------------------------

def check_norm_distance_ratio(max_m: int, trials: int) -> Tuple[bool, str]:
    ratios = []
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 313 + m, (per,))
        y = siegel.sample("upper_point", m, 414 + m, (per,))
        d = siegel.distance(x, y)
        keep = d > 1e-3
        ns = gyro.norm_S(gyro.oplus(gyro.ominus(x), y))
        ratios.append((ns / d)[keep])
    r = torch.cat(ratios)
    cv = float(r.std(unbiased=False) / r.mean())
    const_err = float((r.mean() - math.sqrt(2.0)).abs())
    ok = cv <= 1e-6 and const_err <= 1e-9
    return ok, f"ratio CV {cv:.2e} (1e-6), |mean - sqrt2| = {const_err:.2e} (1e-9)"


def check_k_invariance(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 515 + m, (per,))
        y = siegel.sample("upper_point", m, 616 + m, (per,))
        k = siegel.sample("spo", m, 717 + m, (per,))
        base = gyro.inner_S(x, y)
        moved = gyro.inner_S(siegel.symplectic_action(k, x), siegel.symplectic_action(k, y))
        worst = max(worst, float((base - moved).abs().max()))
    return worst <= 1e-8, f"max K-invariance violation {worst:.2e} (tol 1e-8)"


def check_rep_independence(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 818 + m, (per,))
        k = siegel.sample("spo", m, 919 + m, (per,))
        f = siegel.canonical_rep(x).mat
        fk = f @ k.mat
        worst = max(worst, float((fk @ fk.mT - f @ f.mT).abs().amax()))
    return worst <= 1e-9, f"max Gram change under right-K multiplication {worst:.2e} (tol 1e-9)"


def check_gyro_identities(max_m: int, trials: int) -> Tuple[bool, str]:
    worst = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 121 + m, (per,))
        o = siegel.origin(m, (per,))
        worst = max(worst, float(siegel.distance(gyro.oplus(o, x), x).max()))
        worst = max(worst, float(siegel.distance(gyro.oplus(x, o), x).max()))
        worst = max(worst, float(siegel.distance(gyro.oplus(gyro.ominus(x), x), o).max()))
        worst = max(worst, float((gyro.ominus(gyro.ominus(x)).x - x.x).abs().amax()))
    return worst <= 1e-9, f"max identity violation {worst:.2e} (tol 1e-9)"


def check_product_reduction(max_m: int, trials: int) -> Tuple[bool, str]:
    m = min(max_m, 3)
    per = max(2, _split(trials, 2))
    x = siegel.sample("upper_point", m, 232, (per,))
    a = siegel.sample("upper_point", m, 343, (per,))
    p = siegel.sample("upper_point", m, 454, (per,))
    single_logit = layers.q_logit(x, layers.QHyperplane(a, p))
    single_dist = layers.q_distance(x, layers.QHyperplane(a, p))
    hyp = layers.ProductQHyperplane(ProductPoint((a,)), ProductPoint((p,)))
    prod_logit = layers.q_product_logit(ProductPoint((x,)), hyp)
    prod_dist = layers.q_product_distance(ProductPoint((x,)), hyp)
    inn = gyro.inner_S(ProductPoint((x,)), ProductPoint((a,))) - gyro.inner_S(x, a)
    worst = max(
        float((single_logit - prod_logit).abs().max()),
        float((single_dist - prod_dist).abs().max()),
        float(inn.abs().max()),
    )
    return worst <= 1e-12, f"max L=1 reduction discrepancy {worst:.2e} (tol 1e-12)"


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

def check_q_head_values(max_m: int, trials: int) -> Tuple[bool, str]:
    e = math.e
    xs = SiegelUpperPoint(torch.tensor([[e * 1j]], dtype=torch.complex128))
    ps = siegel.origin(1)
    hyp = layers.QHyperplane(SiegelUpperPoint(torch.tensor([[e * 1j]], dtype=torch.complex128)), ps)
    scalar_err = abs(float(layers.q_distance(xs, hyp)) - math.sqrt(2.0))
    at_p = float(layers.q_distance(ps, hyp))
    worst_cons = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 565 + m, (per,))
        a = siegel.sample("upper_point", m, 676 + m, (per,))
        p = siegel.sample("upper_point", m, 787 + m, (per,))
        hy = layers.QHyperplane(a, p)
        logit = layers.q_logit(x, hy)
        dist = layers.q_distance(x, hy)
        den = torch.linalg.matrix_norm(gyro.log_rep_gram(a))
        worst_cons = max(worst_cons, float((logit.abs() - dist * den).abs().max()))
        at_own = float(layers.q_distance(p, hy).max())
        worst_cons = max(worst_cons, 0.0 if at_own <= 1e-10 else at_own)
    ok = scalar_err <= 1e-12 and at_p <= 1e-12 and worst_cons <= 1e-9
    return ok, (
        f"scalar case error {scalar_err:.2e} (1e-12), d(p,H) = {at_p:.2e} (1e-12), "
        f"| |logit| - dist*norm | = {worst_cons:.2e} (1e-9)"
    )


def check_chamber_pairing_bound(max_m: int, trials: int) -> Tuple[bool, str]:
    low = 0.0
    high = 0.0
    dims = _dims(max_m, 5)
    per = _split(trials, len(dims))
    for m in dims:
        x = siegel.sample("upper_point", m, 898 + m, (per,))
        p = siegel.sample("upper_point", m, 989 + m, (per,))
        gen = torch.Generator().manual_seed(242 + m)
        xi = torch.randn((per, m), generator=gen, dtype=torch.float64).abs()
        xi = xi.sort(dim=-1, descending=True).values
        xi = xi / torch.linalg.vector_norm(xi, dim=-1, keepdim=True)
        pairing = (siegel.vvd(x, p) * xi).sum(-1)
        low = min(low, float(pairing.min()))
        high = max(high, float((pairing - siegel.distance(x, p)).max()))
    ok = low >= 0.0 and high <= 1e-10
    return ok, f"min pairing {low:.2e} (>= 0), max excess over distance {high:.2e} (tol 1e-10)"


def check_afc_dfc(max_m: int, trials: int) -> Tuple[bool, str]:
    two_path = 0.0
    closure_ok = True
    special = 0.0
    dims = [m for m in _dims(max_m, 5) if m >= 2] or [2]
    per = _split(trials, len(dims))
    for m in dims:
        gen = torch.Generator().manual_seed(454 + m)
        x = siegel.sample("upper_point", m, 545 + m, (per,))
        a = matfun.sym_part(torch.randn((per, m, m), generator=gen, dtype=torch.float64))
        b = matfun.sym_exp(matfun.sym_part(torch.randn((per, m, m), generator=gen, dtype=torch.float64) * 0.5))
        params = layers.AFCParams(a, b)
        out = layers.afc_forward(x, params)
        closure_ok = closure_ok and bool(torch.linalg.eigvalsh(out.v).min() > 0)
        ab = SiegelUpperPoint(torch.complex(a, b))
        via_action = siegel.symplectic_action(siegel.canonical_rep(ab), x)
        two_path = max(two_path, float((out.x - via_action.x).abs().amax()))
        # u = 0, a = 0 reduces to the SPD congruence translation
        v_only = SiegelUpperPoint(1j * x.v.to(torch.complex128))
        trans = layers.afc_forward(v_only, layers.AFCParams(torch.zeros_like(a), b))
        bh = matfun.spd_fun(b, "sqrt")
        special = max(special, float((trans.v - bh @ x.v @ bh).abs().amax()))
        special = max(special, float(trans.u.abs().amax()))
        m2 = max(1, m - 1)
        bs = matfun.stiefel_qr(torch.randn((per, m, m2), generator=gen, dtype=torch.float64))
        dparams = layers.DFCParams(torch.zeros((per, m2, m2), dtype=torch.float64), bs)
        dout = layers.dfc_forward(x, dparams)
        closure_ok = closure_ok and bool(torch.linalg.eigvalsh(dout.v).min() > 0)
        special = max(special, float((dout.v - bs.mT @ x.v @ bs).abs().amax()))
    ok = two_path <= 1e-9 and closure_ok and special <= 1e-9
    return ok, (
        f"AFC two-path {two_path:.2e} (1e-9), closure {closure_ok}, "
        f"FC specializations {special:.2e} (1e-9)"
    )


# ---------------------------------------------------------------------------
# diff
# ---------------------------------------------------------------------------

def check_gradients(max_m: int, trials: int) -> Tuple[bool, str]:
    dims = tuple(_dims(max_m, 4)[-2:])  # the two largest dims within cap
    per_op = max(4, trials // 10)
    worst_name, worst = "none", 0.0
    for name in diff.GRAD_CHECK_CASES:
        rep = diff.grad_check(name, trials=per_op, seed=77, dims=dims)
        for block, err in rep.items():
            if err > worst:
                worst, worst_name = err, f"{name}/{block}"
    return worst <= 1e-4, f"max gradient relative error {worst:.2e} at {worst_name} (tol 1e-4)"


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------

def check_radar_pipeline(max_m: int, trials: int) -> Tuple[bool, str]:
    config = radar_data.ARDatasetConfig(
        m=min(max_m, 3), q=2, n_classes=2, n_samples=8, series_length=120, separation=0.8, seed=3
    )
    series, labels = radar_data.simulate_ar(config)
    count = 0
    for s, lbl in zip(series, labels):
        sample = radar_data.burg_parameterize(s, config.q, label=int(lbl))
        point = radar_data.to_network_input(sample)
        count += int(point.signature == (("spd", config.m),) + (("siegel", config.m),) * (config.q - 1))
    return count == len(series), f"{count}/{len(series)} samples produced valid product points"


def check_distortion_zero(max_m: int, trials: int) -> Tuple[bool, str]:
    # two nodes at graph distance 1: exact fit reachable, distortion ~ 0
    cfg = graph_data.GraphEmbeddingConfig(m=1, epochs=800, lr=2e-2, seed=5)
    res = graph_data.embed_graph([[0.0, 1.0], [1.0, 0.0]], cfg)
    fitted = res.avg_distortion
    # and the reported distortion is zero iff the embedded distance matches
    d = float(siegel.distance(res.points.take(torch.tensor([0])), res.points.take(torch.tensor([1]))))
    exact = abs(d / 1.0 - 1.0)
    ok = fitted < 0.01 and abs(fitted - exact) <= 1e-9
    return ok, f"two-node distortion {fitted:.2e} (< 1e-2), equals |ratio - 1| to {abs(fitted - exact):.1e}"


CHECKS: Dict[str, Callable[[int, int], Tuple[bool, str]]] = {
    "matfun.eig_reconstruction": check_matfun_eig_reconstruction,
    "matfun.roundtrips": check_matfun_roundtrips,
    "matfun.jvp_finite_difference": check_matfun_jvp,
    "siegel.distance_axioms": check_distance_axioms,
    "siegel.sp_invariance": check_sp_invariance,
    "siegel.cayley_roundtrip": check_cayley_roundtrip,
    "siegel.cross_ratio_spectrum": check_cross_ratio_spectrum,
    "siegel.spd_restriction": check_spd_restriction,
    "gyro.norm_distance_ratio": check_norm_distance_ratio,
    "gyro.k_invariance": check_k_invariance,
    "gyro.representative_independence": check_rep_independence,
    "gyro.identities": check_gyro_identities,
    "gyro.product_reduction": check_product_reduction,
    "layers.q_head_values": check_q_head_values,
    "layers.chamber_pairing_bound": check_chamber_pairing_bound,
    "layers.afc_dfc": check_afc_dfc,
    "diff.gradients": check_gradients,
    "data.radar_pipeline": check_radar_pipeline,
    "data.distortion_zero": check_distortion_zero,
}


def run_selfcheck(level: str = "fast") -> List[CheckResult]:
    """Run every module property suite at the requested level."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; expected one of {sorted(LEVELS)}")
    params = LEVELS[level]
    results = []
    for name, fn in CHECKS.items():
        try:
            passed, detail = fn(params["max_m"], params["trials"])
        except Exception as err:  # a crash is a failure, not an abort
            passed, detail = False, f"raised {type(err).__name__}: {err}"
        results.append(CheckResult(name=name, passed=passed, detail=detail))
    return results
