import math

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from siegelnet import gyro, layers, matfun, siegel, spd
from siegelnet.errors import ConfigError, DegenerateHyperplane, InvalidInput, ShapeMismatch
from siegelnet.gyro import ProductPoint

seeds = st.integers(0, 2**31 - 1)
dims = st.integers(1, 5)


def scalar_point(value) -> siegel.SiegelUpperPoint:
    return siegel.SiegelUpperPoint(np.array([[value]], dtype=complex))


def scalar_hyperplane(a_value=math.e * 1j, p_value=1j) -> layers.QHyperplane:
    return layers.QHyperplane(scalar_point(a_value), scalar_point(p_value))


class TestQHead:
    def test_distance_zero_at_base_point(self):
        hyp = scalar_hyperplane()
        assert float(layers.q_distance(scalar_point(1j), hyp)) < 1e-15

    def test_scalar_hand_value(self):
        hyp = scalar_hyperplane()
        d = layers.q_distance(scalar_point(math.e * 1j), hyp)
        assert abs(float(d) - math.sqrt(2)) < 1e-12

    def test_logit_scalar_hand_value(self):
        hyp = scalar_hyperplane()
        assert abs(float(layers.q_logit(scalar_point(math.e * 1j), hyp)) - 2.0) < 1e-12

    def test_logit_antisymmetry_under_log_reflection(self):
        hyp = scalar_hyperplane()
        assert abs(float(layers.q_logit(scalar_point(1j / math.e), hyp)) + 2.0) < 1e-12

    @given(dims, seeds)
    def test_logit_distance_consistency(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        a = siegel.sample("upper_point", m, seed + 1)
        p = siegel.sample("upper_point", m, seed + 2)
        hyp = layers.QHyperplane(a, p)
        logit = float(layers.q_logit(x, hyp))
        dist = float(layers.q_distance(x, hyp))
        den = float(torch.linalg.matrix_norm(gyro.log_rep_gram(a)))
        assert abs(abs(logit) - dist * den) <= 1e-9

    @given(dims, seeds)
    def test_invariant_under_representative_right_k_multiples(self, m, seed):
        # x and a enter the closed form only through representative Grams, so
        # right-multiplying their representatives by stabilizer elements must
        # not change the value; evaluate the formula manually to check.
        x = siegel.sample("upper_point", m, seed)
        a = siegel.sample("upper_point", m, seed + 1)
        p = siegel.sample("upper_point", m, seed + 2)
        kx = siegel.sample("spo", m, seed + 3)
        ka = siegel.sample("spo", m, seed + 4)
        base = layers.q_distance(x, layers.QHyperplane(a, p))
        gx = siegel.canonical_rep(x).mat @ kx.mat
        ga = siegel.canonical_rep(a).mat @ ka.mat
        p_inv = siegel.canonical_rep(p).inverse().mat
        moved_l = matfun.spd_fun(matfun.sym_part(p_inv @ gx @ gx.mT @ p_inv.mT), "log")
        moved_a = matfun.spd_fun(matfun.sym_part(ga @ ga.mT), "log")
        manual = float(
            (moved_l * moved_a).sum().abs() / torch.linalg.matrix_norm(moved_a)
        )
        assert abs(float(base) - manual) < 1e-8

    def test_degenerate_direction_rejected(self):
        hyp = layers.QHyperplane(siegel.origin(2), siegel.sample("upper_point", 2, 3))
        with pytest.raises(DegenerateHyperplane):
            layers.q_logit(siegel.sample("upper_point", 2, 4), hyp)

    def test_membership_oracle_via_bisection(self):
        # find x on the hyperplane (inner product zero along a raw-space segment)
        # and check the closed-form distance vanishes there
        from siegelnet import diff

        m = 2
        a = siegel.sample("upper_point", m, 31)
        p = siegel.sample("upper_point", m, 32)
        hyp = layers.QHyperplane(a, p)

        def point_at(raw):
            blk = diff.ParamBlock("siegel_point", raw.clone(), m)
            return diff.materialize(blk)

        def side(raw):
            with torch.no_grad():
                x = point_at(raw)
                return float(gyro.inner_S(gyro.oplus(gyro.ominus(p), x), a))

        gen = torch.Generator().manual_seed(77)
        width = m * (m + 1)
        lo = hi = None
        for _ in range(200):
            raw = torch.randn(width, generator=gen, dtype=torch.float64)
            if side(raw) < 0 and lo is None:
                lo = raw
            if side(raw) > 0 and hi is None:
                hi = raw
            if lo is not None and hi is not None:
                break
        assert lo is not None and hi is not None
        for _ in range(200):
            mid = (lo + hi) / 2
            if side(mid) < 0:
                lo = mid
            else:
                hi = mid
        x_star = point_at((lo + hi) / 2)
        assert abs(side((lo + hi) / 2)) < 1e-8
        assert float(layers.q_distance(x_star, hyp)) <= 1e-8


class TestProductQHead:
    def test_zero_at_base(self):
        a = ProductPoint((spd.spd_sample(2, 1), siegel.sample("upper_point", 2, 2)))
        p = ProductPoint((spd.spd_sample(2, 3), siegel.sample("upper_point", 2, 4)))
        hyp = layers.ProductQHyperplane(a, p)
        assert float(layers.q_product_distance(p, hyp)) < 1e-12

    def test_single_factor_reduction_exact(self):
        m = 3
        x = siegel.sample("upper_point", m, 5)
        a = siegel.sample("upper_point", m, 6)
        p = siegel.sample("upper_point", m, 7)
        single_d = layers.q_distance(x, layers.QHyperplane(a, p))
        single_l = layers.q_logit(x, layers.QHyperplane(a, p))
        hyp = layers.ProductQHyperplane(ProductPoint((a,)), ProductPoint((p,)))
        prod_d = layers.q_product_distance(ProductPoint((x,)), hyp)
        prod_l = layers.q_product_logit(ProductPoint((x,)), hyp)
        assert abs(float(single_d) - float(prod_d)) <= 1e-12
        assert abs(float(single_l) - float(prod_l)) <= 1e-12

    def test_two_scalar_factors_hand_value(self):
        # each factor contributes pairing 2 with direction norm sqrt(2):
        # distance = |2 + 2| / sqrt(2 + 2) = 2
        x = ProductPoint((scalar_point(math.e * 1j), scalar_point(math.e * 1j)))
        a = ProductPoint((scalar_point(math.e * 1j), scalar_point(math.e * 1j)))
        p = ProductPoint((scalar_point(1j), scalar_point(1j)))
        hyp = layers.ProductQHyperplane(a, p)
        assert abs(float(layers.q_product_distance(x, hyp)) - 2.0) < 1e-12
        assert abs(float(layers.q_product_logit(x, hyp)) - 4.0) < 1e-12

    def test_signature_mismatch(self):
        a = ProductPoint((siegel.sample("upper_point", 2, 1),))
        hyp = layers.ProductQHyperplane(a, a)
        x = ProductPoint((spd.spd_sample(2, 2),))
        with pytest.raises(ShapeMismatch):
            layers.q_product_logit(x, hyp)


class TestVHead:
    def test_zero_at_base_point(self):
        p = siegel.sample("upper_point", 2, 1)
        hyp = layers.VHyperplane(p, layers.chamber_direction(np.array([0.8, 0.6])), 1.0)
        assert float(layers.v_logit(p, hyp)) < 1e-9

    def test_scalar_hand_value(self):
        hyp = layers.VHyperplane(scalar_point(1j), np.array([1.0]), 1.0)
        assert abs(float(layers.v_logit(scalar_point(math.e * 1j), hyp)) - 1.0) < 1e-12

    def test_scale_multiplies(self):
        hyp = layers.VHyperplane(scalar_point(1j), np.array([1.0]), -2.5)
        assert abs(float(layers.v_logit(scalar_point(math.e * 1j), hyp)) + 2.5) < 1e-12

    def test_bound_property_1000_triples(self):
        total = 0
        for m in (1, 2, 3, 5):
            x = siegel.sample("upper_point", m, 60 + m, batch_shape=(250,))
            p = siegel.sample("upper_point", m, 70 + m, batch_shape=(250,))
            g = torch.Generator().manual_seed(80 + m)
            raw = torch.randn((250, m), generator=g, dtype=torch.float64).abs()
            xi = raw.sort(dim=-1, descending=True).values
            xi = xi / torch.linalg.vector_norm(xi, dim=-1, keepdim=True)
            pairing = (siegel.vvd(x, p) * xi).sum(-1)
            dist = siegel.distance(x, p)
            assert bool((pairing >= 0).all())
            assert float((pairing - dist).max()) <= 1e-10
            total += x.batch_shape[0]
        assert total == 1000

    def test_chamber_validation(self):
        with pytest.raises(InvalidInput):
            layers.chamber_direction(np.array([0.6, 0.8]))  # not descending
        with pytest.raises(InvalidInput):
            layers.chamber_direction(np.array([1.0, -0.1]))  # negative entry
        with pytest.raises(InvalidInput):
            layers.chamber_direction(np.array([1.0, 1.0]))  # not unit norm


class TestFCLayers:
    def test_afc_identity_parameters(self):
        x = siegel.sample("upper_point", 3, 1)
        params = layers.AFCParams(torch.zeros(3, 3, dtype=torch.float64), torch.eye(3, dtype=torch.float64))
        out = layers.afc_forward(x, params)
        assert float((out.x - x.x).abs().max()) < 1e-12

    def test_afc_on_origin_gives_parameter_point(self):
        a = matfun.sym_part(torch.randn(3, 3, dtype=torch.float64))
        b = matfun.sym_exp(matfun.sym_part(torch.randn(3, 3, dtype=torch.float64) * 0.4))
        out = layers.afc_forward(siegel.origin(3), layers.AFCParams(a, b))
        assert float((out.u - a).abs().max()) < 1e-12
        assert float((out.v - b).abs().max()) < 1e-10

    @given(st.integers(2, 5), seeds)
    def test_afc_two_paths_agree(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        g = torch.Generator().manual_seed(seed + 1)
        a = matfun.sym_part(torch.randn((m, m), generator=g, dtype=torch.float64))
        b = matfun.sym_exp(matfun.sym_part(torch.randn((m, m), generator=g, dtype=torch.float64) * 0.5))
        direct = layers.afc_forward(x, layers.AFCParams(a, b))
        ab = siegel.SiegelUpperPoint(torch.complex(a, b))
        action = siegel.symplectic_action(siegel.canonical_rep(ab), x)
        assert float((direct.x - action.x).abs().max()) <= 1e-9

    @given(st.integers(2, 5), seeds)
    def test_afc_closure(self, m, seed):
        x = siegel.sample("upper_point", m, seed, batch_shape=(8,))
        g = torch.Generator().manual_seed(seed + 2)
        a = matfun.sym_part(torch.randn((m, m), generator=g, dtype=torch.float64))
        b = matfun.sym_exp(matfun.sym_part(torch.randn((m, m), generator=g, dtype=torch.float64) * 0.5))
        out = layers.afc_forward(x, layers.AFCParams(a, b))
        assert float(torch.linalg.eigvalsh(out.v).min()) > 0

    def test_dfc_coordinate_projection(self):
        x = siegel.sample("upper_point", 4, 5)
        b = torch.eye(4, dtype=torch.float64)[:, :2]
        params = layers.DFCParams(torch.zeros(2, 2, dtype=torch.float64), b)
        out = layers.dfc_forward(x, params)
        assert float((out.x - x.x[..., :2, :2]).abs().max()) < 1e-12

    def test_dfc_on_origin(self):
        b = matfun.stiefel_qr(torch.randn(5, 3, dtype=torch.float64))
        params = layers.DFCParams(torch.zeros(3, 3, dtype=torch.float64), b)
        out = layers.dfc_forward(siegel.origin(5), params)
        assert float((out.x - siegel.origin(3).x).abs().max()) < 1e-10

    @given(st.integers(2, 5), seeds)
    def test_dfc_closure(self, m, seed):
        x = siegel.sample("upper_point", m + 1, seed, batch_shape=(8,))
        g = torch.Generator().manual_seed(seed + 3)
        b = matfun.stiefel_qr(torch.randn((m + 1, m), generator=g, dtype=torch.float64))
        params = layers.DFCParams(torch.zeros(m, m, dtype=torch.float64), b)
        out = layers.dfc_forward(x, params)
        assert out.m == m
        assert float(torch.linalg.eigvalsh(out.v).min()) > 0

    def test_spd_factor_layers(self):
        p = spd.spd_sample(3, 2)
        b = matfun.sym_exp(matfun.sym_part(torch.randn(3, 3, dtype=torch.float64) * 0.4))
        out = layers.afc_forward_spd(p, layers.SPDAffineParams(b))
        bh = matfun.spd_fun(b, "sqrt")
        assert torch.allclose(out.p, bh @ p.p @ bh, atol=1e-12)
        bs = matfun.stiefel_qr(torch.randn(3, 2, dtype=torch.float64))
        out2 = layers.dfc_forward_spd(p, layers.SPDReduceParams(bs))
        assert torch.allclose(out2.p, bs.mT @ p.p @ bs, atol=1e-12)

    def test_product_fc_forward(self):
        x = ProductPoint((spd.spd_sample(2, 1), siegel.sample("upper_point", 3, 2)))
        b1 = matfun.sym_exp(matfun.sym_part(torch.randn(2, 2, dtype=torch.float64) * 0.3))
        a2 = matfun.sym_part(torch.randn(3, 3, dtype=torch.float64))
        b2 = matfun.sym_exp(matfun.sym_part(torch.randn(3, 3, dtype=torch.float64) * 0.3))
        out = layers.product_fc_forward(
            x, [layers.SPDAffineParams(b1), layers.AFCParams(a2, b2)]
        )
        assert out.signature == x.signature


class TestMlrLogits:
    def test_identical_heads_give_identical_logits(self):
        x = siegel.sample("upper_point", 2, 1)
        a = siegel.sample("upper_point", 2, 2)
        p = siegel.sample("upper_point", 2, 3)
        heads = [layers.QHyperplane(a, p)] * 3
        logits = layers.mlr_logits(x, heads)
        assert logits.shape[-1] == 3
        assert float((logits - logits[..., :1]).abs().max()) < 1e-15

    def test_mirrored_scalar_heads_softmax_identity(self):
        x = scalar_point(2.5j)
        p = scalar_point(1j)
        h_pos = layers.QHyperplane(scalar_point(math.e * 1j), p)
        h_neg = layers.QHyperplane(scalar_point(1j / math.e), p)
        logits = layers.mlr_logits(x, [h_pos, h_neg])
        ell = float(logits[0])
        assert abs(float(logits[1]) + ell) < 1e-12
        probs = torch.softmax(logits, dim=-1)
        assert abs(float(probs[0]) - 1.0 / (1.0 + math.exp(-2 * ell))) < 1e-12

    def test_argmax_at_class_base_points(self):
        # heads constructed so every other class scores negative at p_j
        p0, p1 = scalar_point(1j), scalar_point(math.e**2 * 1j)
        h0 = layers.QHyperplane(scalar_point(1j / math.e), p0)
        h1 = layers.QHyperplane(scalar_point(math.e * 1j), p1)
        logits_at_p0 = layers.mlr_logits(p0, [h0, h1])
        logits_at_p1 = layers.mlr_logits(p1, [h0, h1])
        assert int(logits_at_p0.argmax()) == 0
        assert int(logits_at_p1.argmax()) == 1

    def test_mixed_head_kinds_rejected(self):
        x = siegel.sample("upper_point", 2, 1)
        a = siegel.sample("upper_point", 2, 2)
        p = siegel.sample("upper_point", 2, 3)
        q_head = layers.QHyperplane(a, p)
        v_head = layers.VHyperplane(p, layers.chamber_direction(np.array([1.0, 0.0])), 1.0)
        with pytest.raises(ConfigError):
            layers.mlr_logits(x, [q_head, v_head])

    def test_single_head_rejected(self):
        x = siegel.sample("upper_point", 2, 1)
        with pytest.raises(ConfigError):
            layers.mlr_logits(x, [scalar_hyperplane()])
