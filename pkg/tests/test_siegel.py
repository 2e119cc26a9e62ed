import math

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from siegelnet import matfun, siegel, spd
from siegelnet.errors import InvalidInput, NotPositiveDefinite, NumericalOverflow, ShapeMismatch

seeds = st.integers(0, 2**31 - 1)
dims = st.integers(1, 5)


def scalar_point(value) -> siegel.SiegelUpperPoint:
    return siegel.SiegelUpperPoint(np.array([[value]], dtype=complex))


class TestPointTypes:
    def test_constructor_symmetrizes(self):
        x = siegel.SiegelUpperPoint(np.array([[1j, 1.0], [0.0, 1j]]))
        assert torch.allclose(x.u, torch.tensor([[0.0, 0.5], [0.5, 0.0]], dtype=torch.float64))

    def test_rejects_indefinite_imaginary_part(self):
        with pytest.raises(NotPositiveDefinite):
            siegel.SiegelUpperPoint(np.array([[1.0 - 1j]]))

    def test_disk_point_rejects_boundary(self):
        with pytest.raises(InvalidInput):
            siegel.SiegelDiskPoint(np.array([[1.0 + 0j]]))

    def test_symplectic_validation(self):
        bad = torch.eye(4, dtype=torch.float64)
        bad[0, 0] = 2.0
        with pytest.raises(InvalidInput):
            siegel.SymplecticMatrix(bad)

    def test_symplectic_inverse(self):
        s = siegel.sample("symplectic", 3, 5)
        eye = torch.eye(6, dtype=torch.float64)
        assert float((s.mat @ s.inverse().mat - eye).abs().max()) < 1e-10


class TestCayley:
    def test_origin_maps_to_zero(self):
        w = siegel.cayley(siegel.origin(3))
        assert float(w.w.abs().max()) == 0.0

    def test_scalar_hand_value(self):
        w = siegel.cayley(scalar_point(2j))
        assert abs(complex(w.w[0, 0]) - (1.0 / 3.0)) < 1e-15

    def test_inverse_scalar_hand_value(self):
        x = siegel.inverse_cayley(siegel.SiegelDiskPoint(np.array([[1.0 / 3.0 + 0j]])))
        assert abs(complex(x.x[0, 0]) - 2j) < 1e-15

    def test_zero_maps_to_origin(self):
        x = siegel.inverse_cayley(siegel.SiegelDiskPoint(np.zeros((2, 2), dtype=complex)))
        assert torch.allclose(x.x, siegel.origin(2).x)

    @given(dims, seeds)
    def test_round_trip(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        back = siegel.inverse_cayley(siegel.cayley(x))
        assert float((back.x - x.x).abs().max()) < 1e-9

    @given(dims, seeds)
    def test_disk_round_trip_and_validity(self, m, seed):
        w = siegel.sample("disk_point", m, seed)
        x = siegel.inverse_cayley(w)
        assert float(torch.linalg.eigvalsh(x.v).min()) > 0
        again = siegel.cayley(x)
        assert float((again.w - w.w).abs().max()) < 1e-9


class TestCanonicalRep:
    def test_origin_gives_identity(self):
        rep = siegel.canonical_rep(siegel.origin(2))
        assert torch.allclose(rep.mat, torch.eye(4, dtype=torch.float64))

    def test_scalar_hand_value(self):
        rep = siegel.canonical_rep(scalar_point(1 + 4j))
        expect = torch.tensor([[2.0, 0.5], [0.0, 0.5]], dtype=torch.float64)
        assert torch.allclose(rep.mat, expect)

    @given(dims, seeds)
    def test_action_on_origin_recovers_point(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        out = siegel.symplectic_action(siegel.canonical_rep(x), siegel.origin(m))
        assert float((out.x - x.x).abs().max()) < 1e-9


class TestSymplecticAction:
    def test_identity_action(self):
        x = siegel.sample("upper_point", 3, 0)
        out = siegel.symplectic_action(siegel.SymplecticMatrix(torch.eye(6, dtype=torch.float64)), x)
        assert torch.allclose(out.x, x.x)

    def test_left_action_composition(self):
        m = 3
        s1 = siegel.sample("symplectic", m, 1)
        s2 = siegel.sample("symplectic", m, 2)
        x = siegel.sample("upper_point", m, 3)
        lhs = siegel.symplectic_action(s1 @ s2, x)
        rhs = siegel.symplectic_action(s1, siegel.symplectic_action(s2, x))
        assert float((lhs.x - rhs.x).abs().max()) < 1e-8

    @given(dims, seeds)
    def test_isometry(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        y = siegel.sample("upper_point", m, seed + 1)
        s = siegel.sample("symplectic", m, seed + 2)
        d0 = siegel.distance(x, y)
        d1 = siegel.distance(siegel.symplectic_action(s, x), siegel.symplectic_action(s, y))
        assert float((d0 - d1).abs()) < 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatch):
            siegel.symplectic_action(siegel.sample("symplectic", 2, 0), siegel.origin(3))


class TestCrossRatio:
    def test_same_point_zero(self):
        x = siegel.sample("upper_point", 3, 4)
        assert float(siegel.cross_ratio(x, x).abs().max()) < 1e-12

    def test_scalar_hand_value(self):
        a = 3.0
        r = siegel.cross_ratio(scalar_point(1j), scalar_point(a * 1j))
        expect = ((1 - a) / (1 + a)) ** 2
        assert abs(complex(r[0, 0]) - expect) < 1e-14

    @given(dims, seeds)
    def test_spectrum_real_in_unit_interval(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        y = siegel.sample("upper_point", m, seed + 9)
        ev = torch.linalg.eigvals(siegel.cross_ratio(x, y))
        assert float(ev.imag.abs().max()) < 1e-8
        assert float(ev.real.min()) > -1e-10
        assert float(ev.real.max()) < 1.0

    @given(dims, seeds)
    def test_hermitian_route_matches_general_eig(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        y = siegel.sample("upper_point", m, seed + 9)
        general = torch.linalg.eigvals(siegel.cross_ratio(x, y)).real.sort(dim=-1).values
        trick = siegel.cross_ratio_eigs(x, y)
        assert float((general - trick).abs().max()) < 1e-8


class TestVvd:
    def test_zero_at_same_point(self):
        x = siegel.sample("upper_point", 4, 6)
        assert float(siegel.vvd(x, x).abs().max()) < 1e-9

    def test_scaled_origin_hand_value(self):
        x = siegel.origin(2)
        y = siegel.SiegelUpperPoint(np.eye(2) * math.e * 1j)
        assert torch.allclose(siegel.vvd(x, y), torch.ones(2, dtype=torch.float64), atol=1e-12)

    @given(dims, seeds)
    def test_symmetry_and_sorting(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        y = siegel.sample("upper_point", m, seed + 17)
        v1 = siegel.vvd(x, y)
        v2 = siegel.vvd(y, x)
        assert float((v1 - v2).abs().max()) < 1e-9
        assert bool((v1[..., :-1] >= v1[..., 1:] - 1e-12).all())
        assert bool((v1 >= 0).all())

    def test_norm_is_distance(self):
        x = siegel.sample("upper_point", 3, 8)
        y = siegel.sample("upper_point", 3, 9)
        assert float(
            (torch.linalg.vector_norm(siegel.vvd(x, y)) - siegel.distance(x, y)).abs()
        ) == 0.0

    def test_near_boundary_overflows(self):
        x = siegel.origin(1)
        y = scalar_point(1e20j)
        with pytest.raises(NumericalOverflow):
            siegel.vvd(x, y)


class TestDistance:
    def test_scaled_identity_formula(self):
        for m in (1, 2, 4):
            for a in (2.0, math.e, 7.5):
                d = siegel.distance(
                    siegel.origin(m), siegel.SiegelUpperPoint(np.eye(m) * a * 1j)
                )
                assert abs(float(d) - math.sqrt(m) * math.log(a)) < 1e-12

    @given(dims, seeds)
    def test_triangle_inequality(self, m, seed):
        x = siegel.sample("upper_point", m, seed)
        y = siegel.sample("upper_point", m, seed + 1)
        z = siegel.sample("upper_point", m, seed + 2)
        assert float(siegel.distance(x, z)) <= float(
            siegel.distance(x, y) + siegel.distance(y, z)
        ) + 1e-8

    @given(dims, seeds)
    def test_airm_restriction(self, m, seed):
        v1 = spd.spd_sample(m, seed)
        v2 = spd.spd_sample(m, seed + 5)
        emb = siegel.distance(
            siegel.SiegelUpperPoint(1j * v1.p.to(torch.complex128)),
            siegel.SiegelUpperPoint(1j * v2.p.to(torch.complex128)),
        )
        assert abs(float(emb) - float(spd.spd_distance(v1, v2))) < 1e-8


class TestSample:
    @pytest.mark.parametrize("kind", ["upper_point", "disk_point", "symplectic", "spo"])
    def test_deterministic(self, kind):
        a = siegel.sample(kind, 3, 42)
        b = siegel.sample(kind, 3, 42)
        ta = a.x if hasattr(a, "x") else (a.w if hasattr(a, "w") else a.mat)
        tb = b.x if hasattr(b, "x") else (b.w if hasattr(b, "w") else b.mat)
        assert torch.equal(ta, tb)

    def test_spo_is_orthogonal_and_symplectic(self):
        k = siegel.sample("spo", 4, 11)
        eye = torch.eye(8, dtype=torch.float64)
        assert float((k.mat.mT @ k.mat - eye).abs().max()) < 1e-10

    def test_spo_stabilizes_origin(self):
        k = siegel.sample("spo", 3, 13)
        out = siegel.symplectic_action(k, siegel.origin(3))
        assert float((out.x - siegel.origin(3).x).abs().max()) < 1e-9

    def test_batch_shapes(self):
        x = siegel.sample("upper_point", 2, 3, batch_shape=(5,))
        assert x.batch_shape == (5,)
        assert siegel.distance(x, x).shape == (5,)
