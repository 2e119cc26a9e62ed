import math

import numpy as np
import pytest
import torch
from hypothesis import given
from hypothesis import strategies as st

from siegelnet import matfun, spd
from siegelnet.errors import NotPositiveDefinite, ShapeMismatch

seeds = st.integers(0, 2**31 - 1)


class TestSpdDistance:
    def test_zero_at_same_point(self):
        p = spd.spd_sample(3, 1)
        assert float(spd.spd_distance(p, p)) < 1e-12

    def test_scaled_identity(self):
        for m in (1, 3):
            for a in (0.5, 2.0, math.e):
                d = spd.spd_distance(
                    spd.spd_origin(m), spd.SPDPoint(np.eye(m) * a)
                )
                assert abs(float(d) - math.sqrt(m) * abs(math.log(a))) < 1e-12

    @given(st.integers(1, 5), seeds)
    def test_congruence_invariance(self, m, seed):
        g = torch.Generator().manual_seed(seed)
        a = torch.randn((m, m), generator=g, dtype=torch.float64) + 2 * torch.eye(
            m, dtype=torch.float64
        )
        p = spd.spd_sample(m, seed + 1)
        q = spd.spd_sample(m, seed + 2)
        base = spd.spd_distance(p, q)
        moved = spd.spd_distance(
            spd.SPDPoint(a @ p.p @ a.mT), spd.SPDPoint(a @ q.p @ a.mT)
        )
        assert abs(float(base) - float(moved)) < 1e-8

    def test_symmetry(self):
        p, q = spd.spd_sample(4, 3), spd.spd_sample(4, 4)
        assert abs(float(spd.spd_distance(p, q)) - float(spd.spd_distance(q, p))) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatch):
            spd.spd_distance(spd.spd_origin(2), spd.spd_origin(3))


class TestCanonicalRep:
    def test_identity(self):
        assert torch.allclose(
            spd.spd_canonical_rep(spd.spd_origin(3)), torch.eye(3, dtype=torch.float64)
        )

    def test_diagonal(self):
        rep = spd.spd_canonical_rep(spd.SPDPoint(np.diag([4.0, 9.0])))
        assert torch.allclose(rep, torch.diag(torch.tensor([2.0, 3.0], dtype=torch.float64)))

    @given(st.integers(1, 5), seeds)
    def test_gram_recovers_point(self, m, seed):
        p = spd.spd_sample(m, seed)
        g = spd.spd_canonical_rep(p)
        assert matfun.rel_error(g @ g.mT, p.p) < 1e-9


class TestSample:
    def test_deterministic(self):
        assert torch.equal(spd.spd_sample(3, 5).p, spd.spd_sample(3, 5).p)

    def test_positive_definite(self):
        p = spd.spd_sample(5, 9)
        assert float(torch.linalg.eigvalsh(p.p).min()) > 0

    def test_validation_rejects_semidefinite(self):
        with pytest.raises(NotPositiveDefinite):
            spd.SPDPoint(np.diag([1.0, 0.0]))
