import numpy as np
import pytest
import torch

from siegelnet import siegel
from siegelnet.data import graph
from siegelnet.errors import ConfigError, DegenerateInput


class TestCosineGraph:
    def test_identical_features_floored(self):
        d = graph.cosine_graph(np.array([[1.0, 0.0], [2.0, 0.0]]))
        assert d[0, 1] == pytest.approx(graph.COSINE_FLOOR)
        assert d[0, 0] == 0.0

    def test_orthogonal_features(self):
        d = graph.cosine_graph(np.array([[1.0, 0.0], [0.0, 3.0]]))
        assert d[0, 1] == pytest.approx(1.0)

    def test_opposite_features(self):
        d = graph.cosine_graph(np.array([[1.0, 0.0], [-2.0, 0.0]]))
        assert d[0, 1] == pytest.approx(2.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(DegenerateInput):
            graph.cosine_graph(np.array([[0.0, 0.0], [1.0, 0.0]]))

    def test_symmetric_zero_diagonal(self):
        rng = np.random.default_rng(0)
        d = graph.cosine_graph(rng.standard_normal((10, 4)))
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)


class TestEmbedGraph:
    def test_two_nodes_exact_fit(self):
        cfg = graph.GraphEmbeddingConfig(m=1, epochs=800, lr=2e-2, seed=3)
        res = graph.embed_graph([[0.0, 1.0], [1.0, 0.0]], cfg)
        d = float(
            siegel.distance(res.points.take(torch.tensor([0])), res.points.take(torch.tensor([1])))
        )
        assert abs(d - 1.0) < 0.01
        assert res.avg_distortion < 0.01

    def test_three_nodes_equilateral(self):
        dist = np.ones((3, 3)) - np.eye(3)
        cfg = graph.GraphEmbeddingConfig(m=2, epochs=800, lr=2e-2, seed=1)
        res = graph.embed_graph(dist, cfg)
        pts = res.points
        pairs = [(0, 1), (0, 2), (1, 2)]
        ds = [
            float(siegel.distance(pts.take(torch.tensor([i])), pts.take(torch.tensor([j]))))
            for i, j in pairs
        ]
        assert (max(ds) - min(ds)) / max(ds) < 0.05

    def test_deterministic(self):
        dist = graph.cosine_graph(np.random.default_rng(5).standard_normal((8, 3)))
        cfg = graph.GraphEmbeddingConfig(m=2, epochs=50, lr=3e-2, seed=9)
        r1 = graph.embed_graph(dist, cfg)
        r2 = graph.embed_graph(dist, cfg)
        assert torch.equal(r1.points.x, r2.points.x)
        assert r1.loss_trace == r2.loss_trace

    def test_invalid_distance_matrix(self):
        with pytest.raises(DegenerateInput):
            graph.embed_graph([[0.0, 1.0], [1.0, 0.1]], graph.GraphEmbeddingConfig())
        with pytest.raises(DegenerateInput):
            graph.embed_graph([[0.0, 0.0], [0.0, 0.0]], graph.GraphEmbeddingConfig())

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            graph.GraphEmbeddingConfig(m=0)
        with pytest.raises(ConfigError):
            graph.GraphEmbeddingConfig(lr=0.0)
        with pytest.raises(ConfigError):
            graph.GraphEmbeddingConfig.from_dict({"m": 2, "bogus": 1})
