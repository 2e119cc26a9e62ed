import numpy as np
import pytest
import torch

from siegelnet import baselines, siegel
from siegelnet.data import radar
from siegelnet.errors import ConfigError, DegenerateInput
from siegelnet.gyro import ProductPoint
from siegelnet.siegel import SiegelDiskPoint


def small_config(**overrides):
    base = dict(m=2, q=2, n_classes=2, n_samples=8, series_length=100, separation=1.0, seed=0)
    base.update(overrides)
    return radar.ARDatasetConfig(**base)


class TestConfig:
    @pytest.mark.parametrize(
        "bad",
        [
            {"m": 0},
            {"q": 1},
            {"n_classes": 1},
            {"n_samples": 1},
            {"series_length": 2},
            {"separation": -0.5},
        ],
    )
    def test_invariants(self, bad):
        with pytest.raises(ConfigError):
            small_config(**bad)

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ConfigError):
            radar.ARDatasetConfig.from_dict({"m": 2, "qq": 2})

    def test_from_dict_rejects_missing(self):
        with pytest.raises(ConfigError):
            radar.ARDatasetConfig.from_dict({"m": 2})


class TestLevinson:
    def test_scalar_ar1_yule_walker(self):
        # u_n + c1 u_{n-1} = v_n: lag-1 autocorrelation equals -c1
        omega = np.array([[0.5 + 0.2j]])
        coeffs, innov = radar.levinson_from_reflections(np.array([[1.0 + 0j]]), [omega])
        rng = np.random.default_rng(0)
        u = radar.simulate_var(coeffs, innov, 4000, 20, rng)
        rho1 = (u[1:, 0] * np.conj(u[:-1, 0])).mean() / np.mean(np.abs(u[:, 0]) ** 2)
        assert abs(rho1 - (-coeffs[0][0, 0])) < 0.05

    def test_contractions_give_stable_filters(self):
        rng = np.random.default_rng(3)
        m = 3
        omegas = []
        for _ in range(2):
            w = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
            w = (w + w.T) / 2
            w *= 0.4 / np.linalg.norm(w, 2)
            omegas.append(w)
        coeffs, innov = radar.levinson_from_reflections(np.eye(m, dtype=complex), omegas)
        # companion-matrix spectral radius < 1 means the AR filter is stable
        p = len(coeffs)
        comp = np.zeros((m * p, m * p), dtype=complex)
        comp[:m, :] = -np.concatenate(coeffs, axis=1)
        if p > 1:
            comp[m:, :-m] = np.eye(m * (p - 1))
        assert np.abs(np.linalg.eigvals(comp)).max() < 1.0
        assert np.linalg.eigvalsh(innov).min() > 0

    def test_round_trip_known_reflections(self):
        # simulate from known reflections, re-estimate within 0.1 spectral norm
        rng = np.random.default_rng(5)
        m = 2
        omega = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        omega = (omega + omega.T) / 2
        omega *= 0.5 / np.linalg.norm(omega, 2)
        coeffs, innov = radar.levinson_from_reflections(np.eye(m, dtype=complex), [omega])
        u = radar.simulate_var(coeffs, innov, 4000, 50, rng)
        r0_hat, omegas_hat = radar.burg_reflections(u, 1)
        assert np.linalg.norm(omegas_hat[0] - omega, 2) < 0.1
        assert np.linalg.norm(r0_hat - np.eye(m), 2) < 0.2

    def test_white_noise_reflections_near_zero(self):
        rng = np.random.default_rng(7)
        u = (rng.standard_normal((4000, 2)) + 1j * rng.standard_normal((4000, 2))) / np.sqrt(2)
        r0, omegas = radar.burg_reflections(u, 1)
        assert np.linalg.norm(omegas[0], 2) < 0.1
        assert np.abs(r0 - np.eye(2)).max() < 0.1


class TestSimulate:
    def test_deterministic(self):
        cfg = small_config()
        s1, l1 = radar.simulate_ar(cfg)
        s2, l2 = radar.simulate_ar(cfg)
        assert np.array_equal(l1, l2)
        for a, b in zip(s1, s2):
            assert np.array_equal(a, b)

    def test_shapes_and_balanced_labels(self):
        cfg = small_config(n_samples=10)
        series, labels = radar.simulate_ar(cfg)
        assert len(series) == 10
        assert series[0].shape == (cfg.series_length, cfg.m)
        assert np.bincount(labels).tolist() == [5, 5]

    def test_zero_separation_classes_identical_in_distribution(self):
        cfg = small_config(separation=0.0, n_samples=40, series_length=80)
        ds = radar.build_radar_dataset(cfg)
        tr_in, tr_lab = ds.train_split()
        te_in, te_lab = ds.test_split()
        acc = baselines.knn_accuracy(tr_in, tr_lab, te_in, te_lab, k=3)
        assert abs(acc - 0.5) < 0.35  # near chance for a 2-class null


class TestBurgParameterize:
    def test_valid_sample_structure(self):
        cfg = small_config()
        series, labels = radar.simulate_ar(cfg)
        sample = radar.burg_parameterize(series[0], cfg.q, label=int(labels[0]))
        assert sample.p0.shape == (cfg.m, cfg.m)
        assert len(sample.reflections) == cfg.q - 1
        assert all(isinstance(w, SiegelDiskPoint) for w in sample.reflections)

    def test_short_series_rejected(self):
        with pytest.raises(DegenerateInput):
            radar.burg_parameterize(np.zeros((7, 2), dtype=complex) + 1.0, 2)

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateInput):
            radar.burg_parameterize(np.zeros((100, 2), dtype=complex), 2)

    def test_p0_of_unit_white_noise_near_identity(self):
        rng = np.random.default_rng(11)
        u = (rng.standard_normal((4000, 3)) + 1j * rng.standard_normal((4000, 3))) / np.sqrt(2)
        sample = radar.burg_parameterize(u, 2)
        assert float((sample.p0 - torch.eye(3, dtype=torch.complex128)).abs().max()) < 0.1


class TestToNetworkInput:
    def test_zero_reflection_maps_to_origin(self):
        sample = radar.RadarSample(
            p0=torch.eye(2, dtype=torch.complex128),
            reflections=[SiegelDiskPoint(np.zeros((2, 2), dtype=complex))],
            label=0,
        )
        point = radar.to_network_input(sample)
        assert point.signature == (("spd", 2), ("siegel", 2))
        assert float((point.factors[1].x - siegel.origin(2).x).abs().max()) < 1e-12

    def test_real_p0_passes_through(self):
        p0 = torch.tensor([[2.0, 0.5], [0.5, 1.0]], dtype=torch.complex128)
        sample = radar.RadarSample(
            p0=p0, reflections=[SiegelDiskPoint(np.zeros((2, 2), dtype=complex))], label=1
        )
        point = radar.to_network_input(sample)
        assert torch.allclose(point.factors[0].p, p0.real)

    def test_pipeline_yields_valid_product_points(self):
        cfg = small_config(n_samples=12)
        series, labels = radar.simulate_ar(cfg)
        ok = 0
        for s, lbl in zip(series, labels):
            point = radar.to_network_input(radar.burg_parameterize(s, cfg.q, label=int(lbl)))
            ok += int(isinstance(point, ProductPoint))
        assert ok == len(series)

    @pytest.mark.parametrize("m", [3, 4, 5, 6])
    def test_pipeline_valid_across_dimension_family(self, m):
        # scaled-down versions of the benchmark shape family
        cfg = radar.ARDatasetConfig(
            m=m, q=2, n_classes=3, n_samples=6, series_length=90, separation=1.0, seed=m
        )
        series, labels = radar.simulate_ar(cfg)
        expected = (("spd", m), ("siegel", m))
        for s, lbl in zip(series, labels):
            point = radar.to_network_input(radar.burg_parameterize(s, cfg.q, label=int(lbl)))
            assert point.signature == expected


class TestDatasetBuild:
    def test_split_is_stratified_and_disjoint(self):
        cfg = small_config(n_samples=20)
        ds = radar.build_radar_dataset(cfg, test_fraction=0.5)
        tr = set(ds.train_idx.tolist())
        te = set(ds.test_idx.tolist())
        assert not (tr & te)
        assert tr | te == set(range(20))
        assert torch.bincount(ds.labels[ds.train_idx]).tolist() == [5, 5]

    def test_knn_monotone_in_separation(self):
        accs = []
        for sep in (0.0, 0.8, 2.0):
            cfg = radar.ARDatasetConfig(
                m=2, q=2, n_classes=2, n_samples=80, series_length=96, separation=sep, seed=9
            )
            ds = radar.build_radar_dataset(cfg)
            tr_in, tr_lab = ds.train_split()
            te_in, te_lab = ds.test_split()
            accs.append(baselines.knn_accuracy(tr_in, tr_lab, te_in, te_lab, k=5))
        assert accs[0] <= accs[1] + 0.05
        assert accs[1] <= accs[2] + 0.05

    def test_knn_separable_dataset_above_80_percent(self):
        cfg = radar.ARDatasetConfig(
            m=2, q=2, n_classes=2, n_samples=120, series_length=96, separation=3.0, seed=5
        )
        ds = radar.build_radar_dataset(cfg)
        tr_in, tr_lab = ds.train_split()
        te_in, te_lab = ds.test_split()
        assert baselines.knn_accuracy(tr_in, tr_lab, te_in, te_lab, k=5) >= 0.8

    def test_knn_self_neighbor_is_perfect(self):
        cfg = small_config(n_samples=12)
        ds = radar.build_radar_dataset(cfg)
        acc = baselines.knn_accuracy(ds.inputs, ds.labels, ds.inputs, ds.labels, k=1)
        assert acc == 1.0
