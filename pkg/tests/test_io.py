import numpy as np
import pytest
import torch

from siegelnet import diff
from siegelnet.data import io as dio
from siegelnet.data import radar
from siegelnet.errors import FormatError


@pytest.fixture
def radar_ds():
    cfg = radar.ARDatasetConfig(
        m=2, q=2, n_classes=2, n_samples=8, series_length=80, separation=1.0, seed=2
    )
    return radar.build_radar_dataset(cfg)


class TestContainer:
    def test_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {
            "real": rng.standard_normal((3, 4)),
            "cplx": rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)),
            "ints": np.arange(5),
        }
        path = tmp_path / "blob.sgl"
        dio.write_container(path, {"kind": "test", "note": "hi"}, arrays)
        manifest, loaded = dio.read_container(path)
        assert manifest["note"] == "hi"
        for name, arr in arrays.items():
            assert loaded[name].tobytes() == np.ascontiguousarray(arr).tobytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.sgl"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(FormatError, match="magic"):
            dio.read_container(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "trunc.sgl"
        dio.write_container(path, {"kind": "test"}, {"a": np.ones(4)})
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(FormatError, match="truncated|byte"):
            dio.read_container(path)

    def test_wrong_record_size(self, tmp_path):
        path = tmp_path / "size.sgl"
        dio.write_container(path, {"kind": "test"}, {"a": np.ones(4)})
        raw = bytearray(path.read_bytes())
        # corrupt the record byte-count header (last 8 bytes before the payload)
        idx = len(raw) - 4 * 8 - 8
        raw[idx : idx + 8] = (7).to_bytes(8, "little")
        path.write_bytes(bytes(raw))
        with pytest.raises(FormatError, match="bytes"):
            dio.read_container(path)

    def test_trailing_garbage(self, tmp_path):
        path = tmp_path / "trail.sgl"
        dio.write_container(path, {"kind": "test"}, {"a": np.ones(2)})
        path.write_bytes(path.read_bytes() + b"xx")
        with pytest.raises(FormatError, match="trailing"):
            dio.read_container(path)


class TestDatasetFiles:
    def test_round_trip_bitwise(self, tmp_path, radar_ds):
        path = tmp_path / "ds.sgl"
        dio.save_dataset(path, radar_ds)
        loaded = dio.load_dataset(path)
        assert loaded.signature == radar_ds.signature
        assert torch.equal(loaded.labels, radar_ds.labels)
        assert torch.equal(loaded.train_idx, radar_ds.train_idx)
        for f1, f2 in zip(radar_ds.inputs.factors, loaded.inputs.factors):
            a = f1.p if hasattr(f1, "p") else f1.x
            b = f2.p if hasattr(f2, "p") else f2.x
            assert torch.equal(a, b)

    def test_embeddings_kind_round_trip(self, tmp_path, radar_ds):
        import siegelnet.siegel as siegel
        from siegelnet.gyro import ProductPoint

        pts = siegel.sample("upper_point", 2, 4, (6,))
        ds = dio.ClassifierDataset(
            inputs=ProductPoint((pts,)),
            labels=torch.arange(6) % 2,
            train_idx=torch.arange(3),
            test_idx=torch.arange(3, 6),
            seed=4,
            meta={"avg_distortion": 0.1},
        )
        path = tmp_path / "emb.sgl"
        dio.save_dataset(path, ds, kind="embeddings")
        loaded = dio.load_dataset(path)
        assert torch.equal(loaded.inputs.factors[0].x, pts.x)
        assert loaded.meta["avg_distortion"] == 0.1

    def test_wrong_kind_rejected(self, tmp_path, radar_ds):
        path = tmp_path / "ds.sgl"
        dio.save_dataset(path, radar_ds)
        blocks = {"w": diff.new_block("sym", 2, seed=0)}
        ckpt = tmp_path / "ck.sgl"
        dio.save_checkpoint(ckpt, blocks)
        with pytest.raises(FormatError, match="kind"):
            dio.load_dataset(ckpt)


class TestCheckpointFiles:
    def test_round_trip(self, tmp_path):
        blocks = {
            "head_a": diff.new_block("siegel_point", 2, (3,), seed=1, noise=0.1),
            "fc_b": diff.new_block("spd", 2, seed=2, noise=0.1),
            "xi": diff.new_block("chamber", 2, (3,), seed=3, noise=0.1),
            "st": diff.new_block("stiefel", (4, 2), seed=4),
            "prod": diff.new_block("product_point", (("spd", 2), ("siegel", 2)), seed=5, noise=0.1),
        }
        path = tmp_path / "ck.sgl"
        dio.save_checkpoint(path, blocks, meta={"model": "test"})
        loaded, meta = dio.load_checkpoint(path)
        assert meta == {"model": "test"}
        assert set(loaded) == set(blocks)
        for name in blocks:
            assert loaded[name].kind == blocks[name].kind
            assert loaded[name].dims == blocks[name].dims
            assert torch.equal(loaded[name].raw.detach(), blocks[name].raw.detach())
            # materialization works after reload
            diff.materialize(loaded[name])
