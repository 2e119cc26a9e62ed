"""Single-file container for datasets, checkpoints, and embeddings.

Layout: an 8-byte magic, a little-endian u64 manifest length, a UTF-8 JSON
manifest (human-readable; carries schema_version, kind, signature, labels
metadata, split, seed, and the array directory with explicit dtypes/shapes),
followed by one binary record per array: a little-endian u64 byte count and
the raw little-endian C-order payload.  Complex matrices are stored as
complex128, i.e. interleaved (re, im) float64 pairs.  Round trips are bitwise
for float64/complex128 payloads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
import torch

from ..diff import ParamBlock
from ..errors import FormatError
from ..gyro import ProductPoint
from ..siegel import SiegelUpperPoint
from ..spd import SPDPoint

MAGIC = b"SGLCNTR1"
SCHEMA_VERSION = 1

_DTYPES = {"<f8": np.dtype("<f8"), "<c16": np.dtype("<c16"), "<i8": np.dtype("<i8")}


def write_container(path, meta: dict, arrays: Dict[str, np.ndarray]) -> None:
    """Write a manifest + binary records container; arrays keep insertion order."""
    directory = []
    payloads = []
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if arr.dtype.kind == "c":
            arr = arr.astype("<c16")
            code = "<c16"
        elif arr.dtype.kind in "iub":
            arr = arr.astype("<i8")
            code = "<i8"
        else:
            arr = arr.astype("<f8")
            code = "<f8"
        directory.append({"name": name, "dtype": code, "shape": list(arr.shape)})
        payloads.append(np.ascontiguousarray(arr).tobytes())
    manifest = dict(meta)
    manifest.setdefault("schema_version", SCHEMA_VERSION)
    manifest["arrays"] = directory
    blob = json.dumps(manifest, indent=2, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        for payload in payloads:
            fh.write(len(payload).to_bytes(8, "little"))
            fh.write(payload)


def read_container(path) -> Tuple[dict, Dict[str, np.ndarray]]:
    """Read a container; raises FormatError with the offending location."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16 or data[:8] != MAGIC:
        raise FormatError(f"{path}: bad magic at byte 0 (not a container file)")
    man_len = int.from_bytes(data[8:16], "little")
    if 16 + man_len > len(data):
        raise FormatError(f"{path}: manifest length {man_len} at byte 8 exceeds file size")
    try:
        manifest = json.loads(data[16 : 16 + man_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise FormatError(f"{path}: manifest bytes 16..{16 + man_len}: {err}") from err
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(
            f"{path}: unsupported schema_version {manifest.get('schema_version')!r}"
        )
    if "arrays" not in manifest or not isinstance(manifest["arrays"], list):
        raise FormatError(f"{path}: manifest lacks an 'arrays' directory")
    offset = 16 + man_len
    arrays: Dict[str, np.ndarray] = {}
    for entry in manifest["arrays"]:
        name = entry.get("name", "<unnamed>")
        code = entry.get("dtype")
        if code not in _DTYPES:
            raise FormatError(f"{path}: array {name!r}: unsupported dtype {code!r}")
        shape = tuple(entry.get("shape", ()))
        if offset + 8 > len(data):
            raise FormatError(f"{path}: truncated before record header of {name!r} at {offset}")
        nbytes = int.from_bytes(data[offset : offset + 8], "little")
        offset += 8
        expected = int(np.prod(shape, dtype=np.int64)) * _DTYPES[code].itemsize
        if nbytes != expected:
            raise FormatError(
                f"{path}: array {name!r} at byte {offset - 8}: header says {nbytes} bytes, "
                f"shape {shape} needs {expected}"
            )
        if offset + nbytes > len(data):
            raise FormatError(f"{path}: truncated payload of {name!r} at byte {offset}")
        arrays[name] = np.frombuffer(data[offset : offset + nbytes], dtype=_DTYPES[code]).reshape(
            shape
        ).copy()
        offset += nbytes
    if offset != len(data):
        raise FormatError(f"{path}: {len(data) - offset} trailing bytes after last array")
    return manifest, arrays


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------

@dataclass
class ClassifierDataset:
    """Batched network inputs with labels and a frozen train/test split."""

    inputs: ProductPoint
    labels: torch.Tensor
    train_idx: torch.Tensor
    test_idx: torch.Tensor
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def signature(self):
        return self.inputs.signature

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1

    def train_split(self):
        return self.inputs.take(self.train_idx), self.labels[self.train_idx]

    def test_split(self):
        return self.inputs.take(self.test_idx), self.labels[self.test_idx]


def save_dataset(path, ds: ClassifierDataset, kind: str = "dataset") -> None:
    arrays: Dict[str, np.ndarray] = {}
    for j, factor in enumerate(ds.inputs.factors):
        if isinstance(factor, SPDPoint):
            arrays[f"factor{j}"] = factor.p.detach().numpy()
        else:
            arrays[f"factor{j}"] = factor.x.detach().numpy()
    arrays["labels"] = ds.labels.numpy()
    arrays["train_idx"] = ds.train_idx.numpy()
    arrays["test_idx"] = ds.test_idx.numpy()
    meta = {
        "kind": kind,
        "signature": [list(entry) for entry in ds.signature],
        "split": {"train": int(ds.train_idx.numel()), "test": int(ds.test_idx.numel())},
        "seed": ds.seed,
        "labels": {"n_classes": ds.n_classes, "count": int(ds.labels.numel())},
        "meta": ds.meta,
    }
    write_container(path, meta, arrays)


def load_dataset(path) -> ClassifierDataset:
    manifest, arrays = read_container(path)
    kind = manifest.get("kind")
    if kind not in ("dataset", "embeddings"):
        raise FormatError(f"{path}: kind {kind!r} is not a dataset container")
    try:
        signature = [tuple(entry) for entry in manifest["signature"]]
        factors = []
        for j, (fkind, m) in enumerate(signature):
            arr = arrays[f"factor{j}"]
            if tuple(arr.shape[-2:]) != (m, m):
                raise FormatError(
                    f"{path}: factor{j} shape {arr.shape} inconsistent with signature dim {m}"
                )
            if fkind == "spd":
                factors.append(SPDPoint(torch.from_numpy(arr)))
            elif fkind == "siegel":
                factors.append(SiegelUpperPoint(torch.from_numpy(arr)))
            else:
                raise FormatError(f"{path}: unknown factor kind {fkind!r}")
        return ClassifierDataset(
            inputs=ProductPoint(tuple(factors)),
            labels=torch.from_numpy(arrays["labels"]),
            train_idx=torch.from_numpy(arrays["train_idx"]),
            test_idx=torch.from_numpy(arrays["test_idx"]),
            seed=int(manifest.get("seed", 0)),
            meta=manifest.get("meta", {}),
        )
    except KeyError as err:
        raise FormatError(f"{path}: missing manifest/array entry {err}") from err


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(path, blocks: Dict[str, ParamBlock], meta: dict | None = None) -> None:
    """Persist parameter blocks: flat raw vectors plus reconstruction metadata."""
    arrays = {name: blk.raw.detach().numpy() for name, blk in blocks.items()}
    block_meta: List[dict] = []
    for name, blk in blocks.items():
        block_meta.append({"name": name, "kind": blk.kind, "dims": _dims_to_json(blk.dims)})
    write_container(path, {"kind": "checkpoint", "blocks": block_meta, "meta": meta or {}}, arrays)


def load_checkpoint(path) -> Tuple[Dict[str, ParamBlock], dict]:
    manifest, arrays = read_container(path)
    if manifest.get("kind") != "checkpoint":
        raise FormatError(f"{path}: kind {manifest.get('kind')!r} is not a checkpoint")
    blocks: Dict[str, ParamBlock] = {}
    try:
        for entry in manifest["blocks"]:
            raw = torch.from_numpy(arrays[entry["name"]]).clone().requires_grad_(True)
            blocks[entry["name"]] = ParamBlock(entry["kind"], raw, _dims_from_json(entry["dims"]))
    except KeyError as err:
        raise FormatError(f"{path}: missing checkpoint entry {err}") from err
    return blocks, manifest.get("meta", {})


def _dims_to_json(dims):
    if dims is None or isinstance(dims, int):
        return dims
    dims = tuple(dims)
    if dims and isinstance(dims[0], (tuple, list)):
        return {"signature": [list(e) for e in dims]}
    return {"shape": list(dims)}


def _dims_from_json(obj):
    if obj is None or isinstance(obj, int):
        return obj
    if "signature" in obj:
        return tuple((str(k), int(m)) for k, m in obj["signature"])
    return tuple(int(v) for v in obj["shape"])
