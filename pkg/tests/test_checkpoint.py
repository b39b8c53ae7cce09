import json
import struct

import numpy as np
import pytest

from conftest import small_params
from simulnmt.checkpoint import (MAGIC, Checkpoint, from_bytes, load_checkpoint,
                                 save_checkpoint, to_bytes)
from simulnmt.errors import FormatError
from simulnmt.numerics import TrainConfig


@pytest.fixture
def ckpt():
    return Checkpoint(small_params(0, dtype=np.float32), TrainConfig.desk())


def _split(data):
    (mlen,) = struct.unpack_from("<I", data, len(MAGIC))
    start = len(MAGIC) + 4
    return json.loads(data[start:start + mlen]), data[start + mlen:]


def _join(manifest, payload):
    head = json.dumps(manifest).encode()
    return MAGIC + struct.pack("<I", len(head)) + head + payload


def test_roundtrip_bitwise(tmp_path, ckpt):
    path = tmp_path / "m.ckpt"
    save_checkpoint(path, ckpt)
    back = load_checkpoint(path)
    for name, arr in ckpt.params.named_tensors().items():
        got = back.params.named_tensors()[name]
        assert got.dtype == np.float32 and got.tobytes() == arr.tobytes(), name
    assert back.config == ckpt.config
    assert back.src_vocab == ckpt.src_vocab and back.tgt_vocab == ckpt.tgt_vocab


def test_layout(ckpt):
    data = to_bytes(ckpt)
    assert data[:8] == b"SIMST001"
    manifest, payload = _split(data)
    assert manifest["version"] == 1
    assert sum(t["length"] for t in manifest["tensors"]) == len(payload)
    first = manifest["tensors"][0]
    arr = np.frombuffer(payload[:first["length"]], dtype="<f4").reshape(first["shape"])
    assert np.array_equal(arr, ckpt.params.named_tensors()[first["name"]])


def test_no_temp_files_left(tmp_path, ckpt):
    save_checkpoint(tmp_path / "a.ckpt", ckpt)
    assert [p.name for p in tmp_path.iterdir()] == ["a.ckpt"]


def _corruptions(data):
    manifest, payload = _split(data)
    yield "magic", b"XXXXXXXX" + data[8:]
    yield "manifest_length", data[:10]
    yield "manifest", data[:12] + b"{not json" + data[21:]
    m = dict(manifest, version=2)
    yield "version", _join(m, payload)
    yield None, data[:-7]                          # truncated mid-payload
    m = dict(manifest, tensors=manifest["tensors"][:-1])
    yield "tensors", _join(m, payload)             # count mismatch
    yield "payload", data + b"\0\0\0\0"            # trailing blob
    m = json.loads(json.dumps(manifest))
    m["tensors"][0]["shape"] = [1, 1]
    yield m["tensors"][0]["name"], _join(m, payload)
    m = dict(manifest)
    del m["config"]
    yield "config", _join(m, payload)


def test_corrupt_files_rejected(tmp_path, ckpt):
    data = to_bytes(ckpt)
    for k, (field, bad) in enumerate(_corruptions(data)):
        path = tmp_path / f"bad{k}.ckpt"
        path.write_bytes(bad)
        with pytest.raises(FormatError) as err:
            load_checkpoint(path)
        if field is not None:
            assert err.value.field == field, (k, err.value)


def test_truncation_names_a_tensor(ckpt):
    with pytest.raises(FormatError) as err:
        from_bytes(to_bytes(ckpt)[:-7])
    assert err.value.field == "out_proj"
