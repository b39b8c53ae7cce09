"""Binary checkpoint format.

Layout::

    b"SIMST001"                       8-byte magic
    uint32 little-endian              manifest length in bytes
    UTF-8 JSON manifest               {version, config, vocab_src, vocab_tgt,
                                       tensors: [{name, shape, offset, length}]}
    float32 little-endian payload     tensors concatenated in manifest order

``offset`` and ``length`` are byte counts relative to the payload start.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .model import Seq2SeqParams
from .numerics import TrainConfig
from .vocab import Vocabulary

MAGIC = b"SIMST001"
VERSION = 1
_LE_F32 = np.dtype("<f4")


@dataclass
class Checkpoint:
    params: Seq2SeqParams
    config: TrainConfig
    version: int = VERSION

    @property
    def src_vocab(self):
        return self.params.src_vocab

    @property
    def tgt_vocab(self):
        return self.params.tgt_vocab


def to_bytes(ckpt):
    tensors = ckpt.params.named_tensors()
    entries, blobs, offset = [], [], 0
    for name, arr in tensors.items():
        blob = np.ascontiguousarray(arr, dtype=_LE_F32).tobytes()
        entries.append({"name": name, "shape": list(arr.shape),
                        "offset": offset, "length": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    manifest = {
        "version": ckpt.version,
        "config": ckpt.config.to_dict(),
        "vocab_src": ckpt.params.src_vocab.to_list(),
        "vocab_tgt": ckpt.params.tgt_vocab.to_list(),
        "tensors": entries,
    }
    head = json.dumps(manifest, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<I", len(head)) + head + b"".join(blobs)


def from_bytes(data):
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}")
    pos = len(MAGIC)
    if len(data) < pos + 4:
        raise FormatError("manifest_length", "file ends before the manifest length")
    (mlen,) = struct.unpack_from("<I", data, pos)
    pos += 4
    if len(data) < pos + mlen:
        raise FormatError("manifest", f"declared {mlen} bytes but only "
                                      f"{len(data) - pos} remain")
    try:
        manifest = json.loads(data[pos:pos + mlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError("manifest", f"not valid UTF-8 JSON ({exc})") from None
    if not isinstance(manifest, dict):
        raise FormatError("manifest", "must be a JSON object")
    for key in ("version", "config", "vocab_src", "vocab_tgt", "tensors"):
        if key not in manifest:
            raise FormatError(key, "missing from manifest")
    if manifest["version"] != VERSION:
        raise FormatError("version", f"unsupported version {manifest['version']!r}, "
                                     f"expected {VERSION}")
    payload = data[pos + mlen:]

    expected = list(_expected_names())
    entries = manifest["tensors"]
    if not isinstance(entries, list) or len(entries) != len(expected):
        raise FormatError("tensors", f"manifest lists {len(entries)} tensors, "
                                     f"model has {len(expected)}")
    tensors = {}
    cursor = 0
    for entry in entries:
        name = entry.get("name")
        if name not in expected or name in tensors:
            raise FormatError("tensors", f"unexpected or duplicate tensor {name!r}")
        shape = tuple(entry.get("shape", ()))
        offset, length = entry.get("offset"), entry.get("length")
        if offset != cursor:
            raise FormatError(name, f"offset {offset} != expected {cursor}")
        if length != 4 * int(np.prod(shape, dtype=np.int64)):
            raise FormatError(name, f"length {length} does not match shape {list(shape)}")
        if offset + length > len(payload):
            raise FormatError(name, f"payload truncated ({len(payload)} bytes, "
                                    f"tensor ends at {offset + length})")
        arr = np.frombuffer(payload, dtype=_LE_F32, count=length // 4, offset=offset)
        tensors[name] = arr.astype(np.float32).reshape(shape)
        cursor += length
    if cursor != len(payload):
        raise FormatError("payload", f"{len(payload) - cursor} trailing bytes "
                                     f"not described by the manifest")
    try:
        src_vocab = Vocabulary.from_list(manifest["vocab_src"])
        tgt_vocab = Vocabulary.from_list(manifest["vocab_tgt"])
    except ValueError as exc:
        raise FormatError("vocab", str(exc)) from None
    try:
        params = Seq2SeqParams.from_tensors(tensors, src_vocab, tgt_vocab)
        config = TrainConfig.from_dict(manifest["config"])
    except ValueError as exc:
        raise FormatError("tensors", str(exc)) from None
    return Checkpoint(params, config, manifest["version"])


def _expected_names():
    names = ["src_embedding", "tgt_embedding"]
    for side in ("encoder", "decoder"):
        for k in range(2):
            names += [f"{side}.{k}.input_weights", f"{side}.{k}.recurrent_weights",
                      f"{side}.{k}.bias"]
    return names + ["attn_proj", "out_proj"]


def save_checkpoint(path, ckpt):
    data = to_bytes(ckpt)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
