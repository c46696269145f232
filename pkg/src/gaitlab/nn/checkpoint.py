"""Binary checkpoint container.

Layout: 8-byte magic, little-endian uint32 header length, UTF-8 JSON header,
then a payload of little-endian float32 arrays. The header records each
tensor's name, shape and byte offset into the payload, the frozen-name set,
and an optional free-form manifest (used by adapter checkpoints to pin their
base checkpoint hash and build options).
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .optim import ParamTree

MAGIC = b"ADPTNET1"


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(tree: ParamTree, path, manifest: dict | None = None) -> None:
    names = tree.names()
    arrays = [tree.entries[n].data.astype("<f4") for n in names]
    offsets = []
    off = 0
    for a in arrays:
        offsets.append(off)
        off += a.nbytes
    header = {
        "tensors": [
            {"name": n, "shape": list(a.shape), "offset": o}
            for n, a, o in zip(names, arrays, offsets)
        ],
        "frozen": sorted(tree.frozen),
        "manifest": manifest or {},
    }
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(hbytes)))
        f.write(hbytes)
        for a in arrays:
            f.write(a.tobytes())


def _read_header(f) -> tuple[dict, int]:
    magic = f.read(len(MAGIC))
    if magic != MAGIC:
        raise CheckpointError(f"bad magic: {magic!r}")
    (hlen,) = struct.unpack("<I", f.read(4))
    hbytes = f.read(hlen)
    if len(hbytes) != hlen:
        raise CheckpointError("truncated header")
    return json.loads(hbytes.decode("utf-8")), len(MAGIC) + 4 + hlen


def load_checkpoint(path, into: ParamTree | None = None) -> tuple[ParamTree, dict]:
    """Load a checkpoint; returns (tree, manifest).

    With ``into`` set, tensors load into the existing tree and every name and
    shape must match the stored layout.
    """
    with open(path, "rb") as f:
        header, _ = _read_header(f)
        payload = f.read()
    arrays: dict[str, np.ndarray] = {}
    for spec in header["tensors"]:
        shape = tuple(spec["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = spec["offset"]
        end = start + 4 * count
        if end > len(payload):
            raise CheckpointError(
                f"tensor {spec['name']} payload range [{start}:{end}) exceeds file"
            )
        a = np.frombuffer(payload[start:end], dtype="<f4").reshape(shape)
        arrays[spec["name"]] = a.astype(np.float64)
    if into is not None:
        missing = set(into.names()) ^ set(arrays)
        if missing:
            raise CheckpointError(f"name mismatch on load-into-existing: {sorted(missing)}")
        into.load_arrays(arrays)
        into.frozen = set(header["frozen"])
        for n in into.entries:
            into.entries[n].requires_grad = n not in into.frozen
        return into, header.get("manifest", {})
    tree = ParamTree()
    for n, a in arrays.items():
        tree.add(n, a)
    tree.freeze(header["frozen"])
    return tree, header.get("manifest", {})


def checkpoint_hash(path) -> str:
    """SHA-256 of the full checkpoint file (identity key for adapter manifests)."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
