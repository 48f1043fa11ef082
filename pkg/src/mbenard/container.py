"""MBSPEC01 checkpoint container.

Layout::

    b"MBSPEC01"                      8 bytes magic
    header length L                  uint64 little-endian
    JSON header                      L bytes, UTF-8
    payload                          named arrays, back to back

The header carries ``dim``, ``N``, ``R``, ``s``, ``t``, the ordered list of
``fields`` (name and shape of each complex array), ``mode_order`` and a
SHA-256 digest of the payload, plus any extra metadata the caller supplied.
Each array is stored as little-endian float64 pairs ``(re, im)`` in row-major
order over the FFT-ordered mode lattice.  Python floats survive the JSON
header exactly, so round-trips are bit-exact.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import ContainerError

MAGIC = b"MBSPEC01"
_LEN = struct.Struct("<Q")


def write_container(path, arrays: dict[str, np.ndarray], meta: dict) -> Path:
    """Write named complex arrays plus metadata; the file appears atomically."""
    path = Path(path)
    blobs = []
    fields = []
    for name, arr in arrays.items():
        a = np.ascontiguousarray(arr, dtype="<c16")
        fields.append({"name": name, "shape": list(a.shape)})
        blobs.append(a.view("<f8").tobytes())
    payload = b"".join(blobs)
    header = dict(meta)
    header.update(
        fields=fields,
        mode_order="fft",
        encoding="float64-le interleaved re,im; row-major",
        payload_bytes=len(payload),
        payload_sha256=hashlib.sha256(payload).hexdigest(),
    )
    hbytes = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_LEN.pack(len(hbytes)))
        fh.write(hbytes)
        fh.write(payload)
    os.replace(tmp, path)
    return path


def read_container(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read and validate a container; returns ``(arrays, header)``."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ContainerError(f"cannot read checkpoint {path}: {exc}") from exc
    if len(raw) < len(MAGIC) + _LEN.size or raw[: len(MAGIC)] != MAGIC:
        raise ContainerError(f"{path}: bad magic, not an MBSPEC01 container")
    (hlen,) = _LEN.unpack_from(raw, len(MAGIC))
    start = len(MAGIC) + _LEN.size
    if start + hlen > len(raw):
        raise ContainerError(f"{path}: truncated header")
    try:
        header = json.loads(raw[start : start + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ContainerError(f"{path}: corrupt header ({exc})") from exc
    for key in ("dim", "N", "R", "s", "t", "fields", "payload_bytes", "payload_sha256"):
        if key not in header:
            raise ContainerError(f"{path}: header lacks {key!r}")
    payload = raw[start + hlen :]
    if len(payload) != header["payload_bytes"]:
        raise ContainerError(
            f"{path}: payload is {len(payload)} bytes, header promises {header['payload_bytes']} (truncated?)"
        )
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise ContainerError(f"{path}: payload checksum mismatch")
    arrays = {}
    off = 0
    for fld in header["fields"]:
        shape = tuple(fld["shape"])
        nbytes = 16 * int(np.prod(shape, dtype=np.int64))
        chunk = payload[off : off + nbytes]
        if len(chunk) != nbytes:
            raise ContainerError(f"{path}: field {fld['name']!r} is short")
        arrays[fld["name"]] = np.frombuffer(chunk, dtype="<f8").view("<c16").reshape(shape).astype(np.complex128)
        off += nbytes
    if off != len(payload):
        raise ContainerError(f"{path}: {len(payload) - off} trailing payload bytes")
    return arrays, header
