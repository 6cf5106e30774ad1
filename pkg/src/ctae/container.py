"""Versioned binary container for named float64 arrays.

Layout (all integers little-endian)::

    offset  size  field
    0       8     magic  b"CTAEBLOB"
    8       4     major version (uint32)
    12      4     minor version (uint32)
    16      8     header length H (uint64)
    24      H     UTF-8 JSON header
    24+H    P     payload: arrays back to back, C order, '<f8'

The header holds ``kind`` (what the file stores), free-form ``meta`` and
an ``arrays`` list of ``{name, shape, offset, nbytes}`` entries relative
to the payload start, plus ``payload_sha256`` over the payload bytes.
Readers reject unknown major versions, truncated files and checksum
mismatches.
"""

import hashlib
import json
import struct

import numpy as np

MAGIC = b"CTAEBLOB"
MAJOR = 1
MINOR = 0
_PREAMBLE = struct.Struct("<8sIIQ")


class ContainerError(ValueError):
    """Malformed, truncated, corrupted or incompatible container file."""


def dumps(kind, arrays, meta=None):
    """Serialise ``arrays`` (name -> array) and ``meta`` to bytes."""
    entries = []
    chunks = []
    offset = 0
    for name, value in arrays.items():
        arr = np.ascontiguousarray(np.asarray(value, dtype="<f8"))
        raw = arr.tobytes()
        entries.append({"name": name, "shape": list(arr.shape),
                        "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = {"kind": kind, "meta": meta or {}, "arrays": entries,
              "payload_sha256": hashlib.sha256(payload).hexdigest()}
    header_bytes = json.dumps(header, sort_keys=True,
                              separators=(",", ":")).encode("utf-8")
    return (_PREAMBLE.pack(MAGIC, MAJOR, MINOR, len(header_bytes))
            + header_bytes + payload)


def loads(blob, kind=None):
    """Parse bytes produced by :func:`dumps`; returns ``(arrays, meta)``."""
    if len(blob) < _PREAMBLE.size:
        raise ContainerError("file is truncated (no preamble)")
    magic, major, _minor, header_len = _PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise ContainerError("not a CTAE container (bad magic)")
    if major != MAJOR:
        raise ContainerError(f"unsupported container major version {major} "
                             f"(reader supports {MAJOR})")
    start = _PREAMBLE.size
    if len(blob) < start + header_len:
        raise ContainerError("file is truncated (header)")
    try:
        header = json.loads(blob[start:start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise ContainerError(f"corrupted header: {err}") from None
    if kind is not None and header.get("kind") != kind:
        raise ContainerError(f"expected a {kind!r} container, found "
                             f"{header.get('kind')!r}")
    payload = blob[start + header_len:]
    expected = sum(e["nbytes"] for e in header["arrays"])
    if len(payload) != expected:
        raise ContainerError(f"file is truncated or padded: payload has "
                             f"{len(payload)} bytes, header promises {expected}")
    if hashlib.sha256(payload).hexdigest() != header["payload_sha256"]:
        raise ContainerError("payload checksum mismatch (file is corrupted)")
    arrays = {}
    for e in header["arrays"]:
        chunk = payload[e["offset"]:e["offset"] + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(chunk, dtype="<f8").reshape(
            e["shape"]).astype(np.float64)
    return arrays, header["meta"]


def save(path, kind, arrays, meta=None):
    blob = dumps(kind, arrays, meta)
    with open(path, "wb") as fh:
        fh.write(blob)


def load(path, kind=None):
    with open(path, "rb") as fh:
        return loads(fh.read(), kind=kind)
