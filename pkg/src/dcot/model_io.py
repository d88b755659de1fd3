"""Bit-exact binary persistence of trained models.

Layout (all integers and floats little-endian):

    magic           4 bytes  b"DCOT"
    format_version  u32      currently 1
    d, r, l         u32 each vocabulary size, prototype count, layer count
    p               f64      survival probability
    ridge           f64      configured ridge; NaN encodes "automatic"
    squash          u8       0 or 1
    vocab block     d records: u32 term byte length, UTF-8 bytes, u64 count
    prototypes      r x u32  term indices
    layer blocks    row-major f64; layer 1 is r x (d+1), later r x (r+1)

Round-tripping reproduces every field and every matrix entry bitwise.
"""

from __future__ import annotations

import math
import struct
from typing import BinaryIO

import numpy as np

from .errors import (
    BadMagic,
    DcotError,
    InvariantViolation,
    IoFailure,
    TruncatedFile,
    UnsupportedVersion,
)
from .encoder import LayerWeights
from .stack import DcotModel
from .text import PrototypeSet, Vocabulary

MAGIC = b"DCOT"
FORMAT_VERSION = 1

# Canonical quiet-NaN bit pattern used to encode the automatic ridge.
_AUTO_RIDGE_BYTES = struct.pack("<Q", 0x7FF8000000000000)

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_F64 = struct.Struct("<d")
_U8 = struct.Struct("<B")


def save(model: DcotModel, sink: BinaryIO) -> int:
    """Write the model to a binary stream; returns the byte count."""
    parts: list[bytes] = [
        MAGIC,
        _U32.pack(FORMAT_VERSION),
        _U32.pack(model.d),
        _U32.pack(model.r),
        _U32.pack(model.n_layers),
        _F64.pack(model.p),
        _AUTO_RIDGE_BYTES if model.ridge is None else _F64.pack(model.ridge),
        _U8.pack(1 if model.squash_layers else 0),
    ]
    for term, count in zip(model.vocab.terms, model.vocab.counts):
        raw = term.encode("utf-8")
        parts.append(_U32.pack(len(raw)))
        parts.append(raw)
        parts.append(_U64.pack(count))
    for idx in model.prototypes.indices:
        parts.append(_U32.pack(idx))
    for layer in model.layers:
        parts.append(np.ascontiguousarray(layer.matrix, dtype="<f8").tobytes())
    blob = b"".join(parts)
    try:
        sink.write(blob)
    except OSError as exc:
        raise IoFailure(f"write failed: {exc}") from exc
    return len(blob)


def _read_exact(source: BinaryIO, n: int, what: str) -> bytes:
    try:
        data = source.read(n)
    except OSError as exc:
        raise IoFailure(f"read failed while reading {what}: {exc}") from exc
    if data is None or len(data) != n:
        raise TruncatedFile(
            f"stream ended while reading {what}: wanted {n} bytes, "
            f"got {0 if data is None else len(data)}"
        )
    return data


def load(source: BinaryIO) -> DcotModel:
    """Read a model from a binary stream, re-checking every model invariant."""
    if _read_exact(source, 4, "magic") != MAGIC:
        raise BadMagic(f"not a model stream (expected magic {MAGIC!r})")
    (version,) = _U32.unpack(_read_exact(source, 4, "format version"))
    if version != FORMAT_VERSION:
        raise UnsupportedVersion(
            f"format version {version} not supported (expected {FORMAT_VERSION})"
        )

    (d,) = _U32.unpack(_read_exact(source, 4, "dimension d"))
    (r,) = _U32.unpack(_read_exact(source, 4, "prototype count r"))
    (n_layers,) = _U32.unpack(_read_exact(source, 4, "layer count l"))
    (p,) = _F64.unpack(_read_exact(source, 8, "survival probability"))
    ridge_bytes = _read_exact(source, 8, "ridge")
    (ridge_raw,) = _F64.unpack(ridge_bytes)
    (squash_byte,) = _U8.unpack(_read_exact(source, 1, "squash flag"))

    if not 0 < r < d:
        raise InvariantViolation(f"header requires 0 < r < d, got r={r}, d={d}")
    if n_layers < 1:
        raise InvariantViolation("layer count must be >= 1")
    if math.isnan(p) or not 0.0 < p <= 1.0:
        raise InvariantViolation(f"survival probability {p} outside (0,1]")
    ridge = None if math.isnan(ridge_raw) else ridge_raw
    if ridge is not None and (ridge < 0.0 or math.isinf(ridge)):
        raise InvariantViolation(f"ridge {ridge} must be finite and non-negative")
    if squash_byte not in (0, 1):
        raise InvariantViolation(f"squash flag must be 0 or 1, got {squash_byte}")

    terms: list[str] = []
    counts: list[int] = []
    for i in range(d):
        (length,) = _U32.unpack(_read_exact(source, 4, f"term {i} length"))
        raw = _read_exact(source, length, f"term {i}")
        try:
            terms.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise InvariantViolation(f"term {i} is not valid UTF-8") from exc
        (count,) = _U64.unpack(_read_exact(source, 8, f"count of term {i}"))
        if count < 1:
            raise InvariantViolation(f"count of term {i} must be >= 1")
        counts.append(count)
    if len(set(terms)) != d:
        raise InvariantViolation("vocabulary terms are not unique")

    proto_raw = _read_exact(source, 4 * r, "prototype indices")
    proto = struct.unpack(f"<{r}I", proto_raw)
    if any(idx >= d for idx in proto):
        raise InvariantViolation("prototype index outside the vocabulary")
    if len(set(proto)) != r:
        raise InvariantViolation("prototype indices are not distinct")

    layers: list[LayerWeights] = []
    for k in range(n_layers):
        in_dim = d if k == 0 else r
        raw = _read_exact(source, 8 * r * (in_dim + 1), f"layer {k + 1} weights")
        matrix = np.frombuffer(raw, dtype="<f8").reshape(r, in_dim + 1).copy()
        if not np.isfinite(matrix).all():
            raise InvariantViolation(f"layer {k + 1} contains non-finite entries")
        layers.append(LayerWeights(matrix))

    try:
        return DcotModel(
            vocab=Vocabulary(tuple(terms), tuple(counts)),
            prototypes=PrototypeSet(proto),
            p=p,
            layers=tuple(layers),
            squash_layers=bool(squash_byte),
            ridge=ridge,
        )
    except InvariantViolation:
        raise
    except (ValueError, DcotError) as exc:
        raise InvariantViolation(f"decoded model fails validation: {exc}") from exc


def save_file(model: DcotModel, path) -> int:
    """Save to a filesystem path; see :func:`save`."""
    try:
        with open(path, "wb") as fh:
            return save(model, fh)
    except OSError as exc:
        raise IoFailure(f"cannot write model file {path}: {exc}") from exc


def load_file(path) -> DcotModel:
    """Load from a filesystem path; see :func:`load`."""
    try:
        with open(path, "rb") as fh:
            return load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read model file {path}: {exc}") from exc
