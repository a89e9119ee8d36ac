"""Binary field container with a JSON sidecar.

Layout (little endian)::

    magic  b"FNFIELD\\0"        8 bytes
    version                   uint32
    count                     uint32   number of tagged header entries
    entries                   tag(4 ascii) type(1 ascii) payload
                                type 'i': int64, 'd': float64,
                                type 's': uint32 length + utf-8 bytes
    b"DATA" uint64 length     then length float64 values, row-major

Header tags: DIMN (n), NPTS (points per dim), BOXL (box length), EXPS (the
exponent s, NaN when not applicable), SYMB (symbol kind).  The sidecar
``<path>.json`` repeats the header plus a sha256 of the data block.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from pathlib import Path

import numpy as np

from .spectral import Field, GridSpec, SymbolKind

__all__ = ["save_field", "load_field", "FieldFormatError", "sha256_file", "CONTAINER_VERSION"]

MAGIC = b"FNFIELD\0"
CONTAINER_VERSION = 1


class FieldFormatError(ValueError):
    pass


def _pack_entry(tag: str, value) -> bytes:
    t = tag.encode("ascii")
    assert len(t) == 4
    if isinstance(value, str):
        b = value.encode("utf-8")
        return t + b"s" + struct.pack("<I", len(b)) + b
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return t + b"i" + struct.pack("<q", int(value))
    return t + b"d" + struct.pack("<d", float(value))


def _metadata(field: Field, s: float | None) -> dict:
    g = field.grid
    return {
        "n": g.n,
        "points_per_dim": g.points_per_dim,
        "box_length": g.box_length,
        "s": float("nan") if s is None else float(s),
        "symbol_kind": g.symbol_kind.value,
    }


def save_field(path: str | os.PathLike, field: Field, s: float | None = None,
               extra: dict | None = None) -> Path:
    """Write ``field`` to ``path`` and its sidecar to ``path + '.json'``."""
    path = Path(path)
    meta = _metadata(field, s)
    header = [("DIMN", meta["n"]), ("NPTS", meta["points_per_dim"]),
              ("BOXL", meta["box_length"]), ("EXPS", meta["s"]),
              ("SYMB", meta["symbol_kind"])]
    data = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    blob = bytearray(MAGIC)
    blob += struct.pack("<II", CONTAINER_VERSION, len(header))
    for tag, val in header:
        blob += _pack_entry(tag, val)
    blob += b"DATA" + struct.pack("<Q", field.values.size) + data
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(bytes(blob))
    os.replace(tmp, path)
    side = dict(meta)
    side["s"] = None if math.isnan(meta["s"]) else meta["s"]
    side["format_version"] = CONTAINER_VERSION
    side["data_sha256"] = hashlib.sha256(data).hexdigest()
    if extra:
        side["extra"] = extra
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True))
    return path


def _read_header(buf: bytes):
    if buf[:8] != MAGIC:
        raise FieldFormatError("bad magic")
    version, count = struct.unpack_from("<II", buf, 8)
    if version != CONTAINER_VERSION:
        raise FieldFormatError(f"unsupported container version {version}")
    pos = 16
    out = {}
    for _ in range(count):
        tag = buf[pos:pos + 4].decode("ascii")
        typ = buf[pos + 4:pos + 5]
        pos += 5
        if typ == b"i":
            (out[tag],) = struct.unpack_from("<q", buf, pos)
            pos += 8
        elif typ == b"d":
            (out[tag],) = struct.unpack_from("<d", buf, pos)
            pos += 8
        elif typ == b"s":
            (ln,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            out[tag] = buf[pos:pos + ln].decode("utf-8")
            pos += ln
        else:
            raise FieldFormatError(f"unknown entry type {typ!r} for tag {tag}")
    return out, pos


def load_field(path: str | os.PathLike, require_sidecar: bool = True) -> tuple[Field, dict]:
    """Read a container; returns the field and its metadata.

    The sidecar must agree with the binary header on every key, and its
    data hash must match.
    """
    path = Path(path)
    buf = path.read_bytes()
    hdr, pos = _read_header(buf)
    if buf[pos:pos + 4] != b"DATA":
        raise FieldFormatError("missing DATA block")
    (count,) = struct.unpack_from("<Q", buf, pos + 4)
    pos += 12
    data = buf[pos:pos + 8 * count]
    if len(data) != 8 * count:
        raise FieldFormatError("truncated DATA block")
    meta = {
        "n": int(hdr["DIMN"]),
        "points_per_dim": int(hdr["NPTS"]),
        "box_length": float(hdr["BOXL"]),
        "s": None if math.isnan(hdr["EXPS"]) else float(hdr["EXPS"]),
        "symbol_kind": str(hdr["SYMB"]),
    }
    side_path = Path(str(path) + ".json")
    if side_path.exists():
        side = json.loads(side_path.read_text())
        for k, v in meta.items():
            sv = side.get(k)
            same = (sv == v) if not isinstance(v, float) else (
                sv is not None and math.isclose(sv, v, rel_tol=0, abs_tol=0))
            if not same:
                raise FieldFormatError(f"sidecar disagrees with header on {k!r}: {sv!r} vs {v!r}")
        if side.get("data_sha256") != hashlib.sha256(data).hexdigest():
            raise FieldFormatError("sidecar data hash mismatch")
        meta["extra"] = side.get("extra")
    elif require_sidecar:
        raise FieldFormatError(f"missing sidecar {side_path}")
    grid = GridSpec(meta["n"], meta["points_per_dim"], meta["box_length"],
                    SymbolKind(meta["symbol_kind"]))
    values = np.frombuffer(data, dtype="<f8").reshape(grid.shape)
    return Field(grid, values), meta


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
