"""Binary stack files and the plain-text/binary exports.

Stack file layout (all little-endian)::

    magic     4s   b"NPSA"
    version   u16  1
    n         u16  frame count
    height    u32
    width     u32
    flags     u8   bit0 steps present, bit1 truth phase present,
                   bit2 metadata present
    steps     n * f64                      (bit0)
    frames    n * height * width * f64     row-major
    truth     height * width * f64         (bit1)
    meta_len  u32, then meta_len bytes of UTF-8 JSON   (bit2)
    crc32     u32  zlib CRC-32 of every preceding byte
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .errors import StackFormatError
from .fringe_synth import FringeStack

MAGIC = b"NPSA"
VERSION = 1
HEADER = struct.Struct("<4sHHIIB")
FLAG_STEPS, FLAG_TRUTH, FLAG_META = 1, 2, 4
_F64 = np.dtype("<f8")


def atomic_write(path, data: bytes) -> Path:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def encode_stack(stack: FringeStack) -> bytes:
    n, h, w = stack.frames.shape
    if n > 0xFFFF:
        raise StackFormatError(f"too many frames for the format: {n}")
    flags = 0
    parts = []
    if stack.steps is not None:
        flags |= FLAG_STEPS
        parts.append(stack.steps.theta.astype(_F64).tobytes())
    parts.append(np.ascontiguousarray(stack.frames, dtype=_F64).tobytes())
    if stack.truth is not None:
        flags |= FLAG_TRUTH
        parts.append(np.ascontiguousarray(stack.truth, dtype=_F64).tobytes())
    if stack.metadata:
        flags |= FLAG_META
        meta = json.dumps(stack.metadata, sort_keys=True, separators=(",", ":")).encode()
        parts.append(struct.pack("<I", len(meta)) + meta)
    body = HEADER.pack(MAGIC, VERSION, n, h, w, flags) + b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def decode_stack(data: bytes) -> FringeStack:
    if len(data) < HEADER.size + 4:
        raise StackFormatError("file too short for a stack header")
    magic, version, n, h, w, flags = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise StackFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise StackFormatError(f"unsupported format version {version}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise StackFormatError("CRC mismatch: file is corrupt")

    pos = HEADER.size

    def take(count):
        nonlocal pos
        nbytes = count * 8
        if pos + nbytes > len(body):
            raise StackFormatError("declared sizes exceed file length")
        arr = np.frombuffer(body, dtype=_F64, count=count, offset=pos).astype(np.float64)
        pos += nbytes
        return arr

    steps = take(n) if flags & FLAG_STEPS else None
    frames = take(n * h * w).reshape(n, h, w)
    truth = take(h * w).reshape(h, w) if flags & FLAG_TRUTH else None
    meta = {}
    if flags & FLAG_META:
        if pos + 4 > len(body):
            raise StackFormatError("truncated metadata block")
        (mlen,) = struct.unpack_from("<I", body, pos)
        pos += 4
        if pos + mlen > len(body):
            raise StackFormatError("truncated metadata block")
        meta = json.loads(body[pos : pos + mlen].decode())
        pos += mlen
    if pos != len(body):
        raise StackFormatError(f"{len(body) - pos} unexpected trailing bytes")
    return FringeStack(frames, steps, truth, meta)


def write_stack(path, stack: FringeStack) -> Path:
    return atomic_write(path, encode_stack(stack))


def read_stack(path) -> FringeStack:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise StackFormatError(f"cannot read {path}: {exc}") from exc
    return decode_stack(data)


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_phase_binary(path, phase: np.ndarray) -> Path:
    """Raw row-major little-endian float64; invalid pixels are NaN."""
    return atomic_write(path, np.ascontiguousarray(phase, dtype=_F64).tobytes())


def read_phase_binary(path, shape) -> np.ndarray:
    return np.frombuffer(Path(path).read_bytes(), dtype=_F64).reshape(shape).astype(np.float64)


def phase_to_gray(phase: np.ndarray) -> np.ndarray:
    """(-pi, pi] mapped linearly onto 0..255; NaN pixels become 0."""
    scaled = (np.nan_to_num(phase, nan=-np.pi) + np.pi) / (2 * np.pi) * 255
    return np.clip(np.round(scaled), 0, 255).astype(np.uint8)


def write_pgm(path, phase: np.ndarray) -> Path:
    gray = phase_to_gray(phase)
    h, w = gray.shape
    return atomic_write(path, f"P5\n{w} {h}\n255\n".encode() + gray.tobytes())


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue().encode()


def write_csv(path, header, rows) -> Path:
    return atomic_write(path, _csv_bytes(header, rows))


def write_lissajous_csv(path, points: np.ndarray) -> Path:
    return write_csv(path, ["re", "im"], ((float(x), float(y)) for x, y in points))


def write_spectrum_csv(path, omega, H) -> Path:
    rows = ((float(w), float(h.real), float(h.imag), float(abs(h))) for w, h in zip(omega, H))
    return write_csv(path, ["omega", "re", "im", "abs"], rows)


def write_matrix_csv(path, M: np.ndarray) -> Path:
    return write_csv(path, [f"c{j}" for j in range(M.shape[1])], ([float(v) for v in row] for row in M))


def write_json(path, obj) -> Path:
    # allow_nan=False: every numeric field in a report must be finite
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    return atomic_write(path, (text + "\n").encode())
