"""Binary vector files and content hashing for run manifests."""

from __future__ import annotations

import hashlib
import struct

import numpy as np

from .sparse import CacheFormatError

VECTOR_MAGIC = b"CSORV"


def write_vector(x: np.ndarray, path) -> None:
    """Vector file: magic, length (u64 LE), then 64-bit LE floats."""
    x = np.asarray(x, dtype=np.float64)
    with open(path, "wb") as fh:
        fh.write(VECTOR_MAGIC)
        fh.write(struct.pack("<Q", x.size))
        fh.write(x.astype("<f8").tobytes())


def read_vector(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(len(VECTOR_MAGIC))
        if magic != VECTOR_MAGIC:
            raise CacheFormatError(f"bad magic {magic!r}, expected {VECTOR_MAGIC!r}")
        (n,) = struct.unpack("<Q", fh.read(8))
        raw = fh.read(n * 8)
        if len(raw) != n * 8 or fh.read(1):
            raise CacheFormatError("vector payload length mismatch")
    return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def read_scores(path) -> np.ndarray:
    """Read a score vector: binary vector file, or ASCII floats one per line."""
    with open(path, "rb") as fh:
        head = fh.read(len(VECTOR_MAGIC))
    if head == VECTOR_MAGIC:
        return read_vector(path)
    with open(path, "r", encoding="ascii") as fh:
        try:
            values = [float(line) for line in fh if line.strip()]
        except ValueError as exc:
            raise CacheFormatError(f"not a vector file or float-per-line text: {exc}")
    return np.asarray(values, dtype=np.float64)


def content_hash(path) -> str:
    """64-bit content digest used to pin manifest inputs."""
    digest = hashlib.blake2b(digest_size=8)
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
