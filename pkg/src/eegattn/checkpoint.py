"""Binary parameter checkpoint format.

Layout (all integers little-endian):

    magic   4 bytes  b"EAWT"
    version u32      currently 1
    count   u32      number of tensors
    per tensor:
        name_len u16, name UTF-8
        rank     u8
        dims     rank x u32
        payload  f32 x prod(dims)
"""

import struct

import numpy as np

from .errors import BadMagicError, HeaderSizeMismatchError, TruncatedPayloadError

MAGIC = b"EAWT"
VERSION = 1


def save_tensors(path, named):
    """Write an ordered mapping of name -> Tensor/ndarray as f32."""
    items = list(named.items())
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(items)))
        for name, tensor in items:
            arr = np.ascontiguousarray(
                getattr(tensor, "data", tensor), dtype=np.float32)
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            for d in arr.shape:
                fh.write(struct.pack("<I", d))
            fh.write(arr.tobytes())


def load_tensors(path):
    """Read a checkpoint back as an ordered dict of name -> float32 ndarray."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise BadMagicError(f"{path}: expected magic {MAGIC!r}, got {blob[:4]!r}")
    if len(blob) < 12:
        raise TruncatedPayloadError(f"{path}: header truncated")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise HeaderSizeMismatchError(f"{path}: unsupported version {version}")
    out = {}
    off = 12
    for _ in range(count):
        if off + 2 > len(blob):
            raise TruncatedPayloadError(f"{path}: tensor header truncated")
        (name_len,) = struct.unpack_from("<H", blob, off)
        off += 2
        name = blob[off:off + name_len].decode("utf-8")
        off += name_len
        if off + 1 > len(blob):
            raise TruncatedPayloadError(f"{path}: rank byte missing for {name!r}")
        rank = blob[off]
        off += 1
        if off + 4 * rank > len(blob):
            raise TruncatedPayloadError(f"{path}: dims truncated for {name!r}")
        dims = struct.unpack_from(f"<{rank}I", blob, off) if rank else ()
        off += 4 * rank
        n = int(np.prod(dims)) if rank else 1
        nbytes = 4 * n
        if off + nbytes > len(blob):
            raise TruncatedPayloadError(f"{path}: payload truncated for {name!r}")
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=off).reshape(dims)
        out[name] = np.ascontiguousarray(arr)
        off += nbytes
    return out
