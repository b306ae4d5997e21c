"""TDT1 binary tensor files.

Layout: magic ``TDT1``, u8 dtype code (0 = float64, 1 = float32), u8 ndim,
ndim x u64 little-endian shape, then the row-major payload. Used for
features, motion clips, embeddings and checkpoint parameter blobs.
"""

import struct

import numpy as np

from .errors import FormatError

MAGIC = b"TDT1"
_DTYPES = {0: np.dtype("<f8"), 1: np.dtype("<f4")}
_CODES = {np.dtype("float64"): 0, np.dtype("float32"): 1}


def tensor_bytes(arr):
    """Serialize an array to TDT1 bytes."""
    arr = np.ascontiguousarray(arr)
    if arr.dtype not in _CODES:
        arr = arr.astype(np.float64)
    code = _CODES[arr.dtype]
    header = MAGIC + struct.pack("<BB", code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    return header + arr.astype(_DTYPES[code], copy=False).tobytes()


def read_tensor_from(buf, offset=0):
    """Decode one TDT1 blob from ``buf`` starting at ``offset``.

    Returns (array, next_offset) so blobs can be concatenated in one file.
    """
    if buf[offset:offset + 4] != MAGIC:
        raise FormatError(f"not a TDT1 blob at offset {offset}: bad magic {buf[offset:offset + 4]!r}")
    code, ndim = struct.unpack_from("<BB", buf, offset + 4)
    if code not in _DTYPES:
        raise FormatError(f"unknown TDT1 dtype code {code}")
    shape = struct.unpack_from(f"<{ndim}Q", buf, offset + 6)
    dtype = _DTYPES[code]
    start = offset + 6 + 8 * ndim
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    end = start + count * dtype.itemsize
    if end > len(buf):
        raise FormatError(f"truncated TDT1 payload: need {end} bytes, have {len(buf)}")
    arr = np.frombuffer(buf[start:end], dtype=dtype).reshape(shape).copy()
    return arr, end


def write_tensor(path, arr):
    with open(path, "wb") as fh:
        fh.write(tensor_bytes(arr))


def read_tensor(path):
    with open(path, "rb") as fh:
        buf = fh.read()
    arr, end = read_tensor_from(buf)
    if end != len(buf):
        raise FormatError(f"{path}: {len(buf) - end} trailing bytes after tensor payload")
    return arr
