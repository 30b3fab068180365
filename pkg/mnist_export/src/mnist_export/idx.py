"""Reading and writing IDX files (the MNIST distribution format).

An IDX file is a 4-byte magic number (two zero bytes, a type code,
a dimension count), big-endian uint32 sizes for each dimension, then
the raw data in C order.  Only the unsigned-byte type code 0x08 is
handled here, which covers both image and label files.  Files may be
gzip-compressed; readers detect the gzip magic automatically.
"""

import gzip
import struct
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
_UBYTE = 0x08


class IdxFormatError(Exception):
    """The file does not follow the IDX layout."""


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def read_idx(path) -> np.ndarray:
    """Parse one IDX file into a uint8 array of its declared shape."""
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IdxFormatError(f"{path}: truncated before the magic number")
    zero, type_code, ndim = raw[0] << 8 | raw[1], raw[2], raw[3]
    if zero != 0 or type_code != _UBYTE:
        magic = int.from_bytes(raw[:4], "big")
        raise IdxFormatError(f"{path}: invalid magic number 0x{magic:08x}")
    header_end = 4 + 4 * ndim
    if len(raw) < header_end:
        raise IdxFormatError(f"{path}: truncated dimension header")
    shape = struct.unpack(f">{ndim}I", raw[4:header_end])
    count = int(np.prod(shape)) if shape else 1
    if len(raw) - header_end != count:
        raise IdxFormatError(
            f"{path}: shape {shape} needs {count} bytes, file has "
            f"{len(raw) - header_end}"
        )
    return np.frombuffer(raw, dtype=np.uint8, offset=header_end).reshape(shape)


def read_images(path) -> np.ndarray:
    """Read an image file, checking the 3-dimensional image magic."""
    data = read_idx(path)
    if data.ndim != 3:
        raise IdxFormatError(
            f"{path}: expected magic 0x{IMAGE_MAGIC:08x} (3 dimensions), "
            f"got {data.ndim} dimensions"
        )
    return data


def read_labels(path) -> np.ndarray:
    """Read a label file, checking the 1-dimensional label magic."""
    data = read_idx(path)
    if data.ndim != 1:
        raise IdxFormatError(
            f"{path}: expected magic 0x{LABEL_MAGIC:08x} (1 dimension), "
            f"got {data.ndim} dimensions"
        )
    return data


def write_idx(path, data: np.ndarray) -> None:
    """Write a uint8 array as a plain (uncompressed) IDX file."""
    data = np.ascontiguousarray(data, dtype=np.uint8)
    header = bytes([0, 0, _UBYTE, data.ndim])
    header += struct.pack(f">{data.ndim}I", *data.shape)
    Path(path).write_bytes(header + data.tobytes())
