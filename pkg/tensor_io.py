#!/usr/bin/env python3
"""
BEVT binary tensor files

Layout (little-endian):
    magic   4 bytes  b"BEVT"
    version u8       1
    dtype   u8       0 = float32
    ndim    u32
    dims    u32 x ndim
    payload row-major float32

This program is free software: you can redistribute it and/or modify
it under the terms of the GNU General Public License as published by
the Free Software Foundation, either version 3 of the License, or
(at your option) any later version.

This program is distributed in the hope that it will be useful,
but WITHOUT ANY WARRANTY; without even the implied warranty of
MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
GNU General Public License for more details.

You should have received a copy of the GNU General Public License
along with this program.  If not, see <https://www.gnu.org/licenses/>.
"""

import logging
import os
import struct
import tempfile
from pathlib import Path
from typing import Union

import numpy as np

from kit_errors import ErrorKind, TensorFormatError

logger = logging.getLogger(__name__)

MAGIC = b"BEVT"
VERSION = 1
DTYPE_FLOAT32 = 0
_PREAMBLE = struct.Struct("<4sBBI")
_PAYLOAD_DTYPE = np.dtype("<f4")

PathLike = Union[str, "os.PathLike[str]"]


def encode_tensor(array) -> bytes:
    """Serialize an array as BEVT bytes (values cast to float32)."""
    data = np.asarray(array, dtype=_PAYLOAD_DTYPE, order="C")
    header = _PREAMBLE.pack(MAGIC, VERSION, DTYPE_FLOAT32, data.ndim)
    dims = struct.pack(f"<{data.ndim}I", *data.shape)
    return header + dims + data.tobytes(order="C")


def decode_tensor(blob: bytes) -> np.ndarray:
    """Parse BEVT bytes.

    Raises:
        TensorFormatError: bad magic, version or dtype code, a short buffer,
            or bytes past the payload
    """
    if len(blob) < _PREAMBLE.size:
        if not MAGIC.startswith(bytes(blob[:4])):
            raise TensorFormatError("Not a BEVT file", ErrorKind.BAD_MAGIC)
        raise TensorFormatError(f"Header needs {_PREAMBLE.size} bytes, got {len(blob)}", ErrorKind.TRUNCATED)
    magic, version, dtype, ndim = _PREAMBLE.unpack_from(blob)
    if magic != MAGIC:
        raise TensorFormatError(f"Bad magic {magic!r}", ErrorKind.BAD_MAGIC)
    if version != VERSION:
        raise TensorFormatError(f"Unsupported version {version}", ErrorKind.BAD_VERSION)
    if dtype != DTYPE_FLOAT32:
        raise TensorFormatError(f"Unsupported dtype code {dtype}", ErrorKind.BAD_DTYPE)

    offset = _PREAMBLE.size
    dims_end = offset + 4 * ndim
    if len(blob) < dims_end:
        raise TensorFormatError(f"Dimension table needs {4 * ndim} bytes", ErrorKind.TRUNCATED)
    shape = struct.unpack_from(f"<{ndim}I", blob, offset)
    count = int(np.prod(shape, dtype=np.int64))
    expected = dims_end + _PAYLOAD_DTYPE.itemsize * count
    if len(blob) < expected:
        raise TensorFormatError(f"Payload truncated: expected {expected} bytes, got {len(blob)}",
                                ErrorKind.TRUNCATED)
    if len(blob) > expected:
        raise TensorFormatError(f"{len(blob) - expected} unexpected bytes after payload",
                                ErrorKind.TRAILING_DATA)
    if count == 0:
        return np.zeros(shape, dtype=np.float32)
    values = np.frombuffer(blob, dtype=_PAYLOAD_DTYPE, offset=dims_end, count=count)
    return values.reshape(shape).astype(np.float32)


def atomic_write_bytes(path: PathLike, blob: bytes):
    """Write to a temporary sibling, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_tensor(path: PathLike, array):
    blob = encode_tensor(array)
    atomic_write_bytes(path, blob)
    logger.debug("Wrote %s tensor to %s (%d bytes)", np.shape(array), path, len(blob))


def load_tensor(path: PathLike) -> np.ndarray:
    with open(path, "rb") as f:
        return decode_tensor(f.read())
