"""Little-endian binary readers/writers for the model file formats.

Byte-stable by construction: fixed field order, explicit ``<`` layouts, and
an end marker so truncated files fail loudly instead of producing a partial
object.
"""

from __future__ import annotations

import struct
from io import BytesIO

import numpy as np

END_MARKER = b"END\x00"


class FormatError(ValueError):
    pass


class Writer:
    def __init__(self) -> None:
        self._buf = BytesIO()

    def bytes_(self, data: bytes) -> None:
        self._buf.write(data)

    def u8(self, value: int) -> None:
        self._buf.write(struct.pack("<B", value))

    def u32(self, value: int) -> None:
        self._buf.write(struct.pack("<I", value))

    def f64(self, value: float) -> None:
        self._buf.write(struct.pack("<d", value))

    def str_(self, text: str) -> None:
        data = text.encode("utf-8")
        self.u32(len(data))
        self._buf.write(data)

    def array(self, arr: np.ndarray, dtype: str = "<f8") -> None:
        data = np.ascontiguousarray(arr, dtype=dtype)
        self._buf.write(data.tobytes())

    def finish(self) -> bytes:
        self._buf.write(END_MARKER)
        return self._buf.getvalue()


class Reader:
    def __init__(self, data: bytes) -> None:
        self._data = data
        self._pos = 0

    def _take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise FormatError("file is truncated")
        out = self._data[self._pos:self._pos + n]
        self._pos += n
        return out

    def bytes_(self, n: int) -> bytes:
        return self._take(n)

    def u8(self) -> int:
        return struct.unpack("<B", self._take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self._take(4))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self._take(8))[0]

    def str_(self) -> str:
        n = self.u32()
        return self._take(n).decode("utf-8")

    def array(self, shape: tuple[int, ...], dtype: str = "<f8") -> np.ndarray:
        count = int(np.prod(shape)) if shape else 1
        itemsize = np.dtype(dtype).itemsize
        arr = np.frombuffer(self._take(count * itemsize), dtype=dtype)
        return arr.reshape(shape).astype(np.float64) if dtype == "<f8" \
            else arr.reshape(shape).copy()

    def expect_end(self) -> None:
        marker = self._take(len(END_MARKER))
        if marker != END_MARKER:
            raise FormatError("missing end marker")
        if self._pos != len(self._data):
            raise FormatError("trailing bytes after end marker")
