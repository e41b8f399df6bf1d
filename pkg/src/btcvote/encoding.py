"""Length-prefixed big-endian framing shared by every canonical encoding."""

from __future__ import annotations

import struct


def lp(data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + data


def lp_int(value: int) -> bytes:
    """Minimal big-endian encoding of a non-negative int, length-prefixed."""
    return lp(value.to_bytes((value.bit_length() + 7) // 8, "big"))


def u16(v: int) -> bytes:
    return struct.pack(">H", v)


def u32(v: int) -> bytes:
    return struct.pack(">I", v)


def u64(v: int) -> bytes:
    return struct.pack(">Q", v)


class Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise ValueError("truncated input")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack(">I", self.take(4))[0]

    def lp(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> None:
        if self.pos != len(self.data):
            raise ValueError("trailing bytes")
