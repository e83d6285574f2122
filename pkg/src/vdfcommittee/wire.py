"""Byte layout of protocol messages.

A record is::

    u8   tag
    u16  field count
    repeated:
        u8   name length, name (ascii)
        u8   type code: 'i' int64, 'f' float64, 'b' bytes, 's' utf-8 str
        u32  value length, value

Fields are written in the order given, so identical messages always encode
to identical bytes and traces diff cleanly between runs.
"""

from __future__ import annotations

import struct
from enum import IntEnum

__all__ = ["Tag", "encode", "decode"]


class Tag(IntEnum):
    PROPOSAL = 1
    VOTE = 2
    PRECOMMIT = 3
    COMMIT = 4
    ROUND_PROPOSE = 5
    ROUND_VOTE = 6
    BBA_PROPOSE = 7
    BBA_ACK = 8
    STRAWMAN = 9


def _pack(value) -> tuple[bytes, bytes]:
    if isinstance(value, bool):
        return b"i", struct.pack(">q", int(value))
    if isinstance(value, int):
        return b"i", struct.pack(">q", value)
    if isinstance(value, float):
        return b"f", struct.pack(">d", value)
    if isinstance(value, (bytes, bytearray)):
        return b"b", bytes(value)
    if isinstance(value, str):
        return b"s", value.encode()
    if hasattr(value, "__int__"):
        return b"i", struct.pack(">q", int(value))
    raise TypeError(f"cannot encode {type(value).__name__}")


def encode(tag: Tag, **fields) -> bytes:
    out = [struct.pack(">BH", int(tag), len(fields))]
    for name, value in fields.items():
        nb = name.encode("ascii")
        code, body = _pack(value)
        out.append(struct.pack(">B", len(nb)) + nb + code + struct.pack(">I", len(body)) + body)
    return b"".join(out)


def decode(data: bytes) -> tuple[Tag, dict]:
    tag, count = struct.unpack_from(">BH", data, 0)
    pos = 3
    fields = {}
    for _ in range(count):
        (ln,) = struct.unpack_from(">B", data, pos)
        pos += 1
        name = data[pos:pos + ln].decode("ascii")
        pos += ln
        code = data[pos:pos + 1]
        pos += 1
        (vl,) = struct.unpack_from(">I", data, pos)
        pos += 4
        body = data[pos:pos + vl]
        pos += vl
        if code == b"i":
            fields[name] = struct.unpack(">q", body)[0]
        elif code == b"f":
            fields[name] = struct.unpack(">d", body)[0]
        elif code == b"s":
            fields[name] = body.decode()
        else:
            fields[name] = body
    if pos != len(data):
        raise ValueError("trailing bytes after record")
    return Tag(tag), fields
