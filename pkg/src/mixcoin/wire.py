"""Canonical tag-length-value encoding for frame payloads.

Supports None, bool, int, bytes, str and (nested) tuples/lists. Lists come
back as tuples. ``unpack`` raises :class:`MalformedPayload` on anything it
cannot parse, so honest parties can turn garbage into an abort.
"""
from __future__ import annotations

import struct


class MalformedPayload(ValueError):
    pass


_NONE, _FALSE, _TRUE, _INT, _BYTES, _STR, _SEQ = b"N", b"F", b"T", b"I", b"B", b"S", b"L"


def _pack(obj, out: list) -> None:
    if obj is None:
        out.append(_NONE)
    elif obj is True:
        out.append(_TRUE)
    elif obj is False:
        out.append(_FALSE)
    elif isinstance(obj, int):
        n = (obj.bit_length() + 8) // 8
        body = obj.to_bytes(n, "big", signed=True)
        out += [_INT, struct.pack(">I", n), body]
    elif isinstance(obj, (bytes, bytearray)):
        out += [_BYTES, struct.pack(">I", len(obj)), bytes(obj)]
    elif isinstance(obj, str):
        body = obj.encode()
        out += [_STR, struct.pack(">I", len(body)), body]
    elif isinstance(obj, (tuple, list)):
        out += [_SEQ, struct.pack(">I", len(obj))]
        for item in obj:
            _pack(item, out)
    else:
        raise TypeError(f"cannot encode {type(obj).__name__}")


def pack(obj) -> bytes:
    out: list = []
    _pack(obj, out)
    return b"".join(out)


def _unpack(data: bytes, pos: int):
    if pos >= len(data):
        raise MalformedPayload("truncated payload")
    tag = data[pos:pos + 1]
    pos += 1
    if tag == _NONE:
        return None, pos
    if tag == _TRUE:
        return True, pos
    if tag == _FALSE:
        return False, pos
    if tag not in (_INT, _BYTES, _STR, _SEQ):
        raise MalformedPayload(f"unknown tag {tag!r}")
    if pos + 4 > len(data):
        raise MalformedPayload("truncated length")
    (n,) = struct.unpack_from(">I", data, pos)
    pos += 4
    if tag == _SEQ:
        items = []
        for _ in range(n):
            item, pos = _unpack(data, pos)
            items.append(item)
        return tuple(items), pos
    if pos + n > len(data):
        raise MalformedPayload("truncated body")
    body = data[pos:pos + n]
    pos += n
    if tag == _INT:
        return int.from_bytes(body, "big", signed=True), pos
    if tag == _BYTES:
        return body, pos
    try:
        return body.decode(), pos
    except UnicodeDecodeError as exc:
        raise MalformedPayload("bad utf-8") from exc


def unpack(data: bytes):
    obj, pos = _unpack(data, 0)
    if pos != len(data):
        raise MalformedPayload("trailing bytes")
    return obj


def bits_to_bytes(value: int, nbits: int) -> bytes:
    return value.to_bytes((nbits + 7) // 8, "big")


def bytes_to_bits(data: bytes, nbits: int) -> int:
    return int.from_bytes(data, "big") & ((1 << nbits) - 1)
