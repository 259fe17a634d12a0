"""Bit-string helpers.

A bit string is a 1-D numpy array of dtype uint8 holding 0/1 values.
Packing order is MSB-first: bit 0 of a stream becomes the most significant
bit of the first byte, and a final partial byte is zero-padded on the right.
All multi-bit integer fields are big-endian within the stream.
"""

from __future__ import annotations

import zlib

import numpy as np

BitArray = np.ndarray


def bits(values) -> BitArray:
    a = np.asarray(values, dtype=np.uint8)
    if a.ndim != 1 or (a.size and a.max() > 1):
        raise ValueError("bit arrays must be 1-D with values 0/1")
    return a


def empty_bits() -> BitArray:
    return np.zeros(0, dtype=np.uint8)


def int_to_bits(value: int, width: int) -> BitArray:
    if value < 0 or value >> width:
        raise ValueError(f"{value} does not fit in {width} bits")
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)],
                    dtype=np.uint8)


def bits_to_int(b: BitArray) -> int:
    out = 0
    for bit in b.tolist():
        out = (out << 1) | int(bit)
    return out


def bytes_to_bits(data: bytes) -> BitArray:
    if not data:
        return empty_bits()
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def bits_to_bytes(b: BitArray) -> bytes:
    """Pack MSB-first, zero-padding the final partial byte."""
    if b.size == 0:
        return b""
    return np.packbits(b).tobytes()


def crc32_of_bits(b: BitArray) -> int:
    return zlib.crc32(bits_to_bytes(b)) & 0xFFFFFFFF


def concat_bits(*parts: BitArray) -> BitArray:
    parts = [p for p in parts if p.size]
    if not parts:
        return empty_bits()
    return np.concatenate(parts)
