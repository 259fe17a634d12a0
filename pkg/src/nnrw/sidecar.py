"""Embedding-plan metadata in the last mantissa bits of layer weights.

Everything extraction needs is written into mantissa bit 0 of the first
weights of the layer in native flat order, starting at flat index 0 so the
marked model is self-describing.  The displaced original bits are backed up
in the head of the watermark payload.

Plan bit layout (MSB-first):

    plan_version (8) | layer_index (16) | N (16) | c (8) | V (16)
    | peak (16) | valley (16) | d (16)
    | J_prefix: N entries of ceil(log2 d) bits
    | exclusion_count (32) | excluded candidate indices: count x 32
    | plan_crc32 (32, over all preceding bits)

The exclusion list is sparse: it carries only screening failures, which are
rare, while zero/non-finite candidates are recomputed from the marked
weights.  A dense bitmap would be as long as the candidate count and could
never fit through the peak-bin capacity together with its own LSB backup.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import (BitArray, bits_to_int, concat_bits, crc32_of_bits,
                   int_to_bits)
from .errors import CrcMismatch, MalformedPlan, PlanTooLarge

PLAN_VERSION = 1
PLAN_FIXED_BITS = 8 + 16 + 16 + 8 + 16 + 16 + 16 + 16  # through d


def _j_entry_bits(d: int) -> int:
    return (d - 1).bit_length()


@dataclass(frozen=True)
class EmbedPlan:
    layer_index: int
    n_channels: int
    c: int
    v: int
    peak: int
    valley: int
    d: int
    j_prefix: tuple[int, ...]
    excluded: tuple[int, ...] = field(default_factory=tuple)
    plan_version: int = PLAN_VERSION

    def __post_init__(self):
        if len(self.j_prefix) != self.n_channels:
            raise MalformedPlan("J prefix length must equal N")
        if len(set(self.j_prefix)) != len(self.j_prefix):
            raise MalformedPlan("J prefix entries must be distinct")
        if any(not 0 <= j < self.d for j in self.j_prefix):
            raise MalformedPlan("J prefix entry out of range")
        if not 0 < self.n_channels <= self.d:
            raise MalformedPlan(f"N={self.n_channels} outside [1, d]")
        if not 2 <= self.c:
            raise MalformedPlan("pair position must be >= 2")
        if not self.peak < self.valley:
            raise MalformedPlan("peak must lie left of valley")
        if list(self.excluded) != sorted(set(self.excluded)):
            raise MalformedPlan("exclusion list must be sorted and unique")

    def bit_length(self) -> int:
        return (PLAN_FIXED_BITS + self.n_channels * _j_entry_bits(self.d)
                + 32 + 32 * len(self.excluded) + 32)


def encode_plan(plan: EmbedPlan) -> BitArray:
    jb = _j_entry_bits(plan.d)
    parts = [
        int_to_bits(plan.plan_version, 8),
        int_to_bits(plan.layer_index, 16),
        int_to_bits(plan.n_channels, 16),
        int_to_bits(plan.c, 8),
        int_to_bits(plan.v, 16),
        int_to_bits(plan.peak, 16),
        int_to_bits(plan.valley, 16),
        int_to_bits(plan.d, 16),
    ]
    for j in plan.j_prefix:
        parts.append(int_to_bits(j, jb))
    parts.append(int_to_bits(len(plan.excluded), 32))
    for idx in plan.excluded:
        parts.append(int_to_bits(idx, 32))
    body = concat_bits(*parts)
    return concat_bits(body, int_to_bits(crc32_of_bits(body), 32))


def decode_plan(bits: BitArray) -> EmbedPlan:
    if len(bits) < PLAN_FIXED_BITS:
        raise MalformedPlan("plan shorter than fixed header")
    pos = 0

    def take(width: int) -> int:
        nonlocal pos
        if pos + width > len(bits):
            raise MalformedPlan("plan truncated")
        out = bits_to_int(bits[pos:pos + width])
        pos += width
        return out

    version = take(8)
    if version != PLAN_VERSION:
        raise MalformedPlan(f"plan version {version}")
    layer_index = take(16)
    n_channels = take(16)
    c = take(8)
    v = take(16)
    peak = take(16)
    valley = take(16)
    d = take(16)
    if d == 0 or n_channels == 0 or n_channels > d:
        raise MalformedPlan("bad channel counts")
    jb = _j_entry_bits(d)
    j_prefix = tuple(take(jb) for _ in range(n_channels))
    count = take(32)
    if pos + 32 * count + 32 > len(bits):
        raise MalformedPlan("exclusion list exceeds plan bits")
    excluded = tuple(take(32) for _ in range(count))
    declared = take(32)
    if declared != crc32_of_bits(bits[:pos - 32]):
        raise CrcMismatch("plan checksum failure")
    return EmbedPlan(layer_index=layer_index, n_channels=n_channels, c=c,
                     v=v, peak=peak, valley=valley, d=d, j_prefix=j_prefix,
                     excluded=excluded, plan_version=version)


# -- mantissa-LSB region ----------------------------------------------------

def lsb_replace(weights: np.ndarray, bits: BitArray
                ) -> tuple[np.ndarray, BitArray]:
    """Write bits into mantissa bit 0 of the first len(bits) weights.

    Returns (modified copy, displaced original bits).  Pure bit surgery:
    works identically on NaN, infinity and zero patterns.
    """
    flat = np.ascontiguousarray(weights, dtype=np.float32).reshape(-1)
    if len(bits) > flat.size:
        raise PlanTooLarge(
            f"{len(bits)} plan bits into a layer of {flat.size} weights")
    u = flat.view(np.uint32).copy()
    original = (u[:len(bits)] & 1).astype(np.uint8)
    u[:len(bits)] = (u[:len(bits)] & ~np.uint32(1)) | bits.astype(np.uint32)
    return u.view(np.float32).reshape(weights.shape), original


def lsb_read(weights: np.ndarray, count: int) -> BitArray:
    """Mantissa bit 0 of the first count weights in native flat order."""
    flat = np.ascontiguousarray(weights, dtype=np.float32).reshape(-1)
    if count > flat.size:
        raise PlanTooLarge(f"cannot read {count} bits from {flat.size} weights")
    return (flat.view(np.uint32)[:count] & 1).astype(np.uint8)


def read_plan(weights: np.ndarray) -> EmbedPlan:
    """Two-phase plan read: fixed header first, then the sized remainder."""
    flat = np.ascontiguousarray(weights, dtype=np.float32).reshape(-1)
    head = lsb_read(flat, min(PLAN_FIXED_BITS, flat.size))
    if len(head) < PLAN_FIXED_BITS:
        raise MalformedPlan("layer too small to hold a plan header")
    n_channels = bits_to_int(head[24:40])
    d = bits_to_int(head[96:112])
    if d == 0 or n_channels == 0 or n_channels > d:
        raise MalformedPlan("bad channel counts in plan header")
    jb = _j_entry_bits(d)
    upto_count = PLAN_FIXED_BITS + n_channels * jb + 32
    if upto_count > flat.size:
        raise MalformedPlan("plan J prefix exceeds layer size")
    mid = lsb_read(flat, upto_count)
    count = bits_to_int(mid[upto_count - 32:])
    total = upto_count + 32 * count + 32
    if total > flat.size:
        raise MalformedPlan("plan exclusion list exceeds layer size")
    return decode_plan(lsb_read(flat, total))
