"""Histogram-shift coding over integer host sequences.

One bit is stored at the histogram peak value: a peak-valued symbol becomes
peak + bit, and every symbol strictly between the peak and an empty valley
bin shifts up by one to clear the landing cell.  Extraction reads peak/peak+1
back as 0/1 and shifts the (peak, valley] band down, reproducing the host
exactly.  The valley must have a zero count; hosts whose histogram has no
empty bin to the right of any occupied bin cannot be embedded (no overflow
bookkeeping is kept).

Payload framing (bit layout, MSB-first):

    magic "RW" (16) | version (8) | msg_len (32, bits) | backup_len (32, bits)
    | lsb_backup | message | crc32 (32, over all preceding bits)

The payload is zero-padded to the full embedding capacity so extraction
never needs an out-of-band length.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .bits import (BitArray, bits_to_int, concat_bits, crc32_of_bits,
                   int_to_bits)
from .errors import BadPayloadMagic, CapacityExceeded, CrcMismatch, NoValley

PAYLOAD_MAGIC = 0x5257  # "RW"
PAYLOAD_VERSION = 1
PAYLOAD_HEADER_BITS = 16 + 8 + 32 + 32
PAYLOAD_OVERHEAD_BITS = PAYLOAD_HEADER_BITS + 32  # header + crc


@dataclass(frozen=True)
class HSParams:
    peak: int
    valley: int
    capacity: int

    def __post_init__(self):
        if self.peak >= self.valley:
            raise ValueError("peak must lie left of the valley")


def build_histogram(host, v: int) -> np.ndarray:
    """Counts over the symbol range [V-99, V+99]; index i is symbol V-99+i."""
    idx = np.asarray(host, dtype=np.int64).reshape(-1) - (v - 99)
    if idx.size and (idx.min() < 0 or idx.max() > 198):
        bad = idx.min() + (v - 99) if idx.min() < 0 else idx.max() + (v - 99)
        raise ValueError(f"symbol {bad} outside [{v-99}, {v+99}]")
    return np.bincount(idx, minlength=199).astype(np.int64)


def choose_peak_valley(hist: np.ndarray, v: int,
                       lo: int | None = None,
                       hi: int | None = None) -> HSParams:
    """Pick the embedding peak and its valley from a symbol histogram.

    Among occupied bins that have at least one empty bin strictly to their
    right (within [lo, hi], default the full range), the one with the
    largest count wins; ties go to the smallest symbol value.  The valley is
    the nearest empty bin right of the peak, which minimizes shifted mass.
    """
    hist = np.asarray(hist, dtype=np.int64)
    if hist.sum() == 0:
        raise NoValley("empty histogram")
    base = v - 99
    lo_i = 0 if lo is None else max(0, lo - base)
    hi_i = len(hist) - 1 if hi is None else min(len(hist) - 1, hi - base)

    best = None  # (count, symbol, valley)
    empties = [i for i in range(lo_i, hi_i + 1) if hist[i] == 0]
    if not empties:
        raise NoValley("no empty bin in range")
    for i in range(lo_i, hi_i + 1):
        cnt = int(hist[i])
        if cnt == 0:
            continue
        j = bisect.bisect_right(empties, i)
        if j == len(empties):
            continue  # no empty bin to the right of this peak
        valley_i = empties[j]
        if best is None or cnt > best[0]:
            best = (cnt, base + i, base + valley_i)
    if best is None:
        raise NoValley("no occupied bin has an empty bin to its right")
    return HSParams(peak=best[1], valley=best[2], capacity=best[0])


def hs_embed(host, payload: BitArray, params: HSParams) -> np.ndarray:
    """Embed payload bits (zero-padded to capacity) into the host symbols."""
    host = np.asarray(host, dtype=np.int64)
    if len(payload) > params.capacity:
        raise CapacityExceeded(
            f"{len(payload)} bits into capacity {params.capacity}")
    peak, valley = params.peak, params.valley
    marked = host.copy()
    shift_mask = (host > peak) & (host < valley)
    marked[shift_mask] += 1
    peak_mask = host == peak
    n_peak = int(peak_mask.sum())
    if n_peak != params.capacity:
        raise ValueError(
            f"params.capacity {params.capacity} != peak count {n_peak}")
    padded = np.zeros(params.capacity, dtype=np.int64)
    padded[:len(payload)] = payload
    marked[peak_mask] = peak + padded
    return marked


def hs_extract(marked, params: HSParams) -> tuple[BitArray, np.ndarray]:
    """Inverse of hs_embed: (payload bits incl. padding, restored host)."""
    marked = np.asarray(marked, dtype=np.int64)
    peak, valley = params.peak, params.valley
    bit_mask = (marked == peak) | (marked == peak + 1)
    payload = (marked[bit_mask] - peak).astype(np.uint8)
    restored = marked.copy()
    down_mask = (marked > peak) & (marked <= valley)
    restored[down_mask] -= 1
    return payload, restored


def frame_payload(message: BitArray, lsb_backup: BitArray) -> BitArray:
    if len(message) >= 1 << 32 or len(lsb_backup) >= 1 << 32:
        raise ValueError("length fields are 32-bit")
    head = concat_bits(
        int_to_bits(PAYLOAD_MAGIC, 16),
        int_to_bits(PAYLOAD_VERSION, 8),
        int_to_bits(len(message), 32),
        int_to_bits(len(lsb_backup), 32),
        lsb_backup,
        message,
    )
    return concat_bits(head, int_to_bits(crc32_of_bits(head), 32))


@dataclass(frozen=True)
class PayloadFields:
    version: int
    message: BitArray
    lsb_backup: BitArray


def parse_payload(payload: BitArray) -> PayloadFields:
    """Parse a framed payload, ignoring any zero padding after the CRC."""
    if len(payload) < PAYLOAD_OVERHEAD_BITS:
        raise BadPayloadMagic("payload shorter than a frame header")
    if bits_to_int(payload[:16]) != PAYLOAD_MAGIC:
        raise BadPayloadMagic("payload magic mismatch")
    version = bits_to_int(payload[16:24])
    msg_len = bits_to_int(payload[24:56])
    backup_len = bits_to_int(payload[56:88])
    total = PAYLOAD_HEADER_BITS + backup_len + msg_len + 32
    if total > len(payload):
        raise CrcMismatch("declared lengths exceed available bits")
    body_end = PAYLOAD_HEADER_BITS + backup_len + msg_len
    declared = bits_to_int(payload[body_end:body_end + 32])
    if declared != crc32_of_bits(payload[:body_end]):
        raise CrcMismatch("payload checksum failure")
    backup = payload[PAYLOAD_HEADER_BITS:PAYLOAD_HEADER_BITS + backup_len]
    message = payload[PAYLOAD_HEADER_BITS + backup_len:body_end]
    return PayloadFields(version=version,
                         message=np.array(message, dtype=np.uint8),
                         lsb_backup=np.array(backup, dtype=np.uint8))
