"""Host-sequence construction and carrier screening.

Candidate order over a (d, c_in, k, k) layer is normative: channels in
ranking order J[0..N), then input channels, then the k x k kernel entries
row-major.  Candidate t maps to flat tensor index
J[t // (c_in*k*k)] * c_in*k*k + t % (c_in*k*k).

Three exclusion classes keep the round trip bit-exact:

* recomputable -- weights whose bit pattern with the mantissa LSB cleared
  is zero or non-finite, plus every weight inside the plan's LSB region
  (flat index below the plan bit length).  Extraction re-derives both from
  the marked model: the LSB mask makes the zero test stable under plan
  bits, and the region length falls out of the plan header.  Keeping
  carriers out of the LSB region means no weight ever receives both a
  digit-pair edit and an LSB edit, whose bit-level interaction is not
  reversible in general.
* static -- the digit pair must read identically through pair_value (used
  on the clean weights at embed time) and the guarded decoder (used on the
  marked weights at extraction); values within one quantum of a pair
  boundary can differ and are dropped.
* move -- a symbol inside [peak, valley) will be shifted, so its one-unit
  pair edit must pass write_pair verification.

Static and move failures are rare and travel in the embedding plan as a
sparse index list; recomputable exclusions cost nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import digits
from .errors import BadPermutation, NOutOfRange, NoUsableWeights


def candidate_flat_indices(shape: tuple[int, ...],
                           j_prefix: np.ndarray) -> np.ndarray:
    """Flat tensor indices of all candidates in normative traversal order.

    j_prefix holds the first N entries of the channel ranking; it must be
    duplicate-free with every entry < d.
    """
    d, c_in, kh, kw = shape
    per = c_in * kh * kw
    sel = np.asarray(j_prefix, dtype=np.intp)
    if sel.size == 0 or sel.size > d:
        raise NOutOfRange(f"N={sel.size} outside [1, {d}]")
    if len(set(sel.tolist())) != sel.size or sel.min() < 0 or sel.max() >= d:
        raise BadPermutation("channel selection must be distinct indices < d")
    return (sel[:, None] * per + np.arange(per)[None, :]).reshape(-1)


def recomputable_exclusion_mask(values: np.ndarray, coords: np.ndarray,
                                region_len: int) -> np.ndarray:
    """True where a candidate can never carry, derivable from marked bits.

    Zero/non-finite detection clears the mantissa LSB first so a plan bit
    written over a zero weight cannot disguise it, and any candidate whose
    flat index lies inside the plan's LSB region is treated as unusable.
    Both rules evaluate identically on the clean and the marked model.
    """
    bits = np.ascontiguousarray(values, dtype=np.float32).view(np.uint32)
    cleared = bits & np.uint32(~np.uint32(1))
    mag = cleared & np.uint32(0x7FFFFFFF)
    exp = mag >> np.uint32(23)
    out = (mag == 0) | (exp == 0xFF)
    if region_len > 0:
        out = out | (np.asarray(coords) < region_len)
    return out


@dataclass(frozen=True)
class HostSequence:
    """Integer symbols with back-pointers into the weight tensor."""
    symbols: np.ndarray        # int64
    coords: np.ndarray         # flat tensor indices, parallel to symbols
    candidate_pos: np.ndarray  # candidate index of each symbol
    c: int
    v: int


@dataclass(frozen=True)
class ExclusionMap:
    """Bitmap over all candidate positions; True = excluded."""
    bitmap: np.ndarray
    stored_indices: np.ndarray  # sparse subset that must travel in the plan

    @property
    def excluded_count(self) -> int:
        return int(self.bitmap.sum())


def _symbols_for(flat: np.ndarray, indices: np.ndarray, c: int, v: int,
                 decode: bool) -> np.ndarray:
    """Symbols of the given weights; caller guarantees usability."""
    vals = flat[indices]
    pairs = digits.pair_batch(vals, c, decode=decode)
    signs = np.where(vals > 0, 1, -1).astype(np.int64)
    return signs * pairs + v


def build_host(weights: np.ndarray, j_prefix: np.ndarray, c: int, v: int,
               region_len: int = 0, sample_limit: int | None = None
               ) -> tuple[HostSequence, ExclusionMap]:
    """Host symbols over usable candidates, plus the exclusion bitmap.

    Only the recomputable class is excluded here; screening for static and
    move fragility refines the map afterwards.  sample_limit, when set,
    evenly subsamples the usable candidates (for scans that only need the
    symbol distribution, never for an embedding host).
    """
    weights = np.ascontiguousarray(weights, dtype=np.float32)
    if weights.ndim != 4:
        raise ValueError("layer weights must be rank-4")
    cand = candidate_flat_indices(weights.shape, j_prefix)
    flat = weights.reshape(-1)
    excluded = recomputable_exclusion_mask(flat[cand], cand, region_len)
    usable_pos = np.nonzero(~excluded)[0]
    if sample_limit is not None and usable_pos.size > sample_limit:
        step = usable_pos.size / sample_limit
        usable_pos = usable_pos[(np.arange(sample_limit) * step).astype(np.intp)]
    coords = cand[usable_pos]
    symbols = _symbols_for(flat, coords, c, v, decode=False)
    host = HostSequence(symbols=symbols, coords=coords,
                        candidate_pos=usable_pos, c=c, v=v)
    emap = ExclusionMap(bitmap=excluded.copy(),
                        stored_indices=np.zeros(0, dtype=np.int64))
    return host, emap


def static_screen(flat: np.ndarray, host: HostSequence,
                  emap: ExclusionMap) -> tuple[HostSequence, ExclusionMap]:
    """Drop carriers whose floor pair and guarded decode disagree.

    Embedding reads host symbols with pair_value on the clean weights;
    extraction re-reads them with pair_decode on the marked weights.  The
    two agree except within one quantum of a pair boundary; stragglers are
    recorded as stored exclusions.
    """
    c, v = host.c, host.v
    decoded = digits.pair_batch(flat[host.coords], c, decode=True)
    pairs = np.abs(host.symbols - v)
    keep = decoded == pairs
    stored = [int(p) for p in host.candidate_pos[~keep]]
    return _apply_exclusions(host, emap, keep, stored)


def move_screen(flat: np.ndarray, host: HostSequence, emap: ExclusionMap,
                peak: int, valley: int) -> tuple[HostSequence, ExclusionMap]:
    """Verify every symbol in [peak, valley) can take its +1 move.

    The pair edit must pass write_pair verification: sign and decimal
    exponent preserved, guarded decode reads the new pair, and writing the
    old pair back reproduces the weight bit-for-bit.
    """
    c, v = host.c, host.v
    keep = np.ones(len(host.symbols), dtype=bool)
    stored = []
    movers = np.nonzero((host.symbols >= peak) & (host.symbols < valley))[0]
    for i in movers:
        w = flat[host.coords[i]]
        if not _move_ok(w, c, v, int(host.symbols[i])):
            keep[i] = False
            stored.append(int(host.candidate_pos[i]))
    return _apply_exclusions(host, emap, keep, stored)


def _move_ok(w, c: int, v: int, symbol: int) -> bool:
    pair = abs(symbol - v)
    sigma = 1 if w > 0 else -1
    new_pair = pair + sigma        # symbol moves +1
    if not 0 <= new_pair <= 99:
        return False
    return digits.write_pair(w, c, new_pair) is not None


def _apply_exclusions(host: HostSequence, emap: ExclusionMap,
                      keep: np.ndarray, stored: list[int]):
    if not stored:
        return host, emap
    bitmap = emap.bitmap.copy()
    bitmap[np.array(stored, dtype=np.int64)] = True
    new_stored = np.sort(np.concatenate(
        [emap.stored_indices, np.array(stored, dtype=np.int64)]))
    host2 = HostSequence(symbols=host.symbols[keep],
                         coords=host.coords[keep],
                         candidate_pos=host.candidate_pos[keep],
                         c=host.c, v=host.v)
    return host2, ExclusionMap(bitmap=bitmap, stored_indices=new_stored)


def rebuild_marked_host(weights: np.ndarray, j_prefix: np.ndarray,
                        c: int, v: int, region_len: int,
                        stored_indices: np.ndarray) -> HostSequence:
    """Extraction-side host over the marked weights.

    Skips the recomputable class (recomputed from the marked bits and the
    plan's region length) and the stored exclusion list, then reads symbols
    with the guarded decoder so carriers parked one rounding step under a
    pair boundary read back as the pair that was written.
    """
    weights = np.ascontiguousarray(weights, dtype=np.float32)
    cand = candidate_flat_indices(weights.shape, j_prefix)
    flat = weights.reshape(-1)
    excluded = recomputable_exclusion_mask(flat[cand], cand, region_len)
    stored = np.asarray(stored_indices, dtype=np.int64)
    if stored.size:
        if stored.min() < 0 or stored.max() >= len(cand):
            raise ValueError("stored exclusion index out of range")
        excluded[stored] = True
    usable_pos = np.nonzero(~excluded)[0]
    coords = cand[usable_pos]
    symbols = _symbols_for(flat, coords, c, v, decode=True)
    return HostSequence(symbols=symbols, coords=coords,
                        candidate_pos=usable_pos, c=c, v=v)


def select_pair_position(weights: np.ndarray, j_prefix: np.ndarray, v: int,
                         c_range: tuple[int, int] = (2, 5),
                         ) -> tuple[int, list[tuple[int, float, int]]]:
    """Choose the digit-pair position with minimum symbol entropy.

    Scans c over [c_range], building the symbol multiset over all usable
    candidates (zero/non-finite skipped for every c), and returns the c
    whose empirical Shannon entropy is minimal, ties to the smaller c.
    Also returns the scan table as (c, entropy_bits, usable_count) rows.
    """
    weights = np.ascontiguousarray(weights, dtype=np.float32)
    cand = candidate_flat_indices(weights.shape, j_prefix)
    flat = weights.reshape(-1)
    excluded = recomputable_exclusion_mask(flat[cand], cand, 0)
    usable = cand[~excluded]
    if usable.size == 0:
        raise NoUsableWeights("no finite nonzero candidate weights")
    table = []
    best = None
    for c in range(c_range[0], c_range[1] + 1):
        symbols = _symbols_for(flat, usable, c, v, decode=False)
        counts = np.bincount(symbols - (v - 99), minlength=199)
        p = counts[counts > 0] / symbols.size
        entropy = float(-(p * np.log2(p)).sum())
        table.append((c, entropy, int(symbols.size)))
        if best is None or entropy < best[1]:
            best = (c, entropy)
    return best[0], table
