"""Independent oracle implementations used to check the library.

Each oracle takes a deliberately different route from the code under test:
digit oracles go through decimal.Decimal instead of integer scaling, the
convolution oracle is a naive six-loop sum, the histogram-shift oracle is a
literal per-element transliteration of the coding rule, and the SHA-256
here is a from-scratch implementation of the FIPS 180-4 compression
function.
"""

from __future__ import annotations

import struct
from collections import Counter
from decimal import Decimal
from math import log2

import numpy as np

# -- pure-python SHA-256 ------------------------------------------------------

_K = [
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
    0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
    0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
    0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
    0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
    0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
    0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
    0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2,
]


def _rotr(x, n):
    return ((x >> n) | (x << (32 - n))) & 0xFFFFFFFF


def sha256_pure(data: bytes) -> bytes:
    h = [0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
         0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19]
    length = len(data) * 8
    data = data + b"\x80"
    data += b"\x00" * ((56 - len(data) % 64) % 64)
    data += struct.pack(">Q", length)
    for off in range(0, len(data), 64):
        w = list(struct.unpack(">16I", data[off:off + 64]))
        for i in range(16, 64):
            s0 = _rotr(w[i - 15], 7) ^ _rotr(w[i - 15], 18) ^ (w[i - 15] >> 3)
            s1 = _rotr(w[i - 2], 17) ^ _rotr(w[i - 2], 19) ^ (w[i - 2] >> 10)
            w.append((w[i - 16] + s0 + w[i - 7] + s1) & 0xFFFFFFFF)
        a, b, c, d, e, f, g, hh = h
        for i in range(64):
            s1 = _rotr(e, 6) ^ _rotr(e, 11) ^ _rotr(e, 25)
            ch = (e & f) ^ (~e & g)
            t1 = (hh + s1 + ch + _K[i] + w[i]) & 0xFFFFFFFF
            s0 = _rotr(a, 2) ^ _rotr(a, 13) ^ _rotr(a, 22)
            maj = (a & b) ^ (a & c) ^ (b & c)
            t2 = (s0 + maj) & 0xFFFFFFFF
            a, b, c, d, e, f, g, hh = ((t1 + t2) & 0xFFFFFFFF, a, b, c,
                                       (d + t1) & 0xFFFFFFFF, e, f, g)
        h = [(x + y) & 0xFFFFFFFF for x, y in zip(h, [a, b, c, d, e, f, g, hh])]
    return struct.pack(">8I", *h)


# -- decimal digit oracle -----------------------------------------------------

def decimal_digits(w) -> tuple[int, int, str]:
    """(sign, e, digit string) of the exact expansion, via Decimal.

    float(np.float32(x)) converts exactly (binary32 embeds in binary64) and
    Decimal(float) is the exact value of the double, so the digit string is
    the true finite expansion.
    """
    d = Decimal(float(np.float32(w)))
    if d == 0 or not d.is_finite():
        raise ValueError("zero or non-finite")
    # as_tuple is exact; arithmetic (even abs) would round to context prec
    tup = d.as_tuple()
    sign = -1 if tup.sign else 1
    s = "".join(map(str, tup.digits)).rstrip("0") or "0"
    e = len(tup.digits) - 1 + tup.exponent
    return sign, e, s


def decimal_pair(w, c: int) -> int:
    """Floor digit pair via the Decimal expansion."""
    _, e, s = decimal_digits(w)
    def digit(g):  # 1-based significant digit
        return int(s[g - 1]) if g - 1 < len(s) else 0
    return 10 * digit(c) + digit(c + 1)


def decimal_exponent_oracle(w) -> int:
    return decimal_digits(w)[1]


# -- convolution oracle -------------------------------------------------------

def conv_naive(image, weights, stride=1, padding=0):
    image = np.asarray(image, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    c, h, w = image.shape
    d, _, k, _ = weights.shape
    hp, wp = h + 2 * padding, w + 2 * padding
    padded = np.zeros((c, hp, wp))
    padded[:, padding:padding + h, padding:padding + w] = image
    h_out = (hp - k) // stride + 1
    w_out = (wp - k) // stride + 1
    out = np.zeros((d, h_out, w_out))
    for oc in range(d):
        for oy in range(h_out):
            for ox in range(w_out):
                acc = 0.0
                for ic in range(c):
                    for ky in range(k):
                        for kx in range(k):
                            acc += (padded[ic, oy * stride + ky,
                                           ox * stride + kx]
                                    * weights[oc, ic, ky, kx])
                out[oc, oy, ox] = acc
    return out


# -- entropy / binning oracle -------------------------------------------------

def bin_occupancy(column, m):
    column = np.asarray(column, dtype=np.float64)
    lo, hi = column.min(), column.max()
    counts = Counter()
    for v in column:
        if hi == lo:
            counts[0] += 1
            continue
        idx = int(np.floor((v - lo) * m / (hi - lo)))
        counts[min(idx, m - 1)] += 1
    return [counts.get(i, 0) for i in range(m)]


def entropy_oracle(column, m) -> float:
    counts = bin_occupancy(column, m)
    total = sum(counts)
    return -sum((n / total) * log2(n / total) for n in counts if n)


def bin_search_oracle(column) -> int:
    column = np.asarray(column, dtype=np.float64)
    if column.min() == column.max():
        return 1
    for m in range(len(column), 0, -1):
        if all(n > 0 for n in bin_occupancy(column, m)):
            return m
    return 1


def symbol_entropy_oracle(symbols) -> float:
    counts = Counter(int(s) for s in symbols)
    total = sum(counts.values())
    return -sum((n / total) * log2(n / total) for n in counts.values())


# -- histogram-shift oracle ---------------------------------------------------

def hs_embed_reference(host, bits, peak, valley):
    """Literal per-element transliteration of the shift-and-embed rule."""
    out = []
    j = 0
    for s in host:
        s = int(s)
        if s == peak:
            b = int(bits[j]) if j < len(bits) else 0
            j += 1
            out.append(s + b)
        elif peak < s < valley:
            out.append(s + 1)
        else:
            out.append(s)
    return out


def hs_extract_reference(marked, peak, valley):
    bits, restored = [], []
    for s in marked:
        s = int(s)
        if s == peak + 1:
            bits.append(1)
        elif s == peak:
            bits.append(0)
        if peak < s <= valley:
            restored.append(s - 1)
        else:
            restored.append(s)
    return bits, restored


def choose_peak_valley_oracle(hist, base):
    """Exhaustive scan: best occupied bin having an empty bin to its right."""
    best = None
    for i, cnt in enumerate(hist):
        if cnt == 0:
            continue
        valley = None
        for j in range(i + 1, len(hist)):
            if hist[j] == 0:
                valley = j
                break
        if valley is None:
            continue
        if best is None or cnt > best[0]:
            best = (cnt, base + i, base + valley)
    return best  # (capacity, peak, valley) or None
