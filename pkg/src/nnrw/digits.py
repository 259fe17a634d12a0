"""Exact decimal-digit codec for binary32 weights.

Every finite nonzero binary32 value is a dyadic rational M*2^E and therefore
has a finite exact decimal expansion.  All digit logic here works on that
exact expansion with arbitrary-precision integers; no floating-point
logarithms or string formatting are involved, so results are identical on
every platform.

Significant digits are counted from the first nonzero digit: for
w = +-0.00n1n2n3... the pair at position c is the two-digit integer
10*n_c + n_{c+1}.  Two readers are provided:

* ``pair_value``  -- plain floor semantics on the exact expansion.
* ``pair_decode`` -- the same, except that a value lying less than one
  representation quantum (one unit in the last place of its binade) below
  the next pair boundary is read as the next pair.  Round-to-nearest can
  park an edited weight just below the decimal it was aimed at;
  ``pair_decode`` reads such a weight as the pair that was written.  The
  two readers agree except within 1 ulp of a pair boundary, and carriers
  where they disagree on the *original* value are rejected by screening.

``write_pair`` performs the exact-decimal pair substitution, rounds the
result to the nearest binary32 (half-to-even), and verifies sign, decimal
exponent, pair readback and bit-exact reversibility before accepting.  A
carrier failing any check is reported as fragile (``None``) so callers can
exclude it instead of silently corrupting the round trip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import PairOutOfRange, ZeroOrNonFinite

_LOG10_2 = math.log10(2.0)

_POW10: dict[int, int] = {}
_POW5: dict[int, int] = {}


def _pow10(k: int) -> int:
    v = _POW10.get(k)
    if v is None:
        v = 10 ** k
        _POW10[k] = v
    return v


def _pow5(k: int) -> int:
    v = _POW5.get(k)
    if v is None:
        v = 5 ** k
        _POW5[k] = v
    return v


# -- binary32 bit plumbing ---------------------------------------------------

def f32_bits(w) -> int:
    """IEEE-754 bit pattern of a binary32 value as an unsigned int."""
    return int(np.float32(w).view(np.uint32))


def bits_f32(u: int) -> np.float32:
    return np.uint32(u).view(np.float32)


def set_mantissa_lsb(w, bit: int) -> np.float32:
    u = f32_bits(w)
    return bits_f32((u & ~1) | (bit & 1))


def flip_mantissa_lsb(w) -> np.float32:
    return bits_f32(f32_bits(w) ^ 1)


def clear_mantissa_lsb(w) -> np.float32:
    return bits_f32(f32_bits(w) & ~1)


def decompose(w) -> tuple[int, int, int]:
    """Split a finite nonzero binary32 into (sign, M, E) with |w| = M * 2^E.

    M is the integer significand (< 2^24) and 2^E is the representation
    quantum of w's binade (ulp), including the subnormal range where
    E = -149.
    """
    u = f32_bits(w)
    sign = -1 if (u >> 31) else 1
    exp_field = (u >> 23) & 0xFF
    frac = u & 0x7FFFFF
    if exp_field == 0xFF or (exp_field == 0 and frac == 0):
        raise ZeroOrNonFinite(f"no digit expansion for {w!r}")
    if exp_field == 0:
        return sign, frac, -149
    return sign, (1 << 23) | frac, exp_field - 150


def _cmp_pow2(num: int, den: int, k: int) -> int:
    """Compare num/den with 2^k; returns -1, 0, or 1."""
    if k >= 0:
        rhs = den << k
        lhs = num
    else:
        lhs = num << (-k)
        rhs = den
    return (lhs > rhs) - (lhs < rhs)


def _cmp_value_pow10(m: int, e2: int, k: int) -> int:
    """Compare M*2^e2 with 10^k; returns -1, 0, or 1."""
    lhs, rhs = m, 1
    if k >= 0:
        rhs = _pow10(k)
    else:
        lhs = m * _pow10(-k)
    if e2 >= 0:
        lhs <<= e2
    else:
        rhs <<= -e2
    return (lhs > rhs) - (lhs < rhs)


def _dec_exp_raw(m: int, e2: int) -> int:
    """Largest e with 10^e <= M*2^e2, computed exactly."""
    e = math.floor(math.log10(m) + e2 * _LOG10_2)
    while _cmp_value_pow10(m, e2, e) < 0:
        e -= 1
    while _cmp_value_pow10(m, e2, e + 1) >= 0:
        e += 1
    return e


def decimal_exponent(w) -> int:
    """e such that 10^e <= |w| < 10^(e+1)."""
    _, m, e2 = decompose(w)
    return _dec_exp_raw(m, e2)


def _scaled(m: int, e2: int, t: int) -> tuple[int, int]:
    """num/den == M * 2^e2 * 10^t as a pair of positive integers."""
    num, den = m, 1
    if t >= 0:
        num *= _pow10(t)
    else:
        den = _pow10(-t)
    if e2 >= 0:
        num <<= e2
    else:
        den <<= -e2
    return num, den


# -- digit views -------------------------------------------------------------

@dataclass(frozen=True)
class DigitView:
    """Exact decimal expansion of a binary32 value.

    digits[0] is the first significant (nonzero) digit n1 and
    value == sign * sum(digits[i] * 10^(e - i)).
    """
    sign: int
    e: int
    digits: tuple[int, ...]

    def reconstruct(self) -> Fraction:
        total = Fraction(0)
        for i, d in enumerate(self.digits):
            total += Fraction(d, 1) * Fraction(10) ** (self.e - i)
        return self.sign * total


def digit_view(w) -> DigitView:
    sign, m, e2 = decompose(w)
    while m % 2 == 0 and e2 < 0:
        m //= 2
        e2 += 1
    if e2 >= 0:
        intval = m << e2
        dec_shift = 0
    else:
        # M * 2^e2 == (M * 5^-e2) * 10^e2: an integer scaled by 10^e2.
        intval = m * _pow5(-e2)
        dec_shift = e2
    s = str(intval).rstrip("0")
    e = len(str(intval)) - 1 + dec_shift
    return DigitView(sign=sign, e=e, digits=tuple(int(ch) for ch in s))


def _pair_floor_raw(m: int, e2: int, e: int, c: int) -> int:
    num, den = _scaled(m, e2, c - e)
    return (num // den) % 100


def _pair_decode_raw(m: int, e2: int, e: int, c: int) -> int:
    """Floor pair, bumped by one when the exact value sits less than one
    quantum (2^e2) below the next pair boundary."""
    num, den = _scaled(m, e2, c - e)
    q, r = divmod(num, den)
    pair = q % 100
    if r == 0:
        return pair
    # bump iff (den - r)/den * 10^(e-c) < 2^e2
    a, b = den - r, den
    g = e - c
    if g >= 0:
        a *= _pow10(g)
    else:
        b *= _pow10(-g)
    if e2 >= 0:
        b <<= e2
    else:
        a <<= -e2
    if a < b:
        return (pair + 1) % 100
    return pair


def pair_value(w, c: int) -> int:
    """The intercepted digit pair (n_c, n_{c+1}) as an integer in [0, 99].

    Equals floor(|w| * 10^(c-e)) mod 100 on the exact expansion; digits
    beyond the end of the expansion read as zero.
    """
    if c < 2:
        raise ValueError("pair position must be >= 2; n1 is never modified")
    sign, m, e2 = decompose(w)
    return _pair_floor_raw(m, e2, _dec_exp_raw(m, e2), c)


def pair_decode(w, c: int) -> int:
    """Boundary-guarded pair reader (see module docstring)."""
    if c < 2:
        raise ValueError("pair position must be >= 2; n1 is never modified")
    sign, m, e2 = decompose(w)
    return _pair_decode_raw(m, e2, _dec_exp_raw(m, e2), c)


def pair_batch(values: np.ndarray, c: int, decode: bool = False) -> np.ndarray:
    """Pairs of a float32 array (finite nonzero throughout), batched.

    The IEEE decomposition is vectorized; only the exact integer scaling
    runs per element.  Semantics match pair_value / pair_decode exactly.
    """
    if c < 2:
        raise ValueError("pair position must be >= 2")
    arr = np.ascontiguousarray(values, dtype=np.float32)
    bits = arr.reshape(-1).view(np.uint32)
    expf = (bits >> np.uint32(23)) & np.uint32(0xFF)
    frac = bits & np.uint32(0x7FFFFF)
    m_arr = np.where(expf == 0, frac, frac | np.uint32(1 << 23))
    e2_arr = np.where(expf == 0, -149, expf.astype(np.int64) - 150)
    reader = _pair_decode_raw if decode else _pair_floor_raw
    out = np.empty(bits.size, dtype=np.int64)
    ms = m_arr.tolist()
    e2s = e2_arr.tolist()
    for i in range(bits.size):
        m, e2 = ms[i], e2s[i]
        out[i] = reader(m, e2, _dec_exp_raw(m, e2), c)
    return out


def host_symbol(w, c: int, v: int) -> int:
    """sign(w) * pair_value(w, c) + V; always in [V-99, V+99]."""
    if c < 2:
        raise ValueError("pair position must be >= 2")
    sign, m, e2 = decompose(w)
    return sign * _pair_floor_raw(m, e2, _dec_exp_raw(m, e2), c) + v


# -- correctly rounded write-back --------------------------------------------

def round_fraction_to_f32(value: Fraction) -> np.float32 | None:
    """Round an exact rational to the nearest binary32, ties to even.

    Returns None if the magnitude overflows the binary32 range.  This is a
    single correct rounding; going through float64 first could double-round.
    """
    return _round_num_den_to_f32(value.numerator, value.denominator)


def _round_num_den_to_f32(num: int, den: int) -> np.float32 | None:
    if num == 0:
        return np.float32(0.0)
    sign = 0
    if num < 0:
        sign = 1
        num = -num

    e2 = num.bit_length() - den.bit_length()
    while _cmp_pow2(num, den, e2) < 0:
        e2 -= 1
    while _cmp_pow2(num, den, e2 + 1) >= 0:
        e2 += 1
    # now 2^e2 <= num/den < 2^(e2+1)

    if e2 < -126:
        shift = 149  # subnormal quantum 2^-149
    else:
        shift = 23 - e2
    a, b = num, den
    if shift >= 0:
        a <<= shift
    else:
        b <<= -shift
    q, r = divmod(a, b)
    if 2 * r > b or (2 * r == b and q & 1):
        q += 1

    if e2 < -126:
        if q >= 1 << 23:  # rounded up into the normal range
            return bits_f32((sign << 31) | (1 << 23))
        return bits_f32((sign << 31) | q)

    if q == 1 << 24:
        q = 1 << 23
        e2 += 1
    if e2 > 127:
        return None
    exp_field = e2 + 127
    return bits_f32((sign << 31) | (exp_field << 23) | (q & 0x7FFFFF))


def exact_value(w) -> Fraction:
    """The binary32 value as an exact rational."""
    sign, m, e2 = decompose(w)
    if e2 >= 0:
        return Fraction(sign * (m << e2), 1)
    return Fraction(sign * m, 1 << -e2)


def _pair_tail_is_zero(m: int, e2: int, e: int, c: int) -> bool:
    """True when the expansion terminates at or before digit c+1."""
    num, den = _scaled(m, e2, c - e)
    return num % den == 0


def _target_num_den(m: int, e2: int, delta: int, g: int) -> tuple[int, int]:
    """(num, den) for M*2^e2 + delta*10^g, exact and possibly unreduced."""
    num, den = m, 1
    if e2 >= 0:
        num <<= e2
    else:
        den <<= -e2
    if g >= 0:
        dnum, dden = delta * _pow10(g), 1
    else:
        dnum, dden = delta, _pow10(-g)
    return num * dden + dnum * den, den * dden


def _value_neighbors(ub: int) -> tuple[int, ...]:
    """Bit patterns of ub and its adjacent binary32 magnitudes, same sign."""
    sign = ub & 0x80000000
    mag = ub & 0x7FFFFFFF
    out = [ub]
    if mag + 1 < 0x7F800000:
        out.append(sign | (mag + 1))
    if mag > 0:
        out.append(sign | (mag - 1))
    return tuple(out)


def _select_write(w, c: int, new_pair: int) -> np.float32 | None:
    """Choose the binary32 result of a one-unit pair edit.

    The exact decimal target |w| + (new_pair - pair) * 10^(e-c) usually has
    no binary32 representation, and near binade bottoms the two floats
    bracketing it can belong to different pairs.  Candidates are the
    correctly rounded target and its two neighbours; any that changes sign
    or decimal exponent or does not decode to new_pair is discarded, then
    the closest surviving candidate wins (ties: terminating pair tail, then
    smaller bit pattern).
    """
    sign, m, e2 = decompose(w)
    e = _dec_exp_raw(m, e2)
    old = _pair_decode_raw(m, e2, e, c)
    delta = new_pair - old
    if delta == 0:
        return np.float32(w)
    tnum, tden = _target_num_den(m, e2, delta, e - c)
    if tnum <= 0:
        return None
    y0 = _round_num_den_to_f32(sign * tnum, tden)
    if y0 is None:
        return None
    best = None
    for ub in _value_neighbors(f32_bits(y0)):
        y = bits_f32(ub)
        try:
            sy, my, ey = decompose(y)
        except ZeroOrNonFinite:
            continue
        if sy != sign:
            continue
        edec = _dec_exp_raw(my, ey)
        if edec != e:
            continue
        if _pair_decode_raw(my, ey, edec, c) != new_pair:
            continue
        # |y| - target as an exact cross-multiplied integer
        ynum, yden = (my << ey, 1) if ey >= 0 else (my, 1 << -ey)
        dist = abs(ynum * tden - tnum * yden)
        dden = yden * tden
        tail0 = _pair_tail_is_zero(my, ey, edec, c)
        key = (Fraction(dist, dden), not tail0, ub)
        if best is None or key < best[0]:
            best = (key, y)
    return None if best is None else best[1]


@lru_cache(maxsize=1 << 17)
def _write_pair_by_bits(ubits: int, c: int, new_pair: int) -> int | None:
    """Bit-pattern core of write_pair; cacheable because it is pure.

    Spike-heavy weight populations repeat a handful of bit patterns
    thousands of times, so screening and restoration hit this cache hard.
    """
    w = bits_f32(ubits)
    sign, m, e2 = decompose(w)
    e = _dec_exp_raw(m, e2)
    old = _pair_decode_raw(m, e2, e, c)
    if abs(new_pair - old) > 1:
        raise ValueError("histogram shifting moves pairs by at most one unit")
    if new_pair == old:
        return ubits

    w2 = _select_write(w, c, new_pair)
    if w2 is None:
        return None
    back = _select_write(w2, c, old)
    if back is None or f32_bits(back) != ubits:
        return None
    return f32_bits(w2)


def write_pair(w, c: int, new_pair: int) -> np.float32 | None:
    """Verified pair substitution; returns None when the carrier is fragile.

    Accepts only moves of at most one pair unit.  The result w' keeps the
    sign and decimal exponent of w and decodes to new_pair (guaranteed by
    candidate selection), and writing the old pair back into w' must
    reproduce w bit-for-bit; otherwise the carrier is fragile.
    """
    if c < 2:
        raise ValueError("pair position must be >= 2")
    if not 0 <= new_pair <= 99:
        raise PairOutOfRange(f"pair {new_pair} outside [0, 99]")
    out = _write_pair_by_bits(f32_bits(w), c, new_pair)
    return None if out is None else bits_f32(out)
