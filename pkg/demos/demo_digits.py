#!/usr/bin/env python3
"""Exact decimal digits of binary32 weights and reversible pair edits.

Every finite float32 is a dyadic rational with a finite decimal expansion.
The watermark symbols come from two consecutive significant digits of that
expansion, and edits move the pair by one unit with verified bit-exact
reversal.
"""

import numpy as np

from nnrw import digits

for x in (0.25, -1.5, 0.1, 0.004537):
    w = np.float32(x)
    dv = digits.digit_view(w)
    head = "".join(map(str, dv.digits[:12]))
    print(f"{x!r:>10}: sign {dv.sign:+d}  e {dv.e:+d}  digits {head}"
          f"{'...' if len(dv.digits) > 12 else ''}")

print()
w = np.float32(0.25)
print("pair (n2,n3) of 0.25:", digits.pair_value(w, 2))
print("host symbol at V=128:", digits.host_symbol(w, 2, 128))
print("host symbol of -0.25:", digits.host_symbol(np.float32(-0.25), 2, 128))

# a one-unit pair edit: 0.25 -> pair 51 aims at 0.251 exactly
w2 = digits.write_pair(w, 2, 51)
print()
print("write pair 51 into 0.25 ->", float(w2))
print("  decoded pair of the result:", digits.pair_decode(w2, 2))
back = digits.write_pair(w2, 2, 50)
print("  write 50 back ->", float(back),
      "(bit-exact:", digits.f32_bits(back) == digits.f32_bits(w), ")")

# a fragile carrier: the float one ulp below 0.25 collides with 0.25
x = np.nextafter(np.float32(0.25), np.float32(0.0))
p = digits.pair_decode(x, 2)
print()
print(f"straddler {float(x)!r}: moving its pair {p} -> {p + 1} returns",
      digits.write_pair(x, 2, p + 1), "(fragile, excluded from carrying)")
