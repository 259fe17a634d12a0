import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnrw import hs
from nnrw.bits import bits_to_bytes, bytes_to_bits, empty_bits
from nnrw.errors import (BadPayloadMagic, CapacityExceeded, CrcMismatch,
                         NoValley)

from oracles import (choose_peak_valley_oracle, hs_embed_reference,
                     hs_extract_reference)

V = 128
BASE = V - 99


def hist_of(host):
    return hs.build_histogram(host, V)


# -- histogram ----------------------------------------------------------------

def test_hist_counts():
    h = hist_of([178, 178, 78])
    assert h[178 - BASE] == 2
    assert h[78 - BASE] == 1
    assert h.sum() == 3


def test_hist_empty():
    h = hist_of([])
    assert h.sum() == 0 and len(h) == 199


def test_hist_matches_sort_group_oracle():
    r = np.random.default_rng(0)
    host = r.integers(V - 99, V + 100, 500)
    h = hist_of(host)
    import collections
    ref = collections.Counter(int(s) for s in host)
    for sym, cnt in ref.items():
        assert h[sym - BASE] == cnt
    assert h.sum() == 500


def test_hist_range_checked():
    with pytest.raises(ValueError):
        hist_of([V + 100])


# -- choose_peak_valley --------------------------------------------------------

def test_choose_example_from_small_hist():
    h = np.zeros(199, dtype=np.int64)
    h[100 - BASE] = 5
    h[101 - BASE] = 2
    p = hs.choose_peak_valley(h, V)
    assert (p.peak, p.valley, p.capacity) == (100, 102, 5)


def test_choose_single_value():
    h = np.zeros(199, dtype=np.int64)
    h[150 - BASE] = 7
    p = hs.choose_peak_valley(h, V)
    assert (p.peak, p.valley, p.capacity) == (150, 151, 7)


def test_choose_no_valley_when_all_bins_full():
    h = np.ones(199, dtype=np.int64)
    with pytest.raises(NoValley):
        hs.choose_peak_valley(h, V)


def test_choose_ties_prefer_smaller_peak():
    h = np.zeros(199, dtype=np.int64)
    h[50] = 4
    h[80] = 4
    p = hs.choose_peak_valley(h, V)
    assert p.peak == BASE + 50


def test_choose_matches_exhaustive_oracle():
    r = np.random.default_rng(1)
    for _ in range(200):
        h = r.integers(0, 4, 199)
        h[r.integers(0, 199)] += int(r.integers(0, 30))
        want = choose_peak_valley_oracle(h, BASE)
        if want is None:
            with pytest.raises(NoValley):
                hs.choose_peak_valley(h, V)
        else:
            p = hs.choose_peak_valley(h, V)
            assert (p.capacity, p.peak, p.valley) == want


def test_choose_respects_bounds():
    h = np.zeros(199, dtype=np.int64)
    h[178 - BASE] = 50   # positive side
    h[78 - BASE] = 20    # negative side
    pos = hs.choose_peak_valley(h, V, lo=V + 1, hi=V + 99)
    assert pos.peak == 178
    neg = hs.choose_peak_valley(h, V, lo=V - 99, hi=V)
    assert neg.peak == 78 and neg.valley <= V


# -- embed / extract -----------------------------------------------------------

def P(params):
    return params.peak


def test_embed_example_bits_1010():
    params = hs.HSParams(peak=150, valley=151, capacity=4)
    marked = hs.hs_embed([150, 150, 150, 150],
                         np.array([1, 0, 1, 0], dtype=np.uint8), params)
    assert marked.tolist() == [151, 150, 151, 150]
    bits, restored = hs.hs_extract(marked, params)
    assert bits.tolist() == [1, 0, 1, 0]
    assert restored.tolist() == [150, 150, 150, 150]


def test_embed_zero_bits_no_shift_zone():
    params = hs.HSParams(peak=150, valley=151, capacity=3)
    host = [150, 140, 150, 150]
    marked = hs.hs_embed(host, np.zeros(3, dtype=np.uint8), params)
    assert marked.tolist() == host


def test_embed_shifts_interior_cell():
    # host [P, P+1] with valley P+2: embedding bit 1 moves both cells
    params = hs.HSParams(peak=150, valley=152, capacity=1)
    marked = hs.hs_embed([150, 151], np.array([1], dtype=np.uint8), params)
    assert marked.tolist() == [151, 152]
    bits, restored = hs.hs_extract(marked, params)
    assert bits.tolist() == [1]
    assert restored.tolist() == [150, 151]


def test_capacity_law_and_overflow():
    r = np.random.default_rng(2)
    for _ in range(50):
        host = r.integers(V - 5, V + 5, 40)
        h = hist_of(host)
        try:
            params = hs.choose_peak_valley(h, V)
        except NoValley:
            continue
        assert params.capacity == int(h[params.peak - BASE])
        ok_bits = r.integers(0, 2, params.capacity).astype(np.uint8)
        hs.hs_embed(host, ok_bits, params)  # must not raise
        with pytest.raises(CapacityExceeded):
            hs.hs_embed(host, np.zeros(params.capacity + 1, dtype=np.uint8),
                        params)


def test_round_trip_random_hosts():
    r = np.random.default_rng(3)
    for _ in range(200):
        host = r.integers(V - 20, V + 20, 60)
        try:
            params = hs.choose_peak_valley(hist_of(host), V)
        except NoValley:
            continue
        nbits = int(r.integers(0, params.capacity + 1))
        bits = r.integers(0, 2, nbits).astype(np.uint8)
        marked = hs.hs_embed(host, bits, params)
        got, restored = hs.hs_extract(marked, params)
        assert np.array_equal(restored, np.asarray(host))
        assert got[:nbits].tolist() == bits.tolist()
        assert not got[nbits:].any()  # zero padding
        # histogram preserved
        assert np.array_equal(hist_of(restored), hist_of(host))
        # marked symbols stay in range
        assert marked.min() >= V - 99 and marked.max() <= V + 99


def test_matches_reference_evaluator():
    r = np.random.default_rng(4)
    for _ in range(200):
        host = r.integers(V - 8, V + 8, 30)
        try:
            params = hs.choose_peak_valley(hist_of(host), V)
        except NoValley:
            continue
        bits = r.integers(0, 2, params.capacity).astype(np.uint8)
        marked = hs.hs_embed(host, bits, params)
        ref = hs_embed_reference(host, bits, params.peak, params.valley)
        assert marked.tolist() == ref
        rbits, rrest = hs_extract_reference(marked, params.peak, params.valley)
        got, restored = hs.hs_extract(marked, params)
        assert got.tolist() == rbits
        assert restored.tolist() == rrest


def test_exhaustive_tiny_alphabet():
    # all hosts of length <= 4 over {V..V+3}, all payload lengths <= capacity
    alphabet = [V, V + 1, V + 2, V + 3]
    checked = 0
    for n in range(1, 5):
        for host in itertools.product(alphabet, repeat=n):
            try:
                params = hs.choose_peak_valley(hist_of(host), V)
            except NoValley:
                continue
            for nbits in range(params.capacity + 1):
                for bits in itertools.product([0, 1], repeat=nbits):
                    b = np.array(bits, dtype=np.uint8)
                    marked = hs.hs_embed(host, b, params)
                    assert marked.tolist() == hs_embed_reference(
                        host, b, params.peak, params.valley)
                    got, restored = hs.hs_extract(marked, params)
                    assert restored.tolist() == list(host)
                    assert got[:nbits].tolist() == list(bits)
                    checked += 1
    assert checked > 1000


# -- payload framing -----------------------------------------------------------

def test_frame_parse_round_trip():
    r = np.random.default_rng(5)
    for _ in range(50):
        msg = r.integers(0, 2, int(r.integers(0, 64))).astype(np.uint8)
        backup = r.integers(0, 2, int(r.integers(0, 64))).astype(np.uint8)
        payload = hs.frame_payload(msg, backup)
        fields = hs.parse_payload(payload)
        assert fields.message.tolist() == msg.tolist()
        assert fields.lsb_backup.tolist() == backup.tolist()
        # padding after the CRC must be ignored
        padded = np.concatenate([payload, np.zeros(17, dtype=np.uint8)])
        fields2 = hs.parse_payload(padded)
        assert fields2.message.tolist() == msg.tolist()


def test_header_only_payload_is_120_bits():
    payload = hs.frame_payload(empty_bits(), empty_bits())
    assert len(payload) == 120


def test_bit_flip_causes_crc_or_magic_error():
    r = np.random.default_rng(6)
    msg = r.integers(0, 2, 40).astype(np.uint8)
    backup = r.integers(0, 2, 24).astype(np.uint8)
    payload = hs.frame_payload(msg, backup)
    for pos in range(len(payload)):
        bad = payload.copy()
        bad[pos] ^= 1
        with pytest.raises((CrcMismatch, BadPayloadMagic)):
            hs.parse_payload(bad)


def test_parse_rejects_short_input():
    with pytest.raises(BadPayloadMagic):
        hs.parse_payload(np.zeros(40, dtype=np.uint8))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(V - 10, V + 10), min_size=1, max_size=40),
       st.integers(0, 2**32 - 1))
def test_round_trip_property(host, bitseed):
    try:
        params = hs.choose_peak_valley(hist_of(host), V)
    except NoValley:
        return
    r = np.random.default_rng(bitseed)
    bits = r.integers(0, 2, params.capacity).astype(np.uint8)
    marked = hs.hs_embed(host, bits, params)
    got, restored = hs.hs_extract(marked, params)
    assert restored.tolist() == list(host)
    assert got.tolist() == bits.tolist()
