import numpy as np
import pytest

from nnrw import digits as dg
from nnrw import host as hostmod
from nnrw.errors import BadPermutation, NOutOfRange, NoUsableWeights

from oracles import symbol_entropy_oracle

V = 128


def layer_of(values, d, c_in, k):
    return np.asarray(values, dtype=np.float32).reshape(d, c_in, k, k)


# -- traversal order ------------------------------------------------------------

def test_traversal_matches_block_layout():
    d, c_in, k = 4, 2, 3
    w = np.arange(d * c_in * k * k, dtype=np.float32).reshape(d, c_in, k, k)
    idx = hostmod.candidate_flat_indices(w.shape, np.array([2, 0]))
    per = c_in * k * k
    want = list(range(2 * per, 3 * per)) + list(range(0, per))
    assert idx.tolist() == want


def test_traversal_rejects_bad_selection():
    with pytest.raises(BadPermutation):
        hostmod.candidate_flat_indices((4, 1, 1, 1), np.array([0, 0]))
    with pytest.raises(BadPermutation):
        hostmod.candidate_flat_indices((4, 1, 1, 1), np.array([4]))
    with pytest.raises(NOutOfRange):
        hostmod.candidate_flat_indices((4, 1, 1, 1), np.array([], dtype=int))


# -- build_host -------------------------------------------------------------------

def test_uniform_quarters_full_host():
    w = layer_of([0.25] * 8, 2, 1, 2)
    host, emap = hostmod.build_host(w, np.array([0, 1]), 2, V)
    assert host.symbols.tolist() == [178] * 8
    assert emap.excluded_count == 0


def test_zero_weight_excluded():
    vals = [0.25] * 8
    vals[3] = 0.0
    w = layer_of(vals, 2, 1, 2)
    host, emap = hostmod.build_host(w, np.array([0, 1]), 2, V)
    assert len(host.symbols) == 7
    assert emap.excluded_count == 1
    assert emap.bitmap[3]


def test_nonfinite_and_lsb_zero_excluded():
    vals = np.array([0.25, np.inf, np.nan, 0.25,
                     0.25, 0.25, 0.25, 0.25], dtype=np.float32)
    vals[4] = dg.bits_f32(1)           # 2^-149: LSB-cleared it is zero
    vals[5] = dg.bits_f32(0x80000001)  # -2^-149
    w = layer_of(vals, 2, 1, 2)
    host, emap = hostmod.build_host(w, np.array([0, 1]), 2, V)
    assert len(host.symbols) == 4
    assert emap.excluded_count == 4


def test_region_exclusion():
    w = layer_of([0.25] * 8, 2, 1, 2)
    host, emap = hostmod.build_host(w, np.array([0, 1]), 2, V, region_len=3)
    assert len(host.symbols) == 5
    assert host.coords.min() >= 3


def test_symbols_match_elementwise_oracle():
    r = np.random.default_rng(0)
    w = r.uniform(-0.5, 0.5, size=(4, 2, 3, 3)).astype(np.float32)
    jp = np.array([3, 1, 0])
    host, _ = hostmod.build_host(w, jp, 2, V)
    flat = w.reshape(-1)
    for sym, coord in zip(host.symbols, host.coords):
        assert sym == dg.host_symbol(flat[coord], 2, V)


def test_host_symbols_in_range():
    r = np.random.default_rng(1)
    w = r.normal(0, 0.1, size=(4, 2, 3, 3)).astype(np.float32)
    host, _ = hostmod.build_host(w, np.array([0, 1, 2, 3]), 2, V)
    assert host.symbols.min() >= V - 99
    assert host.symbols.max() <= V + 99


# -- screening --------------------------------------------------------------------

def test_static_screen_drops_boundary_straddler():
    vals = [0.25] * 8
    w = layer_of(vals, 2, 1, 2)
    flat = w.reshape(-1)
    flat[2] = np.nextafter(np.float32(0.25), np.float32(0))  # decode 49, floor 49? guarded
    host, emap = hostmod.build_host(w, np.array([0, 1]), 2, V)
    host2, emap2 = hostmod.static_screen(flat, host, emap)
    # the straddler reads 49 via floor and 49/50 depending on reader;
    # whatever the verdict, surviving carriers are reader-stable
    for sym, coord in zip(host2.symbols, host2.coords):
        pair = abs(int(sym) - V)
        assert dg.pair_value(flat[coord], 2) == pair
        assert dg.pair_decode(flat[coord], 2) == pair


def test_move_screen_excludes_fragile_mover():
    vals = [0.25] * 8
    w = layer_of(vals, 2, 1, 2)
    flat = w.reshape(-1)
    straddler = np.nextafter(np.float32(0.25), np.float32(0))
    flat[5] = straddler
    host, emap = hostmod.build_host(w, np.array([0, 1]), 2, V)
    host1, emap = hostmod.static_screen(flat, host, emap)
    sym = dg.host_symbol(straddler, 2, V)
    host2, emap2 = hostmod.move_screen(flat, host1, emap, sym, sym + 3)
    assert 5 in emap2.stored_indices.tolist()


def test_rebuild_marked_host_skips_stored_and_recomputed():
    vals = [0.25] * 8
    vals[1] = 0.0
    w = layer_of(vals, 2, 1, 2)
    rebuilt = hostmod.rebuild_marked_host(
        w, np.array([0, 1]), 2, V, region_len=0,
        stored_indices=np.array([4]))
    assert len(rebuilt.symbols) == 6
    assert 1 not in rebuilt.candidate_pos.tolist()
    assert 4 not in rebuilt.candidate_pos.tolist()


# -- pair-position selection ---------------------------------------------------------

def test_select_all_equal_ties_to_two():
    w = layer_of([0.25] * 8, 2, 1, 2)
    c, table = hostmod.select_pair_position(w, np.array([0, 1]), V)
    assert c == 2
    assert all(row[1] == 0.0 for row in table)


def test_select_prefers_strictly_lower_entropy_position():
    # constant pair at c=2, varying at c=3: 0.110, 0.111, ..., 0.119 have
    # (n2,n3) = (1,0)..(1,9) wait -- use values with constant (n2,n3)
    vals = [0.1101, 0.1102, 0.1104, 0.1107,
            0.1101, 0.1103, 0.1105, 0.1109]
    w = layer_of(vals, 2, 1, 2)
    c, table = hostmod.select_pair_position(w, np.array([0, 1]), V)
    assert c == 2  # pair (1,1) constant at c=2; varies at c=3
    ent = {row[0]: row[1] for row in table}
    assert ent[2] < ent[3]


def test_select_entropy_matches_histogram_oracle():
    r = np.random.default_rng(2)
    w = r.uniform(0.1, 0.9, size=(4, 2, 3, 3)).astype(np.float32)
    jp = np.array([0, 1, 2, 3])
    _, table = hostmod.select_pair_position(w, jp, V)
    flat = w.reshape(-1)
    for c, entropy, count in table:
        syms = [dg.host_symbol(x, c, V) for x in flat]
        assert count == len(syms)
        assert abs(entropy - symbol_entropy_oracle(syms)) < 1e-12


def test_select_uniform_weights_entropy_near_log2_100():
    r = np.random.default_rng(3)
    w = r.uniform(0.0, 1.0, size=(16, 16, 3, 3)).astype(np.float32)
    jp = np.arange(16)
    _, table = hostmod.select_pair_position(w, jp, V)
    ent = {row[0]: row[1] for row in table}
    # uniform(0,1) digit pairs are near-uniform over 100 values
    assert abs(ent[2] - np.log2(100)) < 0.15


def test_select_no_usable_weights():
    w = layer_of([0.0] * 8, 2, 1, 2)
    with pytest.raises(NoUsableWeights):
        hostmod.select_pair_position(w, np.array([0, 1]), V)
