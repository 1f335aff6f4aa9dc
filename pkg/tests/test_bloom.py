"""Filter behavior: derivation, membership, packing, statistics."""

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from sparseprov import analysis
from sparseprov.bloom import BloomFilter, derive_indices, index_mask


def test_derive_indices_deterministic_and_in_range():
    a = derive_indices(b"item", 7, 64, 8)
    b = derive_indices(b"item", 7, 64, 8)
    assert a == b
    assert len(a) == 8
    assert all(0 <= i < 64 for i in a)
    assert derive_indices(b"item", 8, 64, 8) != a
    assert derive_indices(b"item2", 7, 64, 8) != a


def test_derive_indices_m_one():
    assert derive_indices(b"x", 0, 1, 3) == (0, 0, 0)


def test_derive_indices_large_k_spans_blocks():
    idx = derive_indices(b"x", 1, 97, 32)
    assert len(idx) == 32
    assert all(0 <= i < 97 for i in idx)
    # first 16 come from the first digest block and are stable
    assert idx[:16] == derive_indices(b"x", 1, 97, 16)


def test_index_mask_matches_indices():
    for seq in range(50):
        idx = derive_indices(b"abc", seq, 48, 5)
        want = 0
        for i in idx:
            want |= 1 << i
        assert index_mask(b"abc", seq, 48, 5) == want


def test_rejects_bad_sizes():
    with pytest.raises(ValueError):
        derive_indices(b"x", 0, 0, 1)
    with pytest.raises(ValueError):
        BloomFilter(0, 1)
    with pytest.raises(ValueError):
        BloomFilter(8, 0)
    with pytest.raises(ValueError):
        BloomFilter(8, 1, bits=1 << 8)


def test_insert_and_contains():
    bf = BloomFilter(64, 4)
    bf.insert(b"hello", 3)
    assert bf.contains(b"hello", 3)
    assert bf.popcount <= 4
    before = bf.bits
    bf.insert(b"hello", 3)
    assert bf.bits == before  # idempotent
    bf.insert(b"world", 3)
    assert bf.contains(b"world", 3)


def test_popcount_never_decreases():
    rng = random.Random(0)
    bf = BloomFilter(32, 3)
    last = 0
    for i in range(50):
        bf.insert(rng.randbytes(8), i)
        assert bf.popcount >= last
        last = bf.popcount


def test_saturated_filter_accepts_everything():
    bf = BloomFilter(16, 2, bits=(1 << 16) - 1)
    rng = random.Random(1)
    for i in range(100):
        assert bf.contains(rng.randbytes(6), i)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.binary(min_size=1, max_size=12), min_size=1, max_size=30),
    st.integers(min_value=1, max_value=128),
    st.integers(min_value=1, max_value=8),
    st.integers(min_value=0, max_value=2 ** 32 - 1),
)
def test_no_false_negatives(items, m, k, seq):
    bf = BloomFilter(m, k)
    for item in items:
        bf.insert(item, seq)
    for item in items:
        assert bf.contains(item, seq)


def test_insert_indices_bounds():
    bf = BloomFilter(8, 2)
    bf.insert_indices([0, 7])
    assert bf.bits == 0b10000001
    with pytest.raises(ValueError):
        bf.insert_indices([8])


# ----------------------------------------------------------------------
# wire format


def test_wire_golden_bytes():
    # m=12, k=3, bits {0, 5, 11}: bit 0 is the MSB of the first byte, so
    # byte 0 = 1000 0100 = 0x84 and byte 1 = 0001 0000 = 0x10.
    bf = BloomFilter(12, 3)
    bf.insert_indices([0, 5, 11])
    assert bf.to_bytes() == bytes.fromhex("0000000c" "0003" "8410")


def test_wire_round_trip_random():
    rng = random.Random(9)
    for _ in range(60):
        m = rng.randrange(1, 200)
        k = rng.randrange(1, 12)
        bits = rng.getrandbits(m)
        bf = BloomFilter(m, k, bits=bits)
        again = BloomFilter.from_bytes(bf.to_bytes())
        assert again == bf
        assert again.wire_size == len(bf.to_bytes())


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=300), st.integers(min_value=1, max_value=16))
def test_wire_round_trip_hypothesis(m, k):
    bf = BloomFilter(m, k, bits=(1 << m) - 1 if m % 3 == 0 else (1 << (m - 1)))
    assert BloomFilter.from_bytes(bf.to_bytes()) == bf


def test_wire_rejects_bad_lengths():
    bf = BloomFilter(16, 2)
    data = bf.to_bytes()
    with pytest.raises(ValueError):
        BloomFilter.from_bytes(data[:-1])
    with pytest.raises(ValueError):
        BloomFilter.from_bytes(data + b"\x00")
    with pytest.raises(ValueError):
        BloomFilter.from_bytes(b"\x00\x00")


# ----------------------------------------------------------------------
# statistics


def test_index_distribution_uniform_chi_square():
    from scipy.stats import chi2

    m = 64
    counts = [0] * m
    rng = random.Random(12)
    n_items = 100_000
    for i in range(n_items):
        for idx in derive_indices(rng.randbytes(8), i, m, 1):
            counts[idx] += 1
    expected = n_items / m
    stat = sum((c - expected) ** 2 / expected for c in counts)
    # df = 63; crossing this threshold has probability 0.1% under
    # uniformity.
    assert stat < chi2.ppf(0.999, m - 1)


def test_single_item_fpr_matches_analysis():
    # Insert gamma random items, query one fresh item, compare against
    # the closed form at 3 sigma.
    rng = random.Random(5)
    trials = 100_000
    for m, k, gamma in ((16, 2, 1), (16, 4, 2), (32, 3, 4)):
        want = analysis.p_edge_recovered(m, k, gamma)
        hits = 0
        for trial in range(trials):
            bf = BloomFilter(m, k)
            for g in range(gamma):
                bf.insert(rng.randbytes(8), trial)
            if bf.contains(rng.randbytes(8), trial):
                hits += 1
        sigma = math.sqrt(want * (1.0 - want) / trials)
        assert abs(hits / trials - want) <= 3 * sigma, (m, k, gamma)
