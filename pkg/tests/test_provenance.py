"""Payload provenance: embedding schemes, candidate search, recovery."""

from __future__ import annotations

import pytest

from sparseprov.bloom import BloomFilter
from sparseprov.identity import KeyRing
from sparseprov.provenance import (
    EXHAUSTED,
    FALSE_POSITIVE,
    RECOVERED,
    PayloadPacket,
    candidate_paths,
    count_directed_edges,
    count_double_edges,
    dde_chain,
    dde_transmit,
    de_chain,
    de_transmit,
    directed_edges,
    double_edges,
    recover,
)
from sparseprov.topology import (
    BudgetExceeded,
    Topology,
    complete_topology,
    enumerate_paths,
    path_double_edges,
    random_sparse_topology,
)


def star_topology() -> Topology:
    # Three parallel two-hop routes from 0 to 4.
    return Topology(5, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)])


def saturated_packet(keys, path, scheme, m=16, k=2, seq=5) -> PayloadPacket:
    transmit = de_transmit if scheme == "de" else dde_transmit
    packet = transmit(path, keys, m, k, seq)
    packet.bloom.bits = (1 << m) - 1  # every membership query passes
    return packet


# ----------------------------------------------------------------------
# embedding


def test_de_single_hop_popcount():
    keys = KeyRing.generate(3, seed=1)
    packet = de_transmit((0, 2), keys, m=64, k=3, seq=0)
    assert packet.hops == 1
    assert 1 <= packet.bloom.popcount <= 3


def test_de_filter_holds_exactly_the_path_edges():
    t = random_sparse_topology(8, 14, seed=101)
    keys = KeyRing.generate(t.n, seed=2)
    path = enumerate_paths(t, 0, 4)[0]
    packet = de_transmit(path, keys, m=4096, k=4, seq=1)
    for u, v in zip(path, path[1:]):
        assert packet.bloom.contains(keys.edge_id(u, v), 1)
        assert not packet.bloom.contains(keys.edge_id(v, u), 1)


def test_dde_embeds_every_second_segment():
    keys = KeyRing.generate(6, seed=3)
    even = (0, 1, 2, 3, 4)  # 4 hops -> segments (0,1,2) and (2,3,4)
    packet = dde_transmit(even, keys, m=4096, k=4, seq=2)
    assert packet.bloom.contains(keys.double_edge_id(0, 1, 2), 2)
    assert packet.bloom.contains(keys.double_edge_id(2, 3, 4), 2)
    assert not packet.bloom.contains(keys.double_edge_id(1, 2, 3), 2)

    odd = (0, 1, 2, 3, 4, 5)  # 5 hops -> same two segments, open tail
    packet = dde_transmit(odd, keys, m=4096, k=4, seq=2)
    assert path_double_edges(odd) == ((0, 1, 2), (2, 3, 4))
    assert packet.bloom.contains(keys.double_edge_id(2, 3, 4), 2)
    assert not packet.bloom.contains(keys.double_edge_id(3, 4, 5), 2)


def test_dde_single_hop_embeds_nothing():
    keys = KeyRing.generate(3, seed=4)
    packet = dde_transmit((0, 2), keys, m=64, k=3, seq=0)
    assert packet.bloom.popcount == 0
    assert packet.chain == dde_chain(keys, (0, 2), 0)


def test_transmit_rejects_bad_paths():
    keys = KeyRing.generate(4, seed=5)
    with pytest.raises(ValueError):
        de_transmit((2,), keys, m=16, k=1, seq=0)
    with pytest.raises(ValueError):
        de_transmit((0, 1, 0), keys, m=16, k=1, seq=0)


# ----------------------------------------------------------------------
# wire format


def test_packet_round_trip():
    keys = KeyRing.generate(5, seed=42)
    packet = de_transmit((0, 1, 2), keys, m=16, k=2, seq=3)
    again = PayloadPacket.from_bytes(packet.to_bytes())
    assert again == packet


def test_packet_golden_bytes():
    keys = KeyRing.generate(5, seed=42)
    packet = de_transmit((0, 1, 2), keys, m=16, k=2, seq=3)
    assert packet.to_bytes().hex() == (
        "00000000000300020000001000028a02"
        "ecce0135640dd011a877be64a1751199"
        "f0c30aa5a6a794801676eaf83c815f91"
    )


def test_packet_rejects_bad_bytes():
    keys = KeyRing.generate(5, seed=42)
    raw = de_transmit((0, 1, 2), keys, m=16, k=2, seq=3).to_bytes()
    with pytest.raises(ValueError):
        PayloadPacket.from_bytes(raw[:10])
    with pytest.raises(ValueError):
        PayloadPacket.from_bytes(raw + b"\x00")
    with pytest.raises(ValueError):
        PayloadPacket.from_bytes(raw[:20] + raw[21:])


def test_packet_field_ranges():
    bloom = BloomFilter(8, 1)
    with pytest.raises(ValueError):
        PayloadPacket(0, 1 << 32, 1, bloom, bytes(32)).to_bytes()
    with pytest.raises(ValueError):
        PayloadPacket(0, 0, 1, bloom, bytes(31)).to_bytes()


# ----------------------------------------------------------------------
# item catalogs


def test_directed_edge_catalog_on_complete_graph():
    n = 8
    t = complete_topology(n)
    assert count_directed_edges(t) == (n - 1) ** 2
    assert count_double_edges(t) == (n - 1) * (n - 2) ** 2
    assert len(list(directed_edges(t))) == (n - 1) ** 2
    assert len(list(double_edges(t))) == (n - 1) * (n - 2) ** 2


def test_catalog_counts_match_enumeration():
    for seed in range(20):
        t = random_sparse_topology(9, 15, seed=seed)
        assert count_directed_edges(t) == len(list(directed_edges(t)))
        assert count_double_edges(t) == len(list(double_edges(t)))
        triples = set(double_edges(t))
        assert len(triples) == count_double_edges(t)
        for a, b, c in triples:
            assert t.has_edge(a, b) and t.has_edge(b, c)
            assert b != t.dest and a != t.dest and a != c


# ----------------------------------------------------------------------
# candidate search


def _de_oracle(packet, keys, context):
    paths = enumerate_paths(context, packet.source, packet.hops)
    keep = []
    for p in paths:
        items = [keys.edge_id(u, v) for u, v in zip(p, p[1:])]
        if all(packet.bloom.contains(x, packet.seq) for x in items):
            keep.append(p)
    return keep


def _dde_oracle(packet, keys, context):
    paths = enumerate_paths(context, packet.source, packet.hops)
    keep = []
    for p in paths:
        items = [keys.double_edge_id(a, b, c) for a, b, c in path_double_edges(p)]
        if all(packet.bloom.contains(x, packet.seq) for x in items):
            keep.append(p)
    return keep


def test_candidates_match_enumeration_oracle():
    # Small filters make accidental passes common, exercising both the
    # search pruning and the memoized membership.
    for seed in range(15):
        t = random_sparse_topology(8, 13, seed=200 + seed)
        keys = KeyRing.generate(t.n, seed=seed)
        for hops in (2, 3, 4, 5):
            paths = enumerate_paths(t, 0, hops)
            if not paths:
                continue
            true = paths[seed % len(paths)]
            de_pkt = de_transmit(true, keys, m=12, k=1, seq=seed)
            assert candidate_paths(de_pkt, keys, t, "de") == _de_oracle(
                de_pkt, keys, t
            )
            dde_pkt = dde_transmit(true, keys, m=12, k=1, seq=seed)
            assert candidate_paths(dde_pkt, keys, t, "dde") == _dde_oracle(
                dde_pkt, keys, t
            )


def test_true_path_is_always_a_candidate():
    for seed in range(10):
        t = random_sparse_topology(8, 14, seed=300 + seed)
        keys = KeyRing.generate(t.n, seed=seed)
        for hops in (1, 2, 3, 4, 5):
            paths = enumerate_paths(t, 0, hops)
            if not paths:
                continue
            true = paths[-1]
            for scheme, transmit in (("de", de_transmit), ("dde", dde_transmit)):
                packet = transmit(true, keys, m=8, k=1, seq=seed)
                assert true in candidate_paths(packet, keys, t, scheme)


def test_learned_context_candidates_subset_of_complete():
    t = random_sparse_topology(8, 14, seed=101)
    keys = KeyRing.generate(t.n, seed=9)
    full = complete_topology(t.n, dest=t.dest)
    for seq in range(10):
        path = enumerate_paths(t, 0, 3)[0]
        packet = de_transmit(path, keys, m=16, k=1, seq=seq)
        narrow = set(candidate_paths(packet, keys, t, "de"))
        wide = set(candidate_paths(packet, keys, full, "de"))
        assert narrow <= wide


def test_candidate_budget_enforced():
    t = complete_topology(9)
    keys = KeyRing.generate(t.n, seed=10)
    packet = saturated_packet(keys, (0, 1, 2, 3, 8), "de")
    with pytest.raises(BudgetExceeded):
        candidate_paths(packet, keys, t, "de", max_candidates=10)
    packet = saturated_packet(keys, (0, 1, 2, 3, 8), "dde")
    with pytest.raises(BudgetExceeded):
        candidate_paths(packet, keys, t, "dde", max_candidates=10)


# ----------------------------------------------------------------------
# recovery


def test_single_candidate_needs_no_chain_check():
    t = Topology(3, [(0, 1), (1, 2)])
    keys = KeyRing.generate(3, seed=11)
    packet = de_transmit((0, 1, 2), keys, m=16, k=2, seq=0)
    result = recover(packet, keys, t, scheme="de", beta=1)
    assert result.outcome == RECOVERED
    assert result.path == (0, 1, 2)
    assert result.candidates == 1
    assert result.checked == 0


def test_chain_budget_controls_the_outcome():
    # Saturated filter, true path last in candidate order: the budget
    # must absorb two mismatches before the match is reached.
    t = star_topology()
    keys = KeyRing.generate(t.n, seed=12)
    true = (0, 3, 4)
    for scheme in ("de", "dde"):
        packet = saturated_packet(keys, true, scheme)
        assert candidate_paths(packet, keys, t, scheme) == [
            (0, 1, 4),
            (0, 2, 4),
            (0, 3, 4),
        ]
        r1 = recover(packet, keys, t, scheme=scheme, beta=1)
        assert (r1.outcome, r1.candidates, r1.checked) == (FALSE_POSITIVE, 3, 1)
        r2 = recover(packet, keys, t, scheme=scheme, beta=2)
        assert (r2.outcome, r2.checked) == (FALSE_POSITIVE, 2)
        r3 = recover(packet, keys, t, scheme=scheme, beta=3)
        assert (r3.outcome, r3.path, r3.checked) == (RECOVERED, true, 2)
        r3c = recover(packet, keys, t, scheme=scheme, beta=3, count_match=True)
        assert (r3c.outcome, r3c.path, r3c.checked) == (RECOVERED, true, 3)


def test_budget_at_candidate_count_always_recovers():
    t = star_topology()
    keys = KeyRing.generate(t.n, seed=13)
    for true in ((0, 1, 4), (0, 2, 4), (0, 3, 4)):
        packet = saturated_packet(keys, true, "de")
        result = recover(packet, keys, t, scheme="de", beta=3)
        assert result.outcome == RECOVERED
        assert result.path == true


def test_no_chain_mode_fails_on_any_ambiguity():
    t = star_topology()
    keys = KeyRing.generate(t.n, seed=14)
    packet = saturated_packet(keys, (0, 1, 4), "de")
    result = recover(packet, keys, t, scheme="de", beta=99, no_chain=True)
    assert result.outcome == FALSE_POSITIVE
    assert result.checked == 0


def test_corrupted_chain_exhausts():
    t = star_topology()
    keys = KeyRing.generate(t.n, seed=15)
    packet = saturated_packet(keys, (0, 2, 4), "de")
    packet.chain = bytes(32)
    result = recover(packet, keys, t, scheme="de", beta=10)
    assert result.outcome == EXHAUSTED
    assert result.checked == 3


def test_recover_validates_beta():
    t = star_topology()
    keys = KeyRing.generate(t.n, seed=16)
    packet = de_transmit((0, 1, 4), keys, m=16, k=2, seq=0)
    with pytest.raises(ValueError):
        recover(packet, keys, t, beta=0)


def test_chain_distinguishes_direction_and_scheme():
    keys = KeyRing.generate(5, seed=17)
    assert de_chain(keys, (0, 1, 2), 0) != de_chain(keys, (2, 1, 0), 0)
    assert de_chain(keys, (0, 1, 2), 0) != de_chain(keys, (0, 1, 2), 1)
    assert de_chain(keys, (0, 1, 2), 0) != dde_chain(keys, (0, 1, 2), 0)


def test_recovery_roundtrip_over_random_paths():
    t = random_sparse_topology(8, 14, seed=101)
    keys = KeyRing.generate(t.n, seed=18)
    for hops in (2, 3, 4):
        for idx, path in enumerate(enumerate_paths(t, 0, hops)):
            for scheme, transmit in (("de", de_transmit), ("dde", dde_transmit)):
                packet = transmit(path, keys, m=2048, k=4, seq=idx)
                result = recover(packet, keys, t, scheme=scheme, beta=4)
                assert result.outcome == RECOVERED
                assert result.path == path
