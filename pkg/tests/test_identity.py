"""Keyed identities and hash chains."""

import random

import pytest

from sparseprov.identity import (
    CHAIN_BYTES,
    CHAIN_SEED,
    ID_BYTES,
    KEY_BYTES,
    KeyRing,
    chain_over,
    chain_step,
    double_edge_id,
    edge_id,
)


def test_generate_deterministic_with_seed():
    a = KeyRing.generate(5, seed=9)
    b = KeyRing.generate(5, seed=9)
    c = KeyRing.generate(5, seed=10)
    assert a.keys == b.keys
    assert a.keys != c.keys
    assert len(a.keys) == 5
    assert all(len(k) == KEY_BYTES for k in a.keys)


def test_generate_unseeded_is_fresh():
    assert KeyRing.generate(3).keys != KeyRing.generate(3).keys


def test_keyring_validation():
    with pytest.raises(ValueError):
        KeyRing([b"short"])
    with pytest.raises(ValueError):
        KeyRing([bytes(KEY_BYTES)], chain_seed=b"tiny")


def test_edge_id_asymmetric():
    keys = KeyRing.generate(4, seed=1)
    assert edge_id(keys, 0, 1) != edge_id(keys, 1, 0)
    assert len(edge_id(keys, 0, 1)) == ID_BYTES


def test_edge_id_depends_on_key():
    a = KeyRing.generate(4, seed=1)
    b = KeyRing.generate(4, seed=2)
    assert edge_id(a, 0, 1) != edge_id(b, 0, 1)


def test_edge_id_cache_consistent():
    keys = KeyRing.generate(4, seed=1)
    first = keys.edge_id(2, 3)
    assert keys.edge_id(2, 3) == first
    fresh = KeyRing(keys.keys)
    assert fresh.edge_id(2, 3) == first


def test_double_edge_id_distinct_roles():
    keys = KeyRing.generate(5, seed=3)
    base = double_edge_id(keys, 0, 1, 2)
    assert len(base) == ID_BYTES
    assert double_edge_id(keys, 2, 1, 0) != base
    assert double_edge_id(keys, 0, 2, 1) != base
    with pytest.raises(ValueError):
        double_edge_id(keys, 0, 1, 0)


def test_identity_collisions_absent_at_scale():
    keys = KeyRing.generate(40, seed=4)
    seen = set()
    for i in range(40):
        for j in range(40):
            if i != j:
                seen.add(keys.edge_id(i, j))
    assert len(seen) == 40 * 39


def test_chain_empty_is_seed():
    assert chain_over(5, []) == CHAIN_SEED
    assert len(CHAIN_SEED) == CHAIN_BYTES


def test_chain_step_recompute():
    keys = KeyRing.generate(4, seed=1)
    ids = [edge_id(keys, 0, 1), edge_id(keys, 1, 2), edge_id(keys, 2, 3)]
    value = CHAIN_SEED
    for ident in ids:
        value = chain_step(9, ident, value)
    assert chain_over(9, ids) == value
    assert len(value) == CHAIN_BYTES


def test_chain_sensitive_to_everything():
    keys = KeyRing.generate(4, seed=1)
    ids = [edge_id(keys, 0, 1), edge_id(keys, 1, 2)]
    base = chain_over(7, ids)
    assert chain_over(8, ids) != base
    assert chain_over(7, list(reversed(ids))) != base
    assert chain_over(7, ids[:1]) != base
    assert chain_over(7, ids, seed=bytes([1]) * CHAIN_BYTES) != base


def test_chain_collision_scan():
    # Distinct identity sequences never collide at test scale.
    keys = KeyRing.generate(30, seed=6)
    rng = random.Random(6)
    seen = {}
    for trial in range(20_000):
        length = rng.randrange(1, 5)
        ids = []
        prev = rng.randrange(30)
        for _ in range(length):
            nxt = rng.randrange(30)
            while nxt == prev:
                nxt = rng.randrange(30)
            ids.append(keys.edge_id(prev, nxt))
            prev = nxt
        value = chain_over(trial % 64, tuple(ids))
        key = (trial % 64, tuple(ids))
        if value in seen:
            assert seen[value] == key
        else:
            seen[value] = key


def test_key_file_round_trip(tmp_path):
    keys = KeyRing.generate(6, seed=2)
    path = tmp_path / "keys.txt"
    keys.to_file(str(path))
    again = KeyRing.from_file(str(path))
    assert again.keys == keys.keys


def test_key_file_rejects_bad_hex(tmp_path):
    path = tmp_path / "keys.txt"
    path.write_text("zz\n")
    with pytest.raises(ValueError):
        KeyRing.from_file(str(path))
