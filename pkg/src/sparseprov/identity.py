"""Keyed edge identities and the per-packet hash chain.

Every node holds a 32-byte private key; the destination holds all of
them.  The identity a node derives for one of its edges is a keyed
digest over the two (or, for double edges, three) node ids, keyed by
the embedding node, so identities are asymmetric: edge_id(i, j) and
edge_id(j, i) differ both in key and in input.
"""

from __future__ import annotations

import secrets
from hashlib import blake2b
from typing import Dict, List, Sequence, Tuple

KEY_BYTES = 32
ID_BYTES = 16
CHAIN_BYTES = 32

# Public, deployment-wide chain start value.
CHAIN_SEED = bytes(CHAIN_BYTES)


def _nid(node: int) -> bytes:
    return node.to_bytes(4, "big")


class KeyRing:
    """Per-node private keys, indexed by node id."""

    def __init__(self, keys: Sequence[bytes], chain_seed: bytes = CHAIN_SEED):
        for key in keys:
            if len(key) != KEY_BYTES:
                raise ValueError("keys must be %d bytes" % KEY_BYTES)
        if len(chain_seed) != CHAIN_BYTES:
            raise ValueError("chain seed must be %d bytes" % CHAIN_BYTES)
        self.keys: Tuple[bytes, ...] = tuple(keys)
        self.chain_seed = chain_seed
        self._edge_cache: Dict[Tuple[int, int], bytes] = {}
        self._double_cache: Dict[Tuple[int, int, int], bytes] = {}

    @property
    def n(self) -> int:
        return len(self.keys)

    def key_for(self, node: int) -> bytes:
        return self.keys[node]

    @classmethod
    def generate(cls, n: int, seed: int | None = None) -> "KeyRing":
        """Fresh keys; a seed gives a reproducible (non-secret) ring."""
        if seed is None:
            return cls([secrets.token_bytes(KEY_BYTES) for _ in range(n)])
        keys = [
            blake2b(b"keyring" + seed.to_bytes(8, "big") + _nid(i),
                    digest_size=KEY_BYTES).digest()
            for i in range(n)
        ]
        return cls(keys)

    # ------------------------------------------------------------------
    # identities

    def edge_id(self, i: int, j: int) -> bytes:
        """Identity node i derives for its edge towards j."""
        got = self._edge_cache.get((i, j))
        if got is None:
            got = blake2b(
                _nid(i) + _nid(j),
                digest_size=ID_BYTES,
                key=self.keys[i],
                person=b"edge-id",
            ).digest()
            self._edge_cache[(i, j)] = got
        return got

    def double_edge_id(self, prev: int, center: int, nxt: int) -> bytes:
        """Identity the center node derives for the two-hop segment
        prev -> center -> nxt.  The three nodes must be distinct."""
        if len({prev, center, nxt}) != 3:
            raise ValueError("double edge nodes must be distinct")
        got = self._double_cache.get((prev, center, nxt))
        if got is None:
            got = blake2b(
                _nid(prev) + _nid(center) + _nid(nxt),
                digest_size=ID_BYTES,
                key=self.keys[center],
                person=b"double-edge-id",
            ).digest()
            self._double_cache[(prev, center, nxt)] = got
        return got

    # ------------------------------------------------------------------
    # key file: one lowercase hex key per line, line index = node id

    def to_file(self, path: str) -> None:
        with open(path, "w") as fh:
            for key in self.keys:
                fh.write(key.hex() + "\n")

    @classmethod
    def from_file(cls, path: str) -> "KeyRing":
        keys: List[bytes] = []
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line:
                    continue
                try:
                    key = bytes.fromhex(line)
                except ValueError:
                    raise ValueError("bad hex on line %d" % lineno) from None
                keys.append(key)
        return cls(keys)


def edge_id(keys: KeyRing, i: int, j: int) -> bytes:
    return keys.edge_id(i, j)


def double_edge_id(keys: KeyRing, prev: int, center: int, nxt: int) -> bytes:
    return keys.double_edge_id(prev, center, nxt)


def chain_step(seq: int, ident: bytes, prev: bytes) -> bytes:
    """One hash-chain update: absorb an identity into the running value."""
    return blake2b(
        seq.to_bytes(4, "big") + ident + prev,
        digest_size=CHAIN_BYTES,
        person=b"hash-chain",
    ).digest()


def chain_over(seq: int, idents: Sequence[bytes], seed: bytes = CHAIN_SEED) -> bytes:
    value = seed
    for ident in idents:
        value = chain_step(seq, ident, value)
    return value
