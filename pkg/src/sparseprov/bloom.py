"""Bit-array membership filter with keyed index derivation.

Index derivation for an item is a single cryptographic digest of
item || seq expanded into k 32-bit words, each reduced modulo m.  The
same item and sequence number always map to the same index tuple, and
repetitions among the k indices are allowed (draws with replacement).
"""

from __future__ import annotations

from hashlib import blake2b
from typing import Iterable, Tuple

_PERSON = b"bf-index"
_WORDS_PER_BLOCK = 16  # 64-byte digest, 4 bytes per index word
_WORD_MASK = 0xFFFFFFFF


def _digest_value(item: bytes, seq: int, block: int) -> int:
    data = item + seq.to_bytes(4, "big")
    if block:
        data += block.to_bytes(2, "big")
    return int.from_bytes(blake2b(data, digest_size=64, person=_PERSON).digest(), "big")


def derive_indices(item: bytes, seq: int, m: int, k: int) -> Tuple[int, ...]:
    """The k filter positions for item under sequence number seq."""
    if m < 1 or k < 1:
        raise ValueError("m and k must be positive")
    out = []
    block = 0
    v = _digest_value(item, seq, 0)
    left = _WORDS_PER_BLOCK
    for _ in range(k):
        if left == 0:
            block += 1
            v = _digest_value(item, seq, block)
            left = _WORDS_PER_BLOCK
        out.append((v & _WORD_MASK) % m)
        v >>= 32
        left -= 1
    return tuple(out)


def index_mask(item: bytes, seq: int, m: int, k: int) -> int:
    """Same positions as derive_indices, collapsed into a bit mask."""
    mask = 0
    block = 0
    v = _digest_value(item, seq, 0)
    left = _WORDS_PER_BLOCK
    for _ in range(k):
        if left == 0:
            block += 1
            v = _digest_value(item, seq, block)
            left = _WORDS_PER_BLOCK
        mask |= 1 << ((v & _WORD_MASK) % m)
        v >>= 32
        left -= 1
    return mask


class BloomFilter:
    """m-bit filter; inserts can only set bits, never clear them."""

    __slots__ = ("m", "k", "bits")

    def __init__(self, m: int, k: int, bits: int = 0):
        if m < 1 or k < 1:
            raise ValueError("m and k must be positive")
        if bits < 0 or bits >> m:
            raise ValueError("bits outside filter range")
        self.m = m
        self.k = k
        self.bits = bits

    def insert(self, item: bytes, seq: int) -> None:
        self.bits |= index_mask(item, seq, self.m, self.k)

    def contains(self, item: bytes, seq: int) -> bool:
        mask = index_mask(item, seq, self.m, self.k)
        return self.bits & mask == mask

    def insert_indices(self, indices: Iterable[int]) -> None:
        for i in indices:
            if not 0 <= i < self.m:
                raise ValueError("index %d outside filter of size %d" % (i, self.m))
            self.bits |= 1 << i

    @property
    def popcount(self) -> int:
        return self.bits.bit_count()

    def copy(self) -> "BloomFilter":
        return BloomFilter(self.m, self.k, self.bits)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, BloomFilter)
            and self.m == other.m
            and self.k == other.k
            and self.bits == other.bits
        )

    def __repr__(self) -> str:
        return "BloomFilter(m=%d, k=%d, popcount=%d)" % (self.m, self.k, self.popcount)

    # ------------------------------------------------------------------
    # wire format: u32 m, u16 k, then ceil(m/8) bytes packed big endian
    # (bit index 0 is the most significant bit of the first byte).

    def to_bytes(self) -> bytes:
        nbytes = (self.m + 7) // 8
        packed = bytearray(nbytes)
        for i in range(self.m):
            if self.bits >> i & 1:
                packed[i // 8] |= 0x80 >> (i % 8)
        return self.m.to_bytes(4, "big") + self.k.to_bytes(2, "big") + bytes(packed)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BloomFilter":
        if len(data) < 6:
            raise ValueError("truncated filter")
        m = int.from_bytes(data[0:4], "big")
        k = int.from_bytes(data[4:6], "big")
        nbytes = (m + 7) // 8
        if len(data) != 6 + nbytes:
            raise ValueError(
                "filter of size %d needs %d payload bytes, got %d"
                % (m, nbytes, len(data) - 6)
            )
        bits = 0
        for i in range(m):
            if data[6 + i // 8] & (0x80 >> (i % 8)):
                bits |= 1 << i
        return cls(m, k, bits)

    @property
    def wire_size(self) -> int:
        return 6 + (self.m + 7) // 8
