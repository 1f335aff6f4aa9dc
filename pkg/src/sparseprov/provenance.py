"""Path provenance: embed a route into a payload filter, recover it at
the destination.

Two embedding schemes:

* de: every path node inserts the identity of its forward edge, h
  insertions for an h-hop path, and applies one hash-chain update.

* dde: every second path node inserts a two-hop segment identity
  (predecessor -> itself -> successor), floor(h/2) insertions; for odd
  h the final hop is covered by no insertion.

Recovery enumerates candidate paths whose items all pass the filter,
walking the context graph depth first with ascending node order, then
resolves among candidates by recomputing hash chains, giving up after
beta mismatching candidates.  A single candidate needs no chain check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from .bloom import BloomFilter
from .identity import CHAIN_BYTES, KeyRing, chain_over
from .topology import (
    DEFAULT_PATH_CAP,
    BudgetExceeded,
    Path,
    Topology,
    path_double_edges,
    path_edges,
)

RECOVERED = "recovered"
FALSE_POSITIVE = "false_positive"
EXHAUSTED = "exhausted"

_HEADER_BYTES = 8  # u16 source, u32 seq, u16 hops


@dataclass
class PayloadPacket:
    source: int
    seq: int
    hops: int
    bloom: BloomFilter
    chain: bytes

    def to_bytes(self) -> bytes:
        if not 0 <= self.source < 1 << 16:
            raise ValueError("source does not fit u16")
        if not 0 <= self.seq < 1 << 32:
            raise ValueError("seq does not fit u32")
        if not 0 <= self.hops < 1 << 16:
            raise ValueError("hops does not fit u16")
        if len(self.chain) != CHAIN_BYTES:
            raise ValueError("chain must be %d bytes" % CHAIN_BYTES)
        return (
            self.source.to_bytes(2, "big")
            + self.seq.to_bytes(4, "big")
            + self.hops.to_bytes(2, "big")
            + self.bloom.to_bytes()
            + self.chain
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "PayloadPacket":
        if len(data) < _HEADER_BYTES + 6 + CHAIN_BYTES:
            raise ValueError("truncated payload packet")
        source = int.from_bytes(data[0:2], "big")
        seq = int.from_bytes(data[2:6], "big")
        hops = int.from_bytes(data[6:8], "big")
        bloom = BloomFilter.from_bytes(data[_HEADER_BYTES:-CHAIN_BYTES])
        chain = data[-CHAIN_BYTES:]
        return cls(source=source, seq=seq, hops=hops, bloom=bloom, chain=chain)


@dataclass
class RecoveryResult:
    outcome: str
    path: Optional[Path]
    candidates: int
    checked: int  # chain verifications spent


def _validate_path(path: Path) -> int:
    if len(path) < 2:
        raise ValueError("path needs at least one hop")
    if len(set(path)) != len(path):
        raise ValueError("path revisits a node")
    return len(path) - 1


def de_chain(keys: KeyRing, path: Path, seq: int) -> bytes:
    return chain_over(seq, [keys.edge_id(u, v) for u, v in path_edges(path)])


def dde_chain(keys: KeyRing, path: Path, seq: int) -> bytes:
    return chain_over(
        seq, [keys.double_edge_id(a, b, c) for a, b, c in path_double_edges(path)]
    )


def de_transmit(path: Path, keys: KeyRing, m: int, k: int, seq: int) -> PayloadPacket:
    hops = _validate_path(path)
    bloom = BloomFilter(m, k)
    for u, v in path_edges(path):
        bloom.insert(keys.edge_id(u, v), seq)
    return PayloadPacket(
        source=path[0],
        seq=seq,
        hops=hops,
        bloom=bloom,
        chain=de_chain(keys, path, seq),
    )


def dde_transmit(path: Path, keys: KeyRing, m: int, k: int, seq: int) -> PayloadPacket:
    hops = _validate_path(path)
    bloom = BloomFilter(m, k)
    for a, b, c in path_double_edges(path):
        bloom.insert(keys.double_edge_id(a, b, c), seq)
    return PayloadPacket(
        source=path[0],
        seq=seq,
        hops=hops,
        bloom=bloom,
        chain=dde_chain(keys, path, seq),
    )


# ----------------------------------------------------------------------
# context-graph item catalogs (what a full membership pass would test)


def directed_edges(t: Topology) -> Iterator[Tuple[int, int]]:
    """Ordered pairs a -> b that some path node could have embedded:
    every context edge, excluding the direction leaving the destination."""
    for a in t.non_dest_nodes():
        for b in t.neighbors[a]:
            yield (a, b)


def count_directed_edges(t: Topology) -> int:
    return sum(t.degree(a) for a in t.non_dest_nodes())


def double_edges(t: Topology) -> Iterator[Tuple[int, int, int]]:
    """Ordered two-hop segments a -> b -> c a relaying node could have
    embedded: the center and its predecessor are never the destination."""
    for b in t.non_dest_nodes():
        for a in t.neighbors[b]:
            if a == t.dest:
                continue
            for c in t.neighbors[b]:
                if c != a:
                    yield (a, b, c)


def count_double_edges(t: Topology) -> int:
    total = 0
    for b in t.non_dest_nodes():
        in_choices = t.degree(b) - (1 if t.has_edge(b, t.dest) else 0)
        total += in_choices * (t.degree(b) - 1)
    return total


# ----------------------------------------------------------------------
# recovery


def _candidates_de(
    packet: PayloadPacket,
    keys: KeyRing,
    context: Topology,
    max_candidates: int,
) -> List[Path]:
    """Filter-passing simple paths, source to destination, exactly
    packet.hops hops.  Membership per directed edge is memoized, so the
    lazy evaluation below equals a full membership pass followed by a
    walk over recovered edges."""
    dest = context.dest
    memo: Dict[Tuple[int, int], bool] = {}

    def passes(u: int, v: int) -> bool:
        got = memo.get((u, v))
        if got is None:
            got = packet.bloom.contains(keys.edge_id(u, v), packet.seq)
            memo[(u, v)] = got
        return got

    out: List[Path] = []
    prefix = [packet.source]
    on_path = {packet.source}

    def walk(u: int, remaining: int) -> None:
        if remaining == 1:
            if context.has_edge(u, dest) and passes(u, dest):
                if len(out) >= max_candidates:
                    raise BudgetExceeded(
                        "more than %d candidate paths" % max_candidates
                    )
                out.append(tuple(prefix) + (dest,))
            return
        for v in context.neighbors[u]:
            if v in on_path or v == dest:
                continue
            if not passes(u, v):
                continue
            prefix.append(v)
            on_path.add(v)
            walk(v, remaining - 1)
            on_path.discard(v)
            prefix.pop()

    walk(packet.source, packet.hops)
    return out


def _candidates_dde(
    packet: PayloadPacket,
    keys: KeyRing,
    context: Topology,
    max_candidates: int,
) -> List[Path]:
    """Filter-passing simple paths under segment membership.  Extensions
    go two hops at a time; for odd hop counts the final hop is
    constrained only by the context graph."""
    dest = context.dest
    memo: Dict[Tuple[int, int, int], bool] = {}

    def passes(a: int, b: int, c: int) -> bool:
        got = memo.get((a, b, c))
        if got is None:
            got = packet.bloom.contains(packet_id(a, b, c), packet.seq)
            memo[(a, b, c)] = got
        return got

    packet_id = keys.double_edge_id
    out: List[Path] = []
    prefix = [packet.source]
    on_path = {packet.source}

    def emit() -> None:
        if len(out) >= max_candidates:
            raise BudgetExceeded("more than %d candidate paths" % max_candidates)
        out.append(tuple(prefix))

    def walk(u: int, remaining: int) -> None:
        if remaining == 0:
            if u == dest:
                emit()
            return
        if remaining == 1:
            if context.has_edge(u, dest) and dest not in on_path:
                prefix.append(dest)
                emit()
                prefix.pop()
            return
        for b in context.neighbors[u]:
            if b in on_path or b == dest:
                continue
            for c in context.neighbors[b]:
                if c in on_path or c == b:
                    continue
                if c == dest and remaining != 2:
                    continue
                if not passes(u, b, c):
                    continue
                prefix.extend((b, c))
                on_path.add(b)
                on_path.add(c)
                walk(c, remaining - 2)
                on_path.discard(c)
                on_path.discard(b)
                del prefix[-2:]

    walk(packet.source, packet.hops)
    return out


def candidate_paths(
    packet: PayloadPacket,
    keys: KeyRing,
    context: Topology,
    scheme: str,
    max_candidates: int = DEFAULT_PATH_CAP,
) -> List[Path]:
    if scheme == "de":
        return _candidates_de(packet, keys, context, max_candidates)
    if scheme == "dde":
        return _candidates_dde(packet, keys, context, max_candidates)
    raise ValueError("scheme must be 'de' or 'dde'")


def recover(
    packet: PayloadPacket,
    keys: KeyRing,
    context: Topology,
    scheme: str = "de",
    beta: int = 1,
    no_chain: bool = False,
    count_match: bool = False,
    max_candidates: int = DEFAULT_PATH_CAP,
) -> RecoveryResult:
    """Destination-side path recovery.

    ``beta`` caps the chain verifications spent on mismatching
    candidates; ``count_match`` makes the successful verification count
    against the budget as well (same accept/reject outcomes, different
    bookkeeping).  ``no_chain`` is the legacy rule: any ambiguity is a
    false positive and chains are never consulted.
    """
    if beta < 1:
        raise ValueError("beta must be positive")
    cands = candidate_paths(packet, keys, context, scheme, max_candidates)
    if not cands:
        return RecoveryResult(EXHAUSTED, None, 0, 0)
    if len(cands) == 1:
        # Unambiguous: no chain verification needed.
        return RecoveryResult(RECOVERED, cands[0], 1, 0)
    if no_chain:
        return RecoveryResult(FALSE_POSITIVE, None, len(cands), 0)

    chain_fn: Callable[[KeyRing, Path, int], bytes] = (
        de_chain if scheme == "de" else dde_chain
    )
    fails = 0
    for cand in cands:
        if chain_fn(keys, cand, packet.seq) == packet.chain:
            return RecoveryResult(
                RECOVERED, cand, len(cands), fails + (1 if count_match else 0)
            )
        fails += 1
        if fails >= beta:
            return RecoveryResult(FALSE_POSITIVE, None, len(cands), fails)
    return RecoveryResult(EXHAUSTED, None, len(cands), fails)
