"""Topology learning at the destination from filter-carrying packets.

Two schemes:

* single-source multi-packet: every non-destination node sends its own
  filter holding one identity per incident edge; the destination checks
  each candidate directed edge against the sender's filter, keeps an
  edge only when both directions verify, and finally adds its own edges
  from local neighbor discovery.

* multi-source single-packet: one packet walks the whole network and
  every node embeds its incident edges into the shared filter on first
  visit; recovery is the same mutual check against the single filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Set, Tuple

from .bloom import BloomFilter
from .identity import KeyRing
from .topology import Topology


@dataclass
class SsmpParams:
    """Per-node filter sizes and index counts, keyed by node id."""

    m: Dict[int, int]
    k: Dict[int, int]

    @classmethod
    def uniform(cls, t: Topology, m: int, k: int) -> "SsmpParams":
        nodes = t.non_dest_nodes()
        return cls({x: m for x in nodes}, {x: k for x in nodes})

    def validate(self, nodes: Iterable[int]) -> None:
        for x in nodes:
            if self.m.get(x, 0) < 1 or self.k.get(x, 0) < 1:
                raise ValueError("missing or invalid filter params for node %d" % x)


@dataclass
class MsspParams:
    m: int
    k: int


@dataclass
class LearningPacket:
    """One in-flight learning packet: origin, sequence number, filter,
    and the set of nodes that already embedded into it."""

    source: int
    seq: int
    bloom: BloomFilter
    visited: Set[int] = field(default_factory=set)


# ----------------------------------------------------------------------
# single-source multi-packet


def ssmp_embed(
    t: Topology, keys: KeyRing, node: int, params: SsmpParams, seq: int
) -> LearningPacket:
    """The packet node emits: its own filter over all incident edges."""
    if node == t.dest:
        raise ValueError("destination does not emit a learning packet")
    bloom = BloomFilter(params.m[node], params.k[node])
    for nbr in t.neighbors[node]:
        bloom.insert(keys.edge_id(node, nbr), seq)
    return LearningPacket(source=node, seq=seq, bloom=bloom, visited={node})


def ssmp_round(
    t: Topology, keys: KeyRing, params: SsmpParams, seq: int
) -> Dict[int, LearningPacket]:
    """One packet per non-destination node, shared sequence number."""
    params.validate(t.non_dest_nodes())
    return {
        node: ssmp_embed(t, keys, node, params, seq)
        for node in t.non_dest_nodes()
    }


def _reinforce_and_finish(
    adj: List[List[int]],
    n: int,
    dest: int,
    dest_neighbors: Iterable[int],
) -> Tuple[Topology, List[List[int]]]:
    """Mutual rule over non-destination pairs, then inject the
    destination's own edges, known to it from neighbor discovery."""
    for i in range(n):
        for j in range(i + 1, n):
            if adj[i][j] != adj[j][i]:
                adj[i][j] = adj[j][i] = 0
    for nbr in dest_neighbors:
        if not 0 <= nbr < n or nbr == dest:
            raise ValueError("bad destination neighbor %d" % nbr)
        adj[dest][nbr] = adj[nbr][dest] = 1
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if adj[i][j]]
    return Topology(n, edges, dest=dest), adj


def ssmp_recover(
    packets: Mapping[int, LearningPacket],
    keys: KeyRing,
    n: int,
    dest: int,
    dest_neighbors: Iterable[int],
) -> Tuple[Topology, List[List[int]]]:
    """Destination-side recovery from one packet per node.

    Returns the learned topology and the adjacency matrix after the
    mutual rule.  The learned edge set always contains the true one:
    filters have no false negatives and the destination's own edges come
    from ground truth.
    """
    adj = [[0] * n for _ in range(n)]
    for i, packet in packets.items():
        if packet.source != i:
            raise ValueError("packet filed under %d came from %d" % (i, packet.source))
        for j in range(n):
            if j == i or j == dest:
                continue
            if packet.bloom.contains(keys.edge_id(i, j), packet.seq):
                adj[i][j] = 1
    return _reinforce_and_finish(adj, n, dest, dest_neighbors)


def route_hops(t: Topology) -> Dict[int, int]:
    """Per-node hop count to the destination along shortest routes."""
    dist = t.shortest_hops(t.dest)
    return {i: dist[i] for i in t.non_dest_nodes()}


# ----------------------------------------------------------------------
# multi-source single-packet


def mssp_walk(t: Topology, start: int | None = None) -> List[int]:
    """Deterministic node sequence visiting every non-destination node
    and ending at the destination.

    Depth-first traversal of a breadth-first spanning tree rooted at the
    lowest non-destination index (children in ascending order), skipping
    subtrees that contain no non-destination nodes, cut short once the
    last non-destination node is reached, then a shortest-path tail to
    the destination over the full graph.  Backtracking steps are real
    packet hops.
    """
    if start is None:
        start = 0 if t.dest != 0 else 1
    if start == t.dest:
        raise ValueError("walk must start at a non-destination node")

    # BFS tree, parents chosen in ascending discovery order.
    parent = {start: None}
    order = [start]
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for v in t.neighbors[u]:
                if v not in parent:
                    parent[v] = u
                    order.append(v)
                    nxt.append(v)
        frontier = nxt
    children: Dict[int, List[int]] = {u: [] for u in parent}
    for v, p in parent.items():
        if p is not None:
            children[p].append(v)
    for u in children:
        children[u].sort()

    # Count non-destination nodes per subtree so barren branches are
    # never entered.
    weight: Dict[int, int] = {}
    for u in reversed(order):
        weight[u] = (1 if u != t.dest else 0) + sum(weight[c] for c in children[u])

    walk = [start]
    todo = t.n - 1 - (1 if start != t.dest else 0)

    def descend(u: int) -> bool:
        nonlocal todo
        for c in children[u]:
            if weight[c] == 0:
                continue
            walk.append(c)
            if c != t.dest:
                todo -= 1
                if todo == 0:
                    return True
            if descend(c):
                return True
            walk.append(u)
        return False

    if todo:
        descend(start)

    # Tail: shortest path from wherever the walk stopped to the
    # destination, deterministic by BFS with ascending neighbor order.
    tail_from = walk[-1]
    if tail_from != t.dest:
        prev = {tail_from: None}
        frontier = [tail_from]
        while t.dest not in prev:
            nxt = []
            for u in frontier:
                for v in t.neighbors[u]:
                    if v not in prev:
                        prev[v] = u
                        nxt.append(v)
            frontier = nxt
        hop: List[int] = []
        at = t.dest
        while at != tail_from:
            hop.append(at)
            at = prev[at]
        walk.extend(reversed(hop))
    return walk


def mssp_embed_walk(
    t: Topology, keys: KeyRing, params: MsspParams, seq: int, start: int | None = None
) -> LearningPacket:
    """Run the walk, embedding every node's incident edges on first
    visit.  Revisits embed nothing."""
    walk = mssp_walk(t, start)
    bloom = BloomFilter(params.m, params.k)
    visited: Set[int] = set()
    for node in walk:
        if node == t.dest or node in visited:
            continue
        visited.add(node)
        for nbr in t.neighbors[node]:
            bloom.insert(keys.edge_id(node, nbr), seq)
    return LearningPacket(source=walk[0], seq=seq, bloom=bloom, visited=visited)


def mssp_recover(
    packet: LearningPacket,
    keys: KeyRing,
    n: int,
    dest: int,
    dest_neighbors: Iterable[int],
) -> Tuple[Topology, List[List[int]]]:
    """Destination-side recovery from the shared filter."""
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        if i == dest:
            continue
        for j in range(n):
            if j == i or j == dest:
                continue
            if packet.bloom.contains(keys.edge_id(i, j), packet.seq):
                adj[i][j] = 1
    return _reinforce_and_finish(adj, n, dest, dest_neighbors)
