"""Undirected connected topologies with a designated destination node.

Nodes are integers 0..n-1.  By convention the destination (the collecting
roadside unit) is the highest index unless stated otherwise.  Edges are
unordered pairs of distinct nodes stored as (min, max) tuples.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Set, Tuple

Edge = Tuple[int, int]
Path = Tuple[int, ...]

DEFAULT_PATH_CAP = 10 ** 6


class BudgetExceeded(RuntimeError):
    """Raised when an enumeration would exceed its configured cap."""


def _norm_edge(u: int, v: int) -> Edge:
    if u == v:
        raise ValueError("self-loop %d-%d" % (u, v))
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class NeighborProfile:
    """Degree profile seen by the destination: per-node neighbor counts.

    ``nodes`` lists the non-destination node ids in ascending order and
    ``gamma`` the matching degrees (destination-adjacency included).
    ``gamma_rsu`` is the destination's own degree.
    """

    n: int
    nodes: Tuple[int, ...]
    gamma: Tuple[int, ...]
    gamma_rsu: int

    @property
    def gamma_sum(self) -> int:
        return sum(self.gamma)

    def degree_of(self, node: int) -> int:
        return self.gamma[self.nodes.index(node)]


class Topology:
    """A simple connected undirected graph plus destination marker."""

    def __init__(self, n: int, edges: Iterable[Edge], dest: int | None = None):
        if n < 2:
            raise ValueError("need at least 2 nodes, got %d" % n)
        self.n = n
        self.dest = n - 1 if dest is None else dest
        if not 0 <= self.dest < n:
            raise ValueError("destination %d out of range" % self.dest)
        norm = set()
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge (%d,%d) out of range" % (u, v))
            norm.add(_norm_edge(u, v))
        self.edges: Set[Edge] = norm
        self.edge_list: List[Edge] = sorted(norm)
        nbrs: Dict[int, List[int]] = {i: [] for i in range(n)}
        for u, v in self.edge_list:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self.neighbors: Dict[int, Tuple[int, ...]] = {
            i: tuple(sorted(js)) for i, js in nbrs.items()
        }
        if not self._connected():
            raise ValueError("topology is not connected")

    def _connected(self) -> bool:
        seen = {0}
        stack = [0]
        while stack:
            u = stack.pop()
            for v in self.neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == self.n

    # ------------------------------------------------------------------
    # basic queries

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def degree(self, node: int) -> int:
        return len(self.neighbors[node])

    @property
    def gamma_rsu(self) -> int:
        return self.degree(self.dest)

    def has_edge(self, u: int, v: int) -> bool:
        return _norm_edge(u, v) in self.edges

    def non_dest_nodes(self) -> Tuple[int, ...]:
        return tuple(i for i in range(self.n) if i != self.dest)

    def profile(self) -> NeighborProfile:
        nodes = self.non_dest_nodes()
        return NeighborProfile(
            n=self.n,
            nodes=nodes,
            gamma=tuple(self.degree(i) for i in nodes),
            gamma_rsu=self.gamma_rsu,
        )

    def shortest_hops(self, target: int) -> List[int]:
        """BFS hop counts from every node to ``target``."""
        dist = [-1] * self.n
        dist[target] = 0
        frontier = [target]
        while frontier:
            nxt = []
            for u in frontier:
                for v in self.neighbors[u]:
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        return dist

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, Topology)
            and self.n == other.n
            and self.dest == other.dest
            and self.edges == other.edges
        )

    def __repr__(self) -> str:
        return "Topology(n=%d, e=%d, dest=%d)" % (self.n, self.edge_count, self.dest)

    # ------------------------------------------------------------------
    # text format: first line "n <count> dest <index>", then one "u v" per edge

    def to_text(self) -> str:
        lines = ["n %d dest %d" % (self.n, self.dest)]
        lines.extend("%d %d" % e for e in self.edge_list)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Topology":
        header = None
        edges: List[Edge] = []
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if header is None:
                parts = line.split()
                if len(parts) != 4 or parts[0] != "n" or parts[2] != "dest":
                    raise ValueError("bad header line: %r" % raw)
                header = (int(parts[1]), int(parts[3]))
            else:
                parts = line.split()
                if len(parts) != 2:
                    raise ValueError("bad edge line: %r" % raw)
                edges.append((int(parts[0]), int(parts[1])))
        if header is None:
            raise ValueError("empty topology file")
        return cls(header[0], edges, dest=header[1])

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str) -> "Topology":
        with open(path) as fh:
            return cls.from_text(fh.read())


# ----------------------------------------------------------------------
# complement edges (candidate false positives)


def complement_edges(t: Topology) -> List[Edge]:
    """Unordered non-edges between distinct non-destination nodes."""
    nodes = t.non_dest_nodes()
    out = []
    for a in range(len(nodes)):
        for b in range(a + 1, len(nodes)):
            e = (nodes[a], nodes[b])
            if e not in t.edges:
                out.append(e)
    return out


def complement_count(n: int, gamma_rsu: int, gamma_sum: int) -> int:
    """Closed-form size of the complement edge set from degree counts alone.

    ``gamma_sum`` is the total degree over non-destination nodes, so the
    edge count is (gamma_rsu + gamma_sum) / 2.
    """
    if (gamma_rsu + gamma_sum) % 2:
        raise ValueError("degree total must be even")
    return (
        n * (n - 1) // 2
        - (gamma_rsu + gamma_sum) // 2
        - n
        + gamma_rsu
        + 1
    )


# ----------------------------------------------------------------------
# path enumeration


def enumerate_paths(
    t: Topology,
    source: int,
    hops: int,
    max_paths: int = DEFAULT_PATH_CAP,
) -> List[Path]:
    """All simple paths of exactly ``hops`` edges from source to destination.

    Deterministic order: depth first, ascending neighbor index at every
    branch.  Raises BudgetExceeded if more than ``max_paths`` would be
    produced.
    """
    if hops < 1:
        raise ValueError("hops must be positive")
    if source == t.dest:
        raise ValueError("source equals destination")
    out: List[Path] = []
    prefix = [source]
    on_path = {source}

    def walk(u: int, remaining: int) -> None:
        if remaining == 1:
            if t.dest in t.neighbors[u] and t.dest not in on_path:
                if len(out) >= max_paths:
                    raise BudgetExceeded(
                        "more than %d paths of %d hops" % (max_paths, hops)
                    )
                out.append(tuple(prefix) + (t.dest,))
            return
        for v in t.neighbors[u]:
            if v in on_path or v == t.dest:
                continue
            prefix.append(v)
            on_path.add(v)
            walk(v, remaining - 1)
            on_path.discard(v)
            prefix.pop()

    walk(source, hops)
    return out


def path_edges(path: Path) -> Tuple[Edge, ...]:
    """Directed hops of a path, in travel order."""
    return tuple((path[i], path[i + 1]) for i in range(len(path) - 1))


def path_double_edges(path: Path) -> Tuple[Tuple[int, int, int], ...]:
    """Two-hop segments covered by every second node of a path.

    A path with h hops yields floor(h/2) segments: nodes at positions
    2, 4, ... (1-based) each cover predecessor -> self -> successor.
    For odd h the final hop is covered by no segment.
    """
    h = len(path) - 1
    return tuple(
        (path[2 * t], path[2 * t + 1], path[2 * t + 2]) for t in range(h // 2)
    )


def complete_topology(n: int, dest: int | None = None) -> Topology:
    return Topology(
        n, [(u, v) for u in range(n) for v in range(u + 1, n)], dest=dest
    )


# ----------------------------------------------------------------------
# generators


def random_sparse_topology(
    n: int, e: int, seed: int, dest: int | None = None
) -> Topology:
    """Connected topology with exactly ``e`` edges: random spanning tree
    first, then extra edges sampled uniformly from the remaining pairs."""
    max_e = n * (n - 1) // 2
    if not n - 1 <= e <= max_e:
        raise ValueError("edge count %d outside [%d, %d]" % (e, n - 1, max_e))
    rng = random.Random(seed)
    order = list(range(n))
    rng.shuffle(order)
    edges: Set[Edge] = set()
    for i in range(1, n):
        parent = order[rng.randrange(i)]
        edges.add(_norm_edge(order[i], parent))
    rest = [
        (u, v)
        for u in range(n)
        for v in range(u + 1, n)
        if (u, v) not in edges
    ]
    edges.update(rng.sample(rest, e - (n - 1)))
    return Topology(n, edges, dest=dest)


def _erdos_gallai_ok(degrees: Sequence[int]) -> bool:
    d = sorted(degrees, reverse=True)
    n = len(d)
    if sum(d) % 2 or (d and (d[0] >= n or d[-1] < 0)):
        return False
    prefix = 0
    for k in range(1, n + 1):
        prefix += d[k - 1]
        tail = sum(min(x, k) for x in d[k:])
        if prefix > k * (k - 1) + tail:
            return False
    return True


def topology_from_profile(
    gamma: Sequence[int], gamma_rsu: int, seed: int | None = None
) -> Topology:
    """Connected realization of a degree profile.

    Node i < n-1 gets degree gamma[i]; the destination (index n-1) gets
    gamma_rsu.  Deterministic Havel-Hakimi construction when ``seed`` is
    None; otherwise the realization is randomized by degree-preserving
    edge swaps.  Raises ValueError when the profile is not realizable as
    a connected simple graph.
    """
    degrees = list(gamma) + [gamma_rsu]
    n = len(degrees)
    if min(degrees) < 1:
        raise ValueError("connected graph needs minimum degree 1")
    if not _erdos_gallai_ok(degrees):
        raise ValueError("degree profile %r is not graphical" % (degrees,))

    # Havel-Hakimi with deterministic tie-breaking by node index.
    residual = list(degrees)
    edges: Set[Edge] = set()
    while True:
        nodes = sorted(range(n), key=lambda i: (-residual[i], i))
        u = nodes[0]
        if residual[u] == 0:
            break
        targets = [v for v in nodes[1:] if (min(u, v), max(u, v)) not in edges]
        take = targets[: residual[u]]
        if len(take) < residual[u]:
            raise ValueError("degree profile %r is not graphical" % (degrees,))
        for v in take:
            edges.add(_norm_edge(u, v))
            residual[v] -= 1
        residual[u] = 0

    def components(es: Set[Edge]) -> List[Set[int]]:
        seen: Set[int] = set()
        comps = []
        adj: Dict[int, List[int]] = {i: [] for i in range(n)}
        for a, b in es:
            adj[a].append(b)
            adj[b].append(a)
        for start in range(n):
            if start in seen:
                continue
            comp = {start}
            stack = [start]
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in comp:
                        comp.add(y)
                        stack.append(y)
            seen |= comp
            comps.append(comp)
        return comps

    # Degree-preserving swaps to merge components, if any.
    comps = components(edges)
    guard = 0
    while len(comps) > 1:
        guard += 1
        if guard > 4 * n * n:
            raise ValueError("could not connect realization of %r" % (degrees,))
        main, other = comps[0], comps[1]
        swapped = False
        for a, b in sorted(e for e in edges if e[0] in main and e[1] in main):
            for c, d in sorted(e for e in edges if e[0] in other and e[1] in other):
                if (
                    not {a, b} & {c, d}
                    and _norm_edge(a, c) not in edges
                    and _norm_edge(b, d) not in edges
                ):
                    edges -= {(a, b) if a < b else (b, a), (c, d) if c < d else (d, c)}
                    edges.add(_norm_edge(a, c))
                    edges.add(_norm_edge(b, d))
                    swapped = True
                    break
            if swapped:
                break
        if not swapped:
            raise ValueError("could not connect realization of %r" % (degrees,))
        comps = components(edges)

    topo = Topology(n, edges, dest=n - 1)
    if seed is None:
        return topo

    # Randomize by 2-swaps that keep the graph simple and connected.
    rng = random.Random(seed)
    es = list(topo.edges)
    current = set(es)
    for _ in range(8 * len(es)):
        (a, b), (c, d) = rng.sample(sorted(current), 2)
        if rng.random() < 0.5:
            c, d = d, c
        if len({a, b, c, d}) < 4:
            continue
        e1, e2 = _norm_edge(a, c), _norm_edge(b, d)
        if e1 in current or e2 in current:
            continue
        trial = (current - {_norm_edge(a, b), _norm_edge(c, d)}) | {e1, e2}
        try:
            topo = Topology(n, trial, dest=n - 1)
        except ValueError:
            continue
        current = trial
    return Topology(n, current, dest=n - 1)
