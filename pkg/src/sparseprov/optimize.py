"""Filter-parameter selection under a total memory budget.

Three solvers, one per deployment shape:

* single shared filter: pick the hash count for a fixed size;
* equal split: one filter per sender, identical sizes, shared hash
  count chosen against the pairing bound;
* variable split: per-sender sizes on a bit granularity with per-sender
  hash counts, searched exhaustively when the composition space is
  small and by greedy unit transfers otherwise.

All solvers are deterministic; ties prefer the smaller hash count or
the earlier allocation in enumeration order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .analysis import mssp_fpr, p_edge_recovered, ssmp_fpr_bound
from .topology import NeighborProfile

DEFAULT_K_MAX = 16
DEFAULT_GRANULARITY = 16
DEFAULT_MIN_BITS = 16
DEFAULT_COMPOSITION_CAP = 200_000


@dataclass
class Optimum:
    m: Union[int, Dict[int, int]]
    k: Union[int, Dict[int, int]]
    fpr: float
    objective: str  # "exact" for the shared filter, "bound" otherwise

    def m_for(self, node: int) -> int:
        return self.m if isinstance(self.m, int) else self.m[node]

    def k_for(self, node: int) -> int:
        return self.k if isinstance(self.k, int) else self.k[node]


def solve_mssp(
    profile: NeighborProfile, m: int, k_max: int = DEFAULT_K_MAX
) -> Optimum:
    """Best hash count for the shared walking-packet filter of size m."""
    if m < 1 or k_max < 1:
        raise ValueError("m and k_max must be positive")
    best_k, best = None, None
    for k in range(1, k_max + 1):
        value = mssp_fpr(m, k, profile)
        if best is None or value < best:
            best_k, best = k, value
    return Optimum(m=m, k=best_k, fpr=best, objective="exact")


def _equal_split(profile: NeighborProfile, m_sum: int) -> Dict[int, int]:
    senders = len(profile.nodes)
    if m_sum < senders:
        raise ValueError("budget below one bit per sender")
    each = m_sum // senders
    return {node: each for node in profile.nodes}


def solve_ssmp_equal(
    profile: NeighborProfile, m_sum: int, k_max: int = DEFAULT_K_MAX
) -> Optimum:
    """Equal filter sizes, one shared hash count, chosen against the
    pairing bound.  A budget that does not divide evenly leaves the
    remainder unspent."""
    m_map = _equal_split(profile, m_sum)
    best_k, best = None, None
    for k in range(1, k_max + 1):
        k_map = {node: k for node in profile.nodes}
        value = ssmp_fpr_bound(profile, m_map, k_map)
        if best is None or value < best:
            best_k, best = k, value
    return Optimum(
        m=m_map,
        k={node: best_k for node in profile.nodes},
        fpr=best,
        objective="bound",
    )


@lru_cache(maxsize=None)
def _best_k_for_sender(m: int, gamma: int, k_max: int) -> Tuple[int, float]:
    """Hash count minimizing the sender's own pass probability."""
    best_k, best = 1, p_edge_recovered(m, 1, gamma)
    for k in range(2, k_max + 1):
        value = p_edge_recovered(m, k, gamma)
        if value < best:
            best_k, best = k, value
    return best_k, best


def _score_allocation(
    profile: NeighborProfile, m_vec: Sequence[int], k_max: int
) -> Tuple[float, Dict[int, int], Dict[int, int]]:
    """Pairing-bound value of an allocation with per-sender best k.

    The bound is monotone in each sender's pass probability, so
    minimizing them independently minimizes the bound for this m_vec.
    """
    m_map: Dict[int, int] = {}
    k_map: Dict[int, int] = {}
    for node, gamma, m in zip(profile.nodes, profile.gamma, m_vec):
        k, _ = _best_k_for_sender(m, gamma, k_max)
        m_map[node] = m
        k_map[node] = k
    return ssmp_fpr_bound(profile, m_map, k_map), m_map, k_map


def _compositions(total: int, parts: int):
    """All positive integer compositions of total into parts, in
    lexicographic order."""
    for cuts in itertools.combinations(range(1, total), parts - 1):
        prev = 0
        out = []
        for c in cuts:
            out.append(c - prev)
            prev = c
        out.append(total - prev)
        yield out


def _greedy_units(
    profile: NeighborProfile,
    units: int,
    k_max: int,
    granularity: int,
    min_units: int,
) -> Tuple[float, Dict[int, int], Dict[int, int]]:
    """Degree-proportional seed, then single-unit transfers while they
    improve the bound."""
    senders = len(profile.nodes)
    gamma_sum = profile.gamma_sum
    alloc = [min_units] * senders
    spare = units - senders * min_units
    # Hand out the spare units by largest remaining proportional demand.
    demand = [units * g / gamma_sum for g in profile.gamma]
    for _ in range(spare):
        i = max(range(senders), key=lambda j: (demand[j] - alloc[j], -j))
        alloc[i] += 1
    best, m_map, k_map = _score_allocation(
        profile, [a * granularity for a in alloc], k_max
    )
    improved = True
    while improved:
        improved = False
        for src in range(senders):
            if alloc[src] <= min_units:
                continue
            for dst in range(senders):
                if dst == src:
                    continue
                alloc[src] -= 1
                alloc[dst] += 1
                value, mm, kk = _score_allocation(
                    profile, [a * granularity for a in alloc], k_max
                )
                if value < best:
                    best, m_map, k_map = value, mm, kk
                    improved = True
                else:
                    alloc[src] += 1
                    alloc[dst] -= 1
    return best, m_map, k_map


def solve_ssmp_variable(
    profile: NeighborProfile,
    m_sum: int,
    granularity: int = DEFAULT_GRANULARITY,
    min_bits: int = DEFAULT_MIN_BITS,
    k_max: int = DEFAULT_K_MAX,
    max_compositions: int = DEFAULT_COMPOSITION_CAP,
) -> Optimum:
    """Per-sender sizes on a granularity grid, per-sender hash counts.

    Exhausts every composition of the budget when there are at most
    ``max_compositions`` of them, otherwise runs the greedy transfer
    search from a degree-proportional start.
    """
    if granularity < 1 or min_bits < granularity:
        raise ValueError("need min_bits >= granularity >= 1")
    if min_bits % granularity:
        raise ValueError("min_bits must be a multiple of granularity")
    senders = len(profile.nodes)
    units = m_sum // granularity
    min_units = min_bits // granularity
    if units < senders * min_units:
        raise ValueError("budget below %d bits per sender" % min_bits)

    # Reserve the floor for every sender; search over the excess.
    floor = min_units - 1
    free = units - senders * floor
    space = comb(free - 1, senders - 1)
    if space <= max_compositions:
        best = None
        for parts in _compositions(free, senders):
            m_vec = [(p + floor) * granularity for p in parts]
            value, m_map, k_map = _score_allocation(profile, m_vec, k_max)
            if best is None or value < best[0]:
                best = (value, m_map, k_map)
        value, m_map, k_map = best
    else:
        value, m_map, k_map = _greedy_units(
            profile, units, k_max, granularity, min_units
        )
    return Optimum(m=m_map, k=k_map, fpr=value, objective="bound")
