"""Closed-form false-positive analysis for filter-based edge embedding.

All combinatorial quantities are evaluated in exact integer arithmetic
and converted to float only at the final ratio, so intermediate terms at
m**(gamma*k) scale neither overflow nor lose precision.  Occupancy
follows the classical balls-into-bins law: after ``inserted`` uniform
draws with replacement into m cells, exactly i cells are occupied with
probability C(m,i) * Surj(inserted, i) / m**inserted, where Surj counts
surjections and equals S(inserted, i) * i! for Stirling numbers of the
second kind.
"""

from __future__ import annotations

import itertools
from functools import lru_cache
from math import comb, factorial
from typing import Dict, List, Mapping, Sequence, Tuple

from .topology import (
    BudgetExceeded,
    DEFAULT_PATH_CAP,
    NeighborProfile,
    Path,
    Topology,
    complement_count,
    complement_edges,
    enumerate_paths,
    path_double_edges,
    path_edges,
)

DEFAULT_COMBINATION_CAP = 10 ** 6


@lru_cache(maxsize=64)
def _stirling_row(d: int) -> Tuple[int, ...]:
    """Row of Stirling numbers of the second kind: S(d, 0..d)."""
    row = [1]
    for n in range(1, d + 1):
        prev = row
        row = [0] * (n + 1)
        for j in range(1, n + 1):
            row[j] = (j * prev[j] if j < n else 0) + prev[j - 1]
    return tuple(row)


def stirling2(d: int, i: int) -> int:
    """Number of ways to partition d labelled items into i nonempty sets."""
    if d < 0 or i < 0:
        raise ValueError("arguments must be nonnegative")
    if i > d:
        return 0
    return _stirling_row(d)[i]


def p_set_bits(i: int, m: int, inserted: int) -> float:
    """Probability that ``inserted`` uniform draws occupy exactly i of m cells."""
    if not 1 <= m:
        raise ValueError("m must be positive")
    if i < 0 or i > m or i > inserted:
        return 0.0
    if inserted == 0:
        return 1.0 if i == 0 else 0.0
    numer = comb(m, i) * stirling2(inserted, i) * factorial(i)
    return numer / m ** inserted


def occupancy_pmf(m: int, inserted: int) -> List[float]:
    """P(exactly i cells occupied) for i = 0..min(m, inserted)."""
    if inserted == 0:
        return [1.0]
    row = _stirling_row(inserted)
    den = m ** inserted
    top = min(m, inserted)
    return [
        (comb(m, i) * row[i] * factorial(i)) / den if i <= inserted else 0.0
        for i in range(top + 1)
    ]


def p_edge_recovered(m: int, k: int, gamma: int) -> float:
    """Chance that one non-embedded identity passes a filter holding
    ``gamma`` embedded identities of k indices each."""
    if k < 1 or gamma < 0:
        raise ValueError("k must be positive and gamma nonnegative")
    if gamma == 0:
        return 0.0
    pmf = occupancy_pmf(m, gamma * k)
    return sum(p * (i / m) ** k for i, p in enumerate(pmf) if i)


# ----------------------------------------------------------------------
# single-source multi-packet learning


def _pass_probs(
    nodes: Sequence[int],
    degree: Mapping[int, int],
    m: Mapping[int, int],
    k: Mapping[int, int],
) -> Dict[int, float]:
    return {x: p_edge_recovered(m[x], k[x], degree[x]) for x in nodes}


def ssmp_fpr_exact(
    t: Topology, m: Mapping[int, int], k: Mapping[int, int]
) -> float:
    """Probability that at least one absent edge survives recovery when
    every node sends its own filter and edges need both directions.

    Per-edge events are treated as independent across the complement
    set; each event needs both endpoint filters to pass, which are
    physically independent filters.
    """
    comp = complement_edges(t)
    if not comp:
        return 0.0
    f = _pass_probs(
        t.non_dest_nodes(), {x: t.degree(x) for x in t.non_dest_nodes()}, m, k
    )
    miss = 1.0
    for a, b in comp:
        miss *= 1.0 - f[a] * f[b]
    return 1.0 - miss


def ssmp_fpr_bound(
    profile: NeighborProfile, m: Mapping[int, int], k: Mapping[int, int]
) -> float:
    """Topology-free upper bound from the degree profile alone.

    Nodes are sorted by their single-filter pass probability; each node
    is paired with the largest n - gamma - 2 values among the others,
    covering any placement of its complement edges.  May exceed 1.
    """
    n = profile.n
    f = _pass_probs(
        profile.nodes,
        dict(zip(profile.nodes, profile.gamma)),
        m,
        k,
    )
    order = sorted(profile.nodes, key=lambda x: (f[x], x))
    values = [f[x] for x in order]
    total = 0.0
    for pos, x in enumerate(order):
        cnt = n - profile.degree_of(x) - 2
        if cnt <= 0:
            continue
        cnt = min(cnt, n - 2)
        others = values[:pos] + values[pos + 1 :]
        total += f[x] * sum(others[-cnt:])
    return total


# ----------------------------------------------------------------------
# multi-source single-packet learning


def mssp_fpr(m: int, k: int, profile: NeighborProfile) -> float:
    """Exact false-positive probability for the shared-filter scheme.

    The filter holds one identity per directed true edge, gamma_sum in
    total.  An absent edge needs both of its directions to pass, 2k
    index draws against the occupied cells.
    """
    e_bar = complement_count(profile.n, profile.gamma_rsu, profile.gamma_sum)
    if e_bar <= 0:
        return 0.0
    pmf = occupancy_pmf(m, profile.gamma_sum * k)
    total = 0.0
    for j, pj in enumerate(pmf):
        if j == 0:
            continue
        delta = (j / m) ** (2 * k)
        total += pj * (1.0 - (1.0 - delta) ** e_bar)
    return total


def mssp_fpr_double_sum(m: int, k: int, profile: NeighborProfile) -> float:
    """Same quantity as mssp_fpr, written as the explicit sum over the
    number of surviving absent edges.  Kept for cross-validation."""
    e_bar = complement_count(profile.n, profile.gamma_rsu, profile.gamma_sum)
    if e_bar <= 0:
        return 0.0
    pmf = occupancy_pmf(m, profile.gamma_sum * k)
    total = 0.0
    for i in range(1, e_bar + 1):
        ci = comb(e_bar, i)
        for j, pj in enumerate(pmf):
            if j == 0:
                continue
            delta = (j / m) ** (2 * k)
            total += ci * delta ** i * (1.0 - delta) ** (e_bar - i) * pj
    return total


def impersonation_success_bound(m: int, k: int, profile: NeighborProfile) -> float:
    """Lower bound on the chance that k uniformly chosen positions stand
    in for a keyed identity the attacker cannot derive.

    Conditioning on i cells occupied by the legitimate embeddings, the
    attacker and the impersonated node choose matching footprints with
    probability at least sum_j C(m-i, j) * (C(k,j) j! i^(k-j) / m^k)^2.
    """
    inserted = profile.gamma_sum * k
    pmf = occupancy_pmf(m, inserted)
    mk = m ** k
    total = 0.0
    for i, pi in enumerate(pmf):
        if i == 0 or pi == 0.0:
            continue
        inner = 0.0
        for j in range(0, k + 1):
            ways = comb(m - i, j)
            if ways == 0:
                continue
            match = comb(k, j) * factorial(j) * i ** (k - j)
            inner += ways * (match / mk) ** 2
        total += pi * inner
    return total


# ----------------------------------------------------------------------
# payload provenance


def payload_pass_prob(m: int, k: int, theta: int) -> float:
    """Pass probability for one absent identity against a payload filter
    carrying theta embedded identities."""
    return p_edge_recovered(m, k, theta)


def _path_items(path: Path, scheme: str) -> frozenset:
    if scheme == "de":
        return frozenset(path_edges(path))
    if scheme == "dde":
        return frozenset(path_double_edges(path))
    raise ValueError("scheme must be 'de' or 'dde'")


def payload_fpr_bound_for_path(
    paths: Sequence[Path],
    actual_index: int,
    m: int,
    k: int,
    beta: int,
    scheme: str,
    max_combinations: int = DEFAULT_COMBINATION_CAP,
) -> float:
    """Union bound on recovering beta alternative paths alongside the
    actual one, for a fixed actual path among ``paths``."""
    lam = len(paths)
    if beta < 1:
        raise ValueError("beta must be positive")
    if lam <= 1 or beta > lam - 1:
        return 0.0
    n_comb = comb(lam - 1, beta)
    if n_comb > max_combinations:
        raise BudgetExceeded(
            "C(%d,%d) = %d combinations exceed cap %d"
            % (lam - 1, beta, n_comb, max_combinations)
        )
    hops = len(paths[actual_index]) - 1
    theta = hops if scheme == "de" else hops // 2
    p = payload_pass_prob(m, k, theta)
    actual_items = _path_items(paths[actual_index], scheme)
    alt_sets = [
        _path_items(path, scheme) - actual_items
        for idx, path in enumerate(paths)
        if idx != actual_index
    ]
    total = 0.0
    for combo in itertools.combinations(alt_sets, beta):
        union = frozenset().union(*combo)
        total += p ** len(union)
    return total


def payload_fpr_bound(
    t: Topology,
    source: int,
    hops: int,
    m: int,
    k: int,
    beta: int,
    scheme: str,
    path_mode: str = "uniform",
    max_combinations: int = DEFAULT_COMBINATION_CAP,
    max_paths: int = DEFAULT_PATH_CAP,
) -> float:
    """Analytic false-positive bound for payload path recovery.

    ``path_mode`` follows the trial harness: 'fixed' bounds the rate for
    the first enumerated path, 'uniform' averages the per-path bounds
    over all candidate actual paths.
    """
    paths = enumerate_paths(t, source, hops, max_paths)
    if not paths:
        raise ValueError("no %d-hop path from %d to destination" % (hops, source))
    if path_mode == "fixed":
        return payload_fpr_bound_for_path(
            paths, 0, m, k, beta, scheme, max_combinations
        )
    if path_mode != "uniform":
        raise ValueError("path_mode must be 'uniform' or 'fixed'")
    total = 0.0
    for idx in range(len(paths)):
        total += payload_fpr_bound_for_path(
            paths, idx, m, k, beta, scheme, max_combinations
        )
    return total / len(paths)


def payload_fpr_bound_in_context(
    t: Topology,
    context: Topology,
    source: int,
    hops: int,
    m: int,
    k: int,
    beta: int,
    scheme: str,
    path_mode: str = "uniform",
    max_combinations: int = DEFAULT_COMBINATION_CAP,
    max_paths: int = DEFAULT_PATH_CAP,
) -> float:
    """Bound when recovery searches ``context`` for candidates while the
    packet actually travelled a path of ``t``.

    Every path of ``t`` must also be a path of ``context`` (recovery with
    the true topology or any supergraph of it).  With ``context is t``
    this reduces to :func:`payload_fpr_bound`.
    """
    cand = enumerate_paths(context, source, hops, max_paths)
    actual = enumerate_paths(t, source, hops, max_paths)
    if not actual:
        raise ValueError("no %d-hop path from %d to destination" % (hops, source))
    where = {path: idx for idx, path in enumerate(cand)}
    try:
        indices = [where[path] for path in actual]
    except KeyError as exc:
        raise ValueError(
            "actual path %r missing from recovery context" % (exc.args[0],)
        )
    if path_mode == "fixed":
        indices = indices[:1]
    elif path_mode != "uniform":
        raise ValueError("path_mode must be 'uniform' or 'fixed'")
    total = 0.0
    for idx in indices:
        total += payload_fpr_bound_for_path(
            cand, idx, m, k, beta, scheme, max_combinations
        )
    return total / len(indices)
