"""Trial harness and the analytic delay model.

Every plan owns a seeded key ring and draws a fresh sequence number per
trial (the trial index), so filter contents are independent across
trials and any run is reproducible from (plan, seed) alone.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .bloom import BloomFilter, index_mask
from .identity import KeyRing
from .learning import (
    MsspParams,
    SsmpParams,
    mssp_embed_walk,
    mssp_recover,
    mssp_walk,
    ssmp_recover,
    ssmp_round,
)
from .provenance import (
    EXHAUSTED,
    FALSE_POSITIVE,
    RECOVERED,
    RecoveryResult,
    candidate_paths,
    count_directed_edges,
    count_double_edges,
    de_chain,
    de_transmit,
    dde_chain,
    dde_transmit,
    recover,
)
from .topology import (
    DEFAULT_PATH_CAP,
    Topology,
    complement_edges,
    complete_topology,
    enumerate_paths,
)

LEARNING_SCHEMES = ("ssmp", "mssp")
PAYLOAD_SCHEMES = ("de", "dde")


@dataclass
class FprEstimate:
    trials: int
    errors: int

    @property
    def rate(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    @property
    def stderr(self) -> float:
        if not self.trials:
            return 0.0
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.trials)


@dataclass
class TrialPlan:
    """Everything one batch of trials depends on."""

    scheme: str
    topology: Topology
    trials: int
    seed: int
    m: Union[int, Mapping[int, int]]
    k: Union[int, Mapping[int, int]]
    # payload-only knobs
    source: int = 0
    hops: int = 0
    beta: int = 1
    context: str = "learned"  # learned | complete
    path_mode: str = "uniform"  # uniform | fixed
    no_chain: bool = False
    count_match: bool = False
    max_candidates: int = DEFAULT_PATH_CAP

    def validate(self) -> None:
        if self.scheme not in LEARNING_SCHEMES + PAYLOAD_SCHEMES:
            raise ValueError("unknown scheme %r" % self.scheme)
        if self.trials < 1:
            raise ValueError("trials must be positive")
        if self.scheme in PAYLOAD_SCHEMES:
            if not isinstance(self.m, int) or not isinstance(self.k, int):
                raise ValueError("payload schemes take scalar m and k")
            if self.hops < 1:
                raise ValueError("hops must be positive")
            if self.context not in ("learned", "complete"):
                raise ValueError("context must be 'learned' or 'complete'")
            if self.path_mode not in ("uniform", "fixed"):
                raise ValueError("path_mode must be 'uniform' or 'fixed'")
        if self.scheme == "mssp" and not isinstance(self.m, int):
            raise ValueError("mssp takes scalar m")


def _keyring(plan: TrialPlan) -> KeyRing:
    return KeyRing.generate(plan.topology.n, seed=plan.seed)


def _ssmp_params(plan: TrialPlan) -> SsmpParams:
    t = plan.topology
    if isinstance(plan.m, int):
        if not isinstance(plan.k, int):
            raise ValueError("per-node k needs per-node m")
        return SsmpParams.uniform(t, plan.m, plan.k)
    return SsmpParams(dict(plan.m), dict(plan.k))


# ----------------------------------------------------------------------
# learning trials


def iter_learning_runs(plan: TrialPlan) -> Iterator[Tuple[int, int, bool, int]]:
    """Yields (run, seq, false_positive, extra_edges) per executed run."""
    plan.validate()
    t = plan.topology
    keys = _keyring(plan)
    dest_nbrs = t.neighbors[t.dest]
    if plan.scheme == "ssmp":
        params = _ssmp_params(plan)
        for run in range(plan.trials):
            packets = ssmp_round(t, keys, params, seq=run)
            learned, _ = ssmp_recover(packets, keys, t.n, t.dest, dest_nbrs)
            extra = learned.edge_count - t.edge_count
            yield run, run, extra > 0, extra
    elif plan.scheme == "mssp":
        params = MsspParams(m=plan.m, k=plan.k)
        for run in range(plan.trials):
            packet = mssp_embed_walk(t, keys, params, seq=run)
            learned, _ = mssp_recover(packet, keys, t.n, t.dest, dest_nbrs)
            extra = learned.edge_count - t.edge_count
            yield run, run, extra > 0, extra
    else:
        raise ValueError("not a learning scheme: %r" % plan.scheme)


def run_learning_trials(plan: TrialPlan) -> FprEstimate:
    errors = sum(1 for _, _, fp, _ in iter_learning_runs(plan) if fp)
    return FprEstimate(plan.trials, errors)


# ----------------------------------------------------------------------
# payload trials


def _payload_context(plan: TrialPlan) -> Topology:
    t = plan.topology
    if plan.context == "learned":
        # Perfect learning assumed: the context is the true topology.
        return t
    return complete_topology(t.n, dest=t.dest)


def _payload_rng(plan: TrialPlan) -> random.Random:
    return random.Random("payload-%d" % plan.seed)


def iter_payload_runs(plan: TrialPlan) -> Iterator[RecoveryResult]:
    """Full protocol per run at the plan's own beta."""
    plan.validate()
    t = plan.topology
    keys = _keyring(plan)
    context = _payload_context(plan)
    paths = enumerate_paths(t, plan.source, plan.hops, plan.max_candidates)
    if not paths:
        raise ValueError("no %d-hop route from %d" % (plan.hops, plan.source))
    rng = _payload_rng(plan)
    transmit = de_transmit if plan.scheme == "de" else dde_transmit
    for run in range(plan.trials):
        idx = rng.randrange(len(paths)) if plan.path_mode == "uniform" else 0
        packet = transmit(paths[idx], keys, plan.m, plan.k, seq=run)
        yield recover(
            packet,
            keys,
            context,
            scheme=plan.scheme,
            beta=plan.beta,
            no_chain=plan.no_chain,
            count_match=plan.count_match,
            max_candidates=plan.max_candidates,
        )


def run_payload_trials(
    plan: TrialPlan, betas: Optional[Sequence[int]] = None
) -> Dict[int, FprEstimate]:
    """False-positive estimates for several betas from one execution.

    Candidates and chain checks per packet do not depend on beta, only
    the stopping rule does, so evaluating all betas on one protocol run
    equals re-running with shared seeds at a fraction of the cost.
    """
    plan.validate()
    if plan.scheme not in PAYLOAD_SCHEMES:
        raise ValueError("not a payload scheme: %r" % plan.scheme)
    if betas is None:
        betas = [plan.beta]
    if any(b < 1 for b in betas):
        raise ValueError("beta must be positive")
    t = plan.topology
    keys = _keyring(plan)
    context = _payload_context(plan)
    paths = enumerate_paths(t, plan.source, plan.hops, plan.max_candidates)
    if not paths:
        raise ValueError("no %d-hop route from %d" % (plan.hops, plan.source))
    rng = _payload_rng(plan)
    transmit = de_transmit if plan.scheme == "de" else dde_transmit
    chain_fn = de_chain if plan.scheme == "de" else dde_chain
    errors = {b: 0 for b in betas}
    for run in range(plan.trials):
        idx = rng.randrange(len(paths)) if plan.path_mode == "uniform" else 0
        packet = transmit(paths[idx], keys, plan.m, plan.k, seq=run)
        cands = candidate_paths(
            packet, keys, context, plan.scheme, plan.max_candidates
        )
        if plan.no_chain:
            if len(cands) > 1:
                for b in betas:
                    errors[b] += 1
            continue
        if len(cands) == 1:
            continue
        # Chain pass: position of the first matching candidate.
        pos = None
        for i, cand in enumerate(cands):
            if chain_fn(keys, cand, packet.seq) == packet.chain:
                pos = i
                break
        if pos is None:  # cannot happen for honestly transmitted packets
            for b in betas:  # exhaustion is an error at every budget
                errors[b] += 1
            continue
        for b in betas:
            if pos >= b:
                errors[b] += 1
    return {b: FprEstimate(plan.trials, errors[b]) for b in betas}


def run_trials(plan: TrialPlan) -> FprEstimate:
    """Single-figure entry point: error rate for the plan's scheme."""
    plan.validate()
    if plan.scheme in LEARNING_SCHEMES:
        return run_learning_trials(plan)
    return run_payload_trials(plan, [plan.beta])[plan.beta]


# ----------------------------------------------------------------------
# impersonation attack


def run_impersonation_attack(
    t: Topology,
    m: int,
    k: int,
    trials: int,
    seed: int,
    target: Optional[Tuple[int, int]] = None,
    attacker_k: Optional[int] = None,
) -> FprEstimate:
    """Random-position insertion attack against the shared filter.

    The legitimate filter carries every true directed edge; the attacker
    sets ``attacker_k`` uniformly random positions hoping to stand in
    for the keyed identities of one absent edge (x, y).  Success means
    the destination would recover that edge under the mutual rule.
    """
    comp = complement_edges(t)
    if not comp:
        raise ValueError("no absent edge to impersonate")
    if target is None:
        target = comp[0]
    elif tuple(sorted(target)) not in {tuple(e) for e in comp}:
        raise ValueError("target %r is not an absent non-destination edge" % (target,))
    if attacker_k is None:
        attacker_k = k
    x, y = target
    keys = KeyRing.generate(t.n, seed=seed)
    eids = [
        keys.edge_id(i, j) for i in t.non_dest_nodes() for j in t.neighbors[i]
    ]
    fwd = keys.edge_id(x, y)
    rev = keys.edge_id(y, x)
    rng = random.Random("attack-%d" % seed)
    hits = 0
    for seq in range(trials):
        bits = 0
        for eid in eids:
            bits |= index_mask(eid, seq, m, k)
        for _ in range(attacker_k):
            bits |= 1 << rng.randrange(m)
        want = index_mask(fwd, seq, m, k)
        if bits & want == want:
            want = index_mask(rev, seq, m, k)
            if bits & want == want:
                hits += 1
    return FprEstimate(trials, hits)


# ----------------------------------------------------------------------
# analytic delay model


@dataclass
class DelayParams:
    """Per-operation costs in seconds."""

    t_hash_node: float = 42e-6
    t_hash_rsu: float = 10e-6
    t_queue_node: float = 70e-6
    t_queue_rsu: float = 70e-6
    t_pr: float = 0.5e-3  # per-hop processing plus transmission


@dataclass
class DelayReport:
    scheme: str
    components: Dict[str, float]
    total: float
    per_node: Optional[Dict[int, float]] = None


def delay_ssmp(
    t: Topology,
    k: Union[int, Mapping[int, int]],
    p: DelayParams = DelayParams(),
) -> DelayReport:
    """Completion time when every node sends its own filter.

    Packets travel in parallel; the destination serves them one at a
    time in arrival order.  Per-node duration is embed + transit + one
    service; the total is the makespan of that schedule.
    """
    k_of = (lambda i: k) if isinstance(k, int) else (lambda i: k[i])
    hops = t.shortest_hops(t.dest)
    arrivals = []
    per_node: Dict[int, float] = {}
    for i in t.non_dest_nodes():
        embed = p.t_hash_node * k_of(i) * t.degree(i)
        transit = hops[i] * (p.t_queue_node + p.t_pr)
        service = p.t_queue_rsu + p.t_hash_rsu * t.n * k_of(i)
        arrivals.append((embed + transit, i, service))
        per_node[i] = embed + transit + service
    arrivals.sort()
    finish = 0.0
    for arrival, _, service in arrivals:
        finish = max(finish, arrival) + service
    components = {
        "embed": max(
            p.t_hash_node * k_of(i) * t.degree(i) for i in t.non_dest_nodes()
        ),
        "propagation": max(
            hops[i] * (p.t_queue_node + p.t_pr) for i in t.non_dest_nodes()
        ),
        "rsu_processing": sum(a[2] for a in arrivals),
    }
    return DelayReport("ssmp", components, finish, per_node)


def delay_mssp(t: Topology, k: int, p: DelayParams = DelayParams()) -> DelayReport:
    """Completion time for the single walking packet."""
    h_max = len(mssp_walk(t)) - 1
    gamma_sum = t.profile().gamma_sum
    components = {
        "embed": p.t_hash_node * k * gamma_sum,
        "propagation": h_max * p.t_pr,
        "rsu_processing": p.t_hash_rsu * t.n * (t.n - 1) * k,
    }
    return DelayReport("mssp", components, sum(components.values()))


def delay_payload(
    t: Topology,
    hops: int,
    k: int,
    scheme: str = "de",
    context: str = "learned",
    beta: int = 1,
    p: DelayParams = DelayParams(),
) -> DelayReport:
    """Transmit and recovery time for one payload packet.

    Recovery cost is the full membership pass over the context graph's
    items plus the chain-verification budget.
    """
    if scheme not in PAYLOAD_SCHEMES:
        raise ValueError("scheme must be 'de' or 'dde'")
    if context not in ("learned", "complete"):
        raise ValueError("context must be 'learned' or 'complete'")
    embeds = hops if scheme == "de" else hops // 2
    graph = t if context == "learned" else complete_topology(t.n, dest=t.dest)
    items = (
        count_directed_edges(graph) if scheme == "de" else count_double_edges(graph)
    )
    components = {
        "transmit": embeds * ((k + 1) * p.t_hash_node + p.t_pr),
        "recovery_membership": items * k * p.t_hash_rsu,
        "recovery_chain": beta * embeds * p.t_hash_rsu,
    }
    return DelayReport(scheme, components, sum(components.values()))
