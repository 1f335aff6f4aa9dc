"""Trial harness and delay model tests."""

from __future__ import annotations

import math

import pytest

from sparseprov.provenance import FALSE_POSITIVE
from sparseprov.sim import (
    DelayParams,
    FprEstimate,
    TrialPlan,
    delay_mssp,
    delay_payload,
    delay_ssmp,
    iter_learning_runs,
    iter_payload_runs,
    run_impersonation_attack,
    run_learning_trials,
    run_payload_trials,
    run_trials,
)
from sparseprov.topology import Topology, complement_edges, random_sparse_topology


def fixture(seed: int = 101) -> Topology:
    return random_sparse_topology(8, 14, seed=seed)


def star_topology() -> Topology:
    return Topology(5, [(0, 1), (0, 2), (0, 3), (1, 4), (2, 4), (3, 4)])


def test_estimate_math():
    est = FprEstimate(trials=400, errors=100)
    assert est.rate == 0.25
    assert est.stderr == pytest.approx(math.sqrt(0.25 * 0.75 / 400))
    assert FprEstimate(0, 0).rate == 0.0
    assert FprEstimate(0, 0).stderr == 0.0


def test_plan_validation():
    t = fixture()
    with pytest.raises(ValueError):
        TrialPlan("nope", t, 10, 0, 16, 2).validate()
    with pytest.raises(ValueError):
        TrialPlan("ssmp", t, 0, 0, 16, 2).validate()
    with pytest.raises(ValueError):
        TrialPlan("de", t, 10, 0, {0: 16}, 2).validate()
    with pytest.raises(ValueError):
        TrialPlan("de", t, 10, 0, 16, 2, hops=0).validate()
    with pytest.raises(ValueError):
        TrialPlan("de", t, 10, 0, 16, 2, hops=2, context="guessed").validate()
    with pytest.raises(ValueError):
        TrialPlan("mssp", t, 10, 0, {0: 16}, 2).validate()


def test_learning_runs_are_deterministic():
    t = fixture()
    plan = TrialPlan("ssmp", t, 60, 7, 24, 2)
    a = list(iter_learning_runs(plan))
    b = list(iter_learning_runs(plan))
    assert a == b
    est = run_learning_trials(plan)
    assert est.errors == sum(1 for _, _, fp, _ in a if fp)
    assert run_trials(plan).errors == est.errors


def test_learning_extra_edges_consistent():
    t = fixture()
    plan = TrialPlan("mssp", t, 60, 7, 96, 2)
    for run, seq, fp, extra in iter_learning_runs(plan):
        assert run == seq
        assert extra >= 0
        assert fp == (extra > 0)


def test_payload_multi_beta_matches_full_protocol():
    t = fixture()
    betas = (1, 2, 3)
    sweep_plan = TrialPlan("de", t, 300, 11, 18, 2, source=0, hops=3)
    sweep = run_payload_trials(sweep_plan, betas)
    for beta in betas:
        plan = TrialPlan("de", t, 300, 11, 18, 2, source=0, hops=3, beta=beta)
        errors = sum(
            1 for r in iter_payload_runs(plan) if r.outcome == FALSE_POSITIVE
        )
        assert errors == sweep[beta].errors
    assert sweep[1].errors >= sweep[2].errors >= sweep[3].errors


def test_payload_trials_deterministic_and_dispatched():
    t = fixture()
    plan = TrialPlan("dde", t, 200, 13, 16, 2, source=0, hops=4, beta=1)
    a = run_payload_trials(plan, [1])[1]
    b = run_payload_trials(plan, [1])[1]
    assert (a.trials, a.errors) == (b.trials, b.errors)
    assert run_trials(plan).errors == a.errors


def test_budget_at_route_multiplicity_never_fails():
    t = star_topology()
    plan = TrialPlan("de", t, 300, 17, 8, 1, source=0, hops=2, beta=3)
    est = run_payload_trials(plan, [3])[3]
    assert est.errors == 0


def test_no_chain_mode_counts_ambiguity():
    t = star_topology()
    plan = TrialPlan(
        "de", t, 300, 17, 8, 1, source=0, hops=2, beta=3, no_chain=True
    )
    with_chain = run_payload_trials(plan, [3])[3]
    assert with_chain.errors > 0  # tiny filter is frequently ambiguous


def test_payload_plan_with_no_route_raises():
    t = Topology(3, [(0, 1), (1, 2)])
    plan = TrialPlan("de", t, 10, 0, 16, 2, source=0, hops=5)
    with pytest.raises(ValueError):
        run_trials(plan)


def test_impersonation_baseline_and_saturation():
    t = fixture()
    zero = run_impersonation_attack(t, 4096, 4, 500, seed=1, attacker_k=0)
    assert zero.errors == 0
    # Positions are drawn with replacement, so saturation needs a large
    # budget relative to m.
    full = run_impersonation_attack(t, 8, 1, 200, seed=1, attacker_k=200)
    assert full.rate == 1.0


def test_impersonation_target_validation():
    t = fixture()
    with pytest.raises(ValueError):
        run_impersonation_attack(t, 32, 1, 10, seed=1, target=t.edge_list[0])
    x, y = complement_edges(t)[0]
    est = run_impersonation_attack(t, 32, 2, 500, seed=2, target=(x, y))
    assert 0.0 <= est.rate <= 1.0


def test_impersonation_deterministic():
    t = fixture()
    a = run_impersonation_attack(t, 16, 1, 400, seed=3)
    b = run_impersonation_attack(t, 16, 1, 400, seed=3)
    assert (a.trials, a.errors) == (b.trials, b.errors)


# ----------------------------------------------------------------------
# delay model


def test_zero_cost_parameters_give_zero_delay():
    t = fixture()
    p = DelayParams(0.0, 0.0, 0.0, 0.0, 0.0)
    assert delay_ssmp(t, 4, p).total == 0.0
    assert delay_mssp(t, 4, p).total == 0.0
    assert delay_payload(t, 3, 4, "de", p=p).total == 0.0


def test_ssmp_schedule_matches_independent_oracle():
    t = fixture()
    k = 4
    p = DelayParams()
    report = delay_ssmp(t, k, p)
    hops = t.shortest_hops(t.dest)
    service = p.t_queue_rsu + p.t_hash_rsu * t.n * k
    arrivals = sorted(
        p.t_hash_node * k * t.degree(i) + hops[i] * (p.t_queue_node + p.t_pr)
        for i in t.non_dest_nodes()
    )
    finish = 0.0
    for a in arrivals:
        finish = max(finish, a) + service
    assert report.total == pytest.approx(finish)
    for i in t.non_dest_nodes():
        expected = (
            p.t_hash_node * k * t.degree(i)
            + hops[i] * (p.t_queue_node + p.t_pr)
            + service
        )
        assert report.per_node[i] == pytest.approx(expected)
    assert report.total >= max(report.per_node.values()) - 1e-12


def test_mssp_components_scale_with_k():
    t = fixture()
    one = delay_mssp(t, 1)
    four = delay_mssp(t, 4)
    assert four.components["embed"] == pytest.approx(4 * one.components["embed"])
    assert four.components["rsu_processing"] == pytest.approx(
        4 * one.components["rsu_processing"]
    )
    assert four.components["propagation"] == one.components["propagation"]


def test_parallel_filters_beat_the_walking_packet():
    for n, e, seed in ((10, 26, 1), (20, 23, 2), (20, 34, 3)):
        t = random_sparse_topology(n, e, seed=seed)
        assert delay_ssmp(t, 4).total < delay_mssp(t, 4).total


def test_payload_delay_components():
    t = random_sparse_topology(8, 14, seed=101)
    p = DelayParams()
    de = delay_payload(t, 4, 3, "de", context="learned", beta=2, p=p)
    assert de.components["transmit"] == pytest.approx(4 * (4 * p.t_hash_node + p.t_pr))
    assert de.components["recovery_chain"] == pytest.approx(2 * 4 * p.t_hash_rsu)
    dde = delay_payload(t, 4, 3, "dde", context="learned", beta=2, p=p)
    assert dde.components["transmit"] == pytest.approx(
        2 * (4 * p.t_hash_node + p.t_pr)
    )
    # A sparse context graph means fewer membership checks.
    complete = delay_payload(t, 4, 3, "de", context="complete", p=p)
    assert de.components["recovery_membership"] < complete.components[
        "recovery_membership"
    ]
    with pytest.raises(ValueError):
        delay_payload(t, 4, 3, "nope")
    with pytest.raises(ValueError):
        delay_payload(t, 4, 3, "de", context="guessed")
