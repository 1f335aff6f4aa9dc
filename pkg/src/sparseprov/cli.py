"""Command-line front-end.

Subcommands cover the protocol round-trips (learn-ssmp, learn-mssp,
payload), closed-form evaluation (analyze), parameter search (optimize),
Monte Carlo sweeps (simulate), the analytic delay model (delay), and the
figure-style experiment recipes (experiment).

Exit codes: 0 success; 1 configuration error (bad flags, bad config
file, bad fixture); 2 infeasible request (enumeration or combination cap
exceeded); 3 a recipe ran with --check and an assertion failed.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from typing import List, Optional, Sequence, TextIO

from .analysis import (
    impersonation_success_bound,
    mssp_fpr,
    mssp_fpr_double_sum,
    payload_fpr_bound_in_context,
    ssmp_fpr_bound,
    ssmp_fpr_exact,
)
from .experiments import (
    ConfigError,
    ExperimentConfig,
    run_experiment,
    standard_fixture,
)
from .identity import KeyRing
from .learning import (
    MsspParams,
    SsmpParams,
    mssp_embed_walk,
    mssp_recover,
    ssmp_recover,
    ssmp_round,
)
from .optimize import solve_mssp, solve_ssmp_equal, solve_ssmp_variable
from .provenance import de_transmit, dde_transmit, recover
from .sim import (
    DelayParams,
    TrialPlan,
    delay_mssp,
    delay_payload,
    delay_ssmp,
    iter_learning_runs,
    iter_payload_runs,
    run_impersonation_attack,
    run_trials,
)
from .topology import BudgetExceeded, Topology, complete_topology, enumerate_paths


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as configuration errors."""

    def error(self, message):
        raise ConfigError(message)


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return "%.10g" % value
    return str(value)


def _emit_rows(header: Sequence[str], rows, out: TextIO) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")


def _open_out(args):
    if getattr(args, "out", None):
        return open(args.out, "w", encoding="utf-8", newline="\n")
    return contextlib.nullcontext(sys.stdout)


def _add_fixture_flags(p: argparse.ArgumentParser, n: int, e: int) -> None:
    p.add_argument("--topology", help="topology file (overrides --n/--e)")
    p.add_argument("--n", type=int, default=n, help="fixture node count")
    p.add_argument("--e", type=int, default=e, help="fixture edge count")
    p.add_argument(
        "--fixture-seed", type=int, default=None,
        help="override the frozen fixture seed for (n, e)",
    )


def _topology(args) -> Topology:
    if args.topology:
        try:
            return Topology.load(args.topology)
        except OSError as exc:
            raise ConfigError("cannot read topology %s: %s" % (args.topology, exc))
    return standard_fixture(args.n, args.e, args.fixture_seed)


# ----------------------------------------------------------------------
# subcommand handlers


def _cmd_learn_ssmp(args) -> int:
    t = _topology(args)
    if args.runs:
        plan = TrialPlan("ssmp", t, args.runs, args.seed, args.m, args.k)
        with _open_out(args) as out:
            _emit_rows(
                ("run", "seq", "false_positive", "extra_edges"),
                ((run, seq, int(fp), extra)
                 for run, seq, fp, extra in iter_learning_runs(plan)),
                out,
            )
        return 0
    keys = KeyRing.generate(t.n, seed=args.seed)
    packets = ssmp_round(t, keys, SsmpParams.uniform(t, args.m, args.k), args.seq)
    learned, _ = ssmp_recover(packets, keys, t.n, t.dest, t.neighbors[t.dest])
    extra = learned.edge_count - t.edge_count
    with _open_out(args) as out:
        out.write(learned.to_text())
    if extra:
        print("%d extra edge(s) beyond the true topology" % extra, file=sys.stderr)
    return 0


def _cmd_learn_mssp(args) -> int:
    t = _topology(args)
    if args.runs:
        plan = TrialPlan("mssp", t, args.runs, args.seed, args.m, args.k)
        with _open_out(args) as out:
            _emit_rows(
                ("run", "seq", "false_positive", "extra_edges"),
                ((run, seq, int(fp), extra)
                 for run, seq, fp, extra in iter_learning_runs(plan)),
                out,
            )
        return 0
    keys = KeyRing.generate(t.n, seed=args.seed)
    packet = mssp_embed_walk(t, keys, MsspParams(args.m, args.k), args.seq)
    learned, _ = mssp_recover(packet, keys, t.n, t.dest, t.neighbors[t.dest])
    extra = learned.edge_count - t.edge_count
    with _open_out(args) as out:
        out.write(learned.to_text())
    if extra:
        print("%d extra edge(s) beyond the true topology" % extra, file=sys.stderr)
    return 0


def _payload_plan(args, t: Topology) -> TrialPlan:
    return TrialPlan(
        args.scheme, t, args.runs or 1, args.seed, args.m, args.k,
        source=args.source, hops=args.hops, beta=args.beta,
        context=args.context,
    )


def _cmd_payload(args) -> int:
    t = _topology(args)
    if args.runs:
        plan = _payload_plan(args, t)
        with _open_out(args) as out:
            _emit_rows(
                ("run", "outcome", "candidates", "checked"),
                ((run, res.outcome, res.candidates, res.checked)
                 for run, res in enumerate(iter_payload_runs(plan))),
                out,
            )
        return 0
    paths = enumerate_paths(t, args.source, args.hops)
    if not paths:
        raise ConfigError(
            "no %d-hop route from node %d" % (args.hops, args.source)
        )
    path = paths[0]
    keys = KeyRing.generate(t.n, seed=args.seed)
    transmit = de_transmit if args.scheme == "de" else dde_transmit
    packet = transmit(path, keys, args.m, args.k, args.seq)
    context = (
        t if args.context == "learned" else complete_topology(t.n, dest=t.dest)
    )
    result = recover(packet, keys, context, args.scheme, args.beta)
    print("actual    %s" % "-".join(str(v) for v in path))
    print("outcome   %s" % result.outcome)
    print("recovered %s" % (
        "-".join(str(v) for v in result.path) if result.path else "(none)"
    ))
    print("candidates %d, chain checks %d" % (result.candidates, result.checked))
    return 0


def _k_range(args) -> List[int]:
    if args.k_min is not None or args.k_max is not None:
        lo = args.k_min if args.k_min is not None else 1
        hi = args.k_max if args.k_max is not None else lo
        if hi < lo:
            raise ConfigError("--k-max below --k-min")
        return list(range(lo, hi + 1))
    return [args.k]


def _cmd_analyze(args) -> int:
    t = _topology(args)
    prof = t.profile()

    def value(k: int) -> float:
        if args.what == "ssmp-exact":
            return ssmp_fpr_exact(
                t, {i: args.m for i in prof.nodes}, {i: k for i in prof.nodes}
            )
        if args.what == "ssmp-bound":
            return ssmp_fpr_bound(
                prof, {i: args.m for i in prof.nodes}, {i: k for i in prof.nodes}
            )
        if args.what == "mssp-exact":
            return mssp_fpr(args.m, k, prof)
        if args.what == "mssp-double-sum":
            return mssp_fpr_double_sum(args.m, k, prof)
        if args.what == "impersonation-bound":
            return impersonation_success_bound(args.m, k, prof)
        context = (
            t if args.context == "learned"
            else complete_topology(t.n, dest=t.dest)
        )
        return payload_fpr_bound_in_context(
            t, context, args.source, args.hops, args.m, k, args.beta,
            args.scheme,
        )

    ks = _k_range(args)
    with _open_out(args) as out:
        if len(ks) == 1:
            out.write("%.10g\n" % value(ks[0]))
        else:
            _emit_rows(("k", "value"), ((k, value(k)) for k in ks), out)
    return 0


def _cmd_optimize(args) -> int:
    t = _topology(args)
    prof = t.profile()
    if args.solver == "mssp":
        if args.m is None:
            raise ConfigError("--m required for the mssp solver")
        opt = solve_mssp(prof, args.m, k_max=args.k_max)
    elif args.solver == "ssmp-equal":
        if args.m_sum is None:
            raise ConfigError("--m-sum required for the ssmp-equal solver")
        opt = solve_ssmp_equal(prof, args.m_sum, k_max=args.k_max)
    else:
        if args.m_sum is None:
            raise ConfigError("--m-sum required for the ssmp-variable solver")
        opt = solve_ssmp_variable(
            prof, args.m_sum,
            granularity=args.granularity, min_bits=args.min_bits,
            k_max=args.k_max,
        )
    with _open_out(args) as out:
        if args.solver == "mssp":
            _emit_rows(("m", "k", "fpr"), [(opt.m, opt.k, opt.fpr)], out)
        else:
            _emit_rows(
                ("node", "gamma", "m", "k"),
                ((node, g, opt.m_for(node), opt.k_for(node))
                 for node, g in zip(prof.nodes, prof.gamma)),
                out,
            )
            out.write("# objective %s fpr %.10g\n" % (opt.objective, opt.fpr))
    return 0


def _cmd_simulate(args) -> int:
    t = _topology(args)
    if args.scheme == "attack":
        rows = []
        for k in _k_range(args):
            est = run_impersonation_attack(t, args.m, k, args.trials, args.seed)
            rows.append((k, est.rate, est.stderr))
    else:
        rows = []
        for k in _k_range(args):
            plan = TrialPlan(
                args.scheme, t, args.trials, args.seed, args.m, k,
                source=args.source, hops=args.hops, beta=args.beta,
                context=args.context,
            )
            est = run_trials(plan)
            rows.append((k, est.rate, est.stderr))
    with _open_out(args) as out:
        _emit_rows(("k", "fpr", "stderr"), rows, out)
    return 0


def _cmd_delay(args) -> int:
    t = _topology(args)
    params = DelayParams(
        t_pr=args.t_pr, t_hash_node=args.t_hash_node,
        t_hash_rsu=args.t_hash_rsu,
        t_queue_node=args.t_queue, t_queue_rsu=args.t_queue,
    )
    rows = []
    for name, rep in (
        ("ssmp", delay_ssmp(t, args.k, params)),
        ("mssp", delay_mssp(t, args.k, params)),
    ):
        for comp, val in rep.components.items():
            rows.append((name, comp, val))
        rows.append((name, "total", rep.total))
    if args.hops:
        for scheme in ("de", "dde"):
            for context in ("learned", "complete"):
                rep = delay_payload(
                    t, args.hops, args.k, scheme, context, args.beta, params
                )
                phase = "payload-%s-%s" % (scheme, context)
                for comp, val in rep.components.items():
                    rows.append((phase, comp, val))
                rows.append((phase, "total", rep.total))
    with _open_out(args) as out:
        _emit_rows(("phase", "component", "seconds"), rows, out)
    return 0


def _cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    report = run_experiment(cfg, args.out, force=args.force, check=args.check)
    for msg in report.check_messages:
        print(msg)
    print("wrote %s" % report.out_dir)
    if args.check and report.check_passed is False:
        return 3
    return 0


# ----------------------------------------------------------------------
# parser assembly


def build_parser() -> _Parser:
    parser = _Parser(
        prog="sparseprov",
        description="Filter-based topology learning and path provenance toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def fixture(p, n=8, e=14):
        _add_fixture_flags(p, n, e)
        p.add_argument("--seed", type=int, default=42, help="random seed")
        p.add_argument("--out", help="write output to this file instead of stdout")

    p = sub.add_parser("learn-ssmp", help="per-node filter topology learning")
    fixture(p)
    p.add_argument("--m", type=int, default=32, help="bits per node filter")
    p.add_argument("--k", type=int, default=4, help="indices per edge")
    p.add_argument("--seq", type=int, default=0, help="sequence number")
    p.add_argument("--runs", type=int, default=0,
                   help="emit a CSV over this many protocol rounds")
    p.set_defaults(func=_cmd_learn_ssmp)

    p = sub.add_parser("learn-mssp", help="walking shared-filter learning")
    fixture(p)
    p.add_argument("--m", type=int, default=224, help="shared filter bits")
    p.add_argument("--k", type=int, default=4, help="indices per edge")
    p.add_argument("--seq", type=int, default=0, help="sequence number")
    p.add_argument("--runs", type=int, default=0,
                   help="emit a CSV over this many protocol rounds")
    p.set_defaults(func=_cmd_learn_mssp)

    p = sub.add_parser("payload", help="embed a path and recover it")
    fixture(p, n=20, e=34)
    p.add_argument("--scheme", choices=("de", "dde"), default="de")
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--hops", type=int, default=3)
    p.add_argument("--m", type=int, default=20, help="payload filter bits")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--beta", type=int, default=1,
                   help="chain verifications allowed on wrong candidates")
    p.add_argument("--context", choices=("learned", "complete"),
                   default="learned")
    p.add_argument("--seq", type=int, default=0)
    p.add_argument("--runs", type=int, default=0,
                   help="emit a CSV over this many sampled packets")
    p.set_defaults(func=_cmd_payload)

    p = sub.add_parser("analyze", help="closed-form rates and bounds")
    fixture(p)
    p.add_argument(
        "--what", required=True,
        choices=("ssmp-exact", "ssmp-bound", "mssp-exact", "mssp-double-sum",
                 "impersonation-bound", "payload-bound"),
    )
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--k-min", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--scheme", choices=("de", "dde"), default="de")
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--hops", type=int, default=3)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--context", choices=("learned", "complete"),
                   default="learned")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("optimize", help="filter size / hash count search")
    fixture(p)
    p.add_argument("--solver", choices=("mssp", "ssmp-equal", "ssmp-variable"),
                   required=True)
    p.add_argument("--m", type=int, default=None, help="shared filter bits (mssp)")
    p.add_argument("--m-sum", type=int, default=None, help="total bit budget")
    p.add_argument("--k-max", type=int, default=16)
    p.add_argument("--granularity", type=int, default=16)
    p.add_argument("--min-bits", type=int, default=16)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo sweep, CSV k,fpr,stderr")
    fixture(p)
    p.add_argument("--scheme",
                   choices=("ssmp", "mssp", "de", "dde", "attack"),
                   default="ssmp")
    p.add_argument("--m", type=int, default=32)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--k-min", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--trials", type=int, default=20000)
    p.add_argument("--source", type=int, default=0)
    p.add_argument("--hops", type=int, default=3)
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--context", choices=("learned", "complete"),
                   default="learned")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("delay", help="analytic delay model, CSV phase,component,seconds")
    fixture(p)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--hops", type=int, default=0,
                   help="also emit payload phases for this hop count")
    p.add_argument("--beta", type=int, default=1)
    p.add_argument("--t-pr", type=float, default=0.5e-3,
                   help="per-hop propagation seconds")
    p.add_argument("--t-hash-node", type=float, default=42e-6)
    p.add_argument("--t-hash-rsu", type=float, default=10e-6)
    p.add_argument("--t-queue", type=float, default=70e-6)
    p.set_defaults(func=_cmd_delay)

    p = sub.add_parser("experiment", help="run a figure-style recipe")
    p.add_argument("--config", required=True, help="experiment config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true",
                   help="replace the output directory if it exists")
    p.add_argument("--check", action="store_true",
                   help="verify the recipe's expected orderings; exit 3 on failure")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except BudgetExceeded as exc:
        print("infeasible: %s" % exc, file=sys.stderr)
        return 2
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
