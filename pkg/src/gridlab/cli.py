"""``gridlab`` command-line front end.

Every output document embeds ``{version, config, seed}`` so a run can be
repeated exactly.  Exit codes: 0 success, 1 contract or I/O error, 2 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence


from . import __version__
from .entropy import TauFunction, gibbs_exact, gibbs_mc, grid_entropy_dual
from .errors import ContractError
from .io import emit, load_measure, load_strategy, load_tau, to_plain
from .lp import lp_distance, lp_distance_oracle
from .measures import AtomicMeasure, BinnedMeasure, RationalPmf, bin, kl_divergence, total_variation
from .paths import path_stats
from .permutohedron import discrete_report
from .simulate import exact_target, run, sample_environment
from .strategies import MixtureStrategy, ScoredStrategy, StrategyTable, binned_sigma_max

BUILTIN_NU = ("uniform", "sigma_max")
BUILTIN_STRATEGIES = ("max", "vee")


def _default_seed() -> int:
    raw = os.environ.get("GRIDLAB_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise ContractError(f"GRIDLAB_SEED must be an integer, got {raw!r}") from None


def _eps_list(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from None
    if not vals or any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("eps must be a nonempty list of nonnegative numbers")
    return vals


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text}")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $GRIDLAB_SEED or 0)")
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--workers", type=_positive, default=1,
                        help="worker count; results do not depend on it")

    p = argparse.ArgumentParser(prog="gridlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"gridlab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run a strategy on a sampled environment")
    s.add_argument("--strategy", required=True, help="strategy file or builtin: max, vee")
    s.add_argument("--D", type=_positive, default=2)
    s.add_argument("--n", type=_nonneg, required=True)
    s.add_argument("--m", type=_positive, default=100)

    s = sub.add_parser("dual", parents=[common], help="grid entropy estimate via the Gibbs dual")
    s.add_argument("--nu", required=True, help="measure file or builtin: uniform, sigma_max")
    s.add_argument("--D", type=_positive, default=2)
    s.add_argument("--m", type=_positive, default=None)
    s.add_argument("--beta", type=float, default=1.0)
    s.add_argument("--max-iter", type=_positive, default=10_000)

    s = sub.add_parser("gibbs", parents=[common], help="Gibbs free energy of a potential")
    s.add_argument("--tau", required=True, help="potential file")
    s.add_argument("--D", type=_positive, default=2)
    s.add_argument("--beta", type=float, default=None, help="override the file's beta")
    s.add_argument("--mc", type=_positive, default=None, help="also estimate by N Monte Carlo samples")

    s = sub.add_parser("paths", parents=[common], help="exhaustive path-count statistics")
    s.add_argument("--nu", required=True, help="measure file or builtin: uniform, sigma_max")
    s.add_argument("--D", type=_positive, default=2)
    s.add_argument("--n", type=_nonneg, required=True)
    s.add_argument("--m", type=_positive, default=8)
    s.add_argument("--eps", type=_eps_list, default=[0.05, 0.1, 0.2])
    s.add_argument("--K", type=_positive, default=None, help="discrete labels 1..K instead of Unif[0,1]")
    s.add_argument("--ranks", type=lambda t: [int(x) for x in t.split(",")], default=[1])

    s = sub.add_parser("discrete", parents=[common], help="extreme points of the discrete model")
    s.add_argument("--K", type=_positive, required=True)
    s.add_argument("--D", type=_positive, default=2)
    s.add_argument("--report", default=None, help="same as --out")

    s = sub.add_parser("lp", parents=[common], help="Levy-Prokhorov distance between two measures")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--oracle", action="store_true", help="use subset enumeration instead of flow")
    return p


def _resolve_nu(source: str, m: int | None, D: int) -> BinnedMeasure:
    if source in BUILTIN_NU:
        if m is None:
            raise ContractError(f"builtin nu {source!r} needs --m")
        return BinnedMeasure.uniform(m) if source == "uniform" else binned_sigma_max(m, D)
    mu = load_measure(source)
    if isinstance(mu, RationalPmf):
        mu = mu.to_binned()
    elif isinstance(mu, AtomicMeasure):
        if m is None:
            raise ContractError("an atomic nu needs --m to bin it")
        mu = bin(mu, m)
    if m is not None and mu.m != m:
        raise ContractError(f"{source}: nu has {mu.m} bins but --m is {m}")
    return mu


def _resolve_strategy(source: str, D: int):
    if source == "max":
        return ScoredStrategy("identity", D)
    if source == "vee":
        return ScoredStrategy("vee", D)
    return load_strategy(source)


def _as_atoms(mu) -> AtomicMeasure:
    if isinstance(mu, BinnedMeasure):
        return mu.to_atoms()
    if isinstance(mu, RationalPmf):
        return mu.to_binned().to_atoms()
    return mu


def _strategy_K(s) -> int | None:
    if isinstance(s, StrategyTable):
        return s.K
    if isinstance(s, MixtureStrategy) and s.is_discrete:
        return s.components[0].K
    return None


def cmd_simulate(args, seed):
    strategy = _resolve_strategy(args.strategy, args.D)
    K = _strategy_K(strategy)
    env = sample_environment(args.n, args.D, "discrete" if K else "continuous", seed, K)
    result = run(env, strategy, seed)
    m = K if K else args.m
    emp = BinnedMeasure(result.empirical_pmf()) if K else bin(result.empirical, m)
    target = exact_target(strategy, args.D, m, seed)
    report = {"n": args.n, "D": args.D, "m": m,
              "empirical": emp.weights, "target": target.weights,
              "lp": lp_distance(emp.to_atoms(), target.to_atoms()) if args.n else None,
              "tv": total_variation(emp, target)}
    rows = [{"bin": b, "empirical": e, "target": t}
            for b, (e, t) in enumerate(zip(emp.weights, target.weights))]
    return report, rows


def cmd_dual(args, seed):
    nu = _resolve_nu(args.nu, args.m, args.D)
    r = grid_entropy_dual(nu, args.D, beta=args.beta, max_iter=args.max_iter)
    report = {"m": nu.m, "D": args.D, "beta": args.beta,
              "entropy_estimate": r.entropy_estimate, "iterations": r.iterations,
              "grad_norm": r.grad_norm, "converged": r.converged,
              "kl_to_uniform": kl_divergence(nu, BinnedMeasure.uniform(nu.m)),
              "tau_star": r.tau_star.values}
    rows = [{"iteration": i, "objective": f} for i, f in enumerate(r.objective_trace)]
    return report, rows


def cmd_gibbs(args, seed):
    tau = load_tau(args.tau)
    if args.beta is not None:
        tau = TauFunction(tau.values, args.beta)
    report = {"m": tau.m, "D": args.D, "beta": tau.beta, "exact": gibbs_exact(tau, args.D)}
    if args.mc:
        est, se = gibbs_mc(tau, args.D, args.mc, seed)
        report.update(mc_estimate=est, mc_stderr=se, mc_samples=args.mc)
    return report, [report]


def cmd_paths(args, seed):
    nu = _resolve_nu(args.nu, args.m, args.D)
    env = sample_environment(args.n, args.D, "discrete" if args.K else "continuous", seed, args.K)
    r = path_stats(env, nu, nu.m, args.eps, args.ranks)
    rows = [{"n": r.n, "eps": e, "count": c, "slope": s}
            for e, c, s in zip(r.eps_list, r.counts, r.slopes)]
    return r, rows


def cmd_discrete(args, seed):
    r = discrete_report(args.K, args.D)
    report = {"K": r.K, "D": r.D, "tables": r.tables,
              "extreme_pmfs": [p.fractions() for p in r.extreme_pmfs],
              "bijection": {",".join(map(str, a)): p.fractions() for a, p in r.bijection.items()},
              "value_multiset": sorted(str(x) for x in r.extreme_pmfs[0].value_multiset()),
              "checks": {"value_multiset": r.value_multiset_ok, "bijection": r.bijection_ok,
                         "weight_tuples": r.weight_tuples_ok, "scramble": r.scramble_ok}}
    rows = [{"ordering": k, "pmf": " ".join(map(str, v))} for k, v in report["bijection"].items()]
    return report, rows


def cmd_lp(args, seed):
    a, b = _as_atoms(load_measure(args.a)), _as_atoms(load_measure(args.b))
    d = lp_distance_oracle(a, b) if args.oracle else lp_distance(a, b)
    report = {"distance": d, "method": "oracle" if args.oracle else "flow"}
    return report, [report]


COMMANDS = {"simulate": cmd_simulate, "dual": cmd_dual, "gibbs": cmd_gibbs,
            "paths": cmd_paths, "discrete": cmd_discrete, "lp": cmd_lp}


def _config(args) -> dict:
    skip = {"out", "format", "report"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="gridlab: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        seed = args.seed if args.seed is not None else _default_seed()
        args.seed = seed
        report, rows = COMMANDS[args.command](args, seed)
        out = args.out or getattr(args, "report", None)
        if args.format == "json":
            doc = {"version": __version__, "config": _config(args), "seed": seed, "result": report}
            emit(doc, "json", out)
        else:
            meta = json.dumps({"version": __version__, "config": to_plain(_config(args)), "seed": seed},
                              sort_keys=True)
            emit(None, "csv", out, rows=rows, preamble=f"# {meta}\n")
    except ContractError as exc:
        print(f"gridlab: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
