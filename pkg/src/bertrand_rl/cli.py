"""Command-line entry point.

Subcommands: ``equilibrium`` (print market benchmarks), ``run`` (one seeded
run), ``batch`` (seed sweep), ``tune`` (fixed-opponent hyperparameter grid),
``report`` (re-analyze stored traces), and ``replicate`` (the full-scale
sweep; long-running, hours to days depending on hardware).

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .markets import equilibrium_info
from .runner import (ALGORITHMS, MARKETS, ExperimentConfig, build_market, run_batch,
                     run_single, tune)
from . import reporting


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage failures exit with status 1, not 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_market_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--market", choices=MARKETS, help="market variant")
    p.add_argument("--c", type=float, help="marginal cost")
    p.add_argument("--g", type=float, help="product quality (logit)")
    p.add_argument("--mu", type=float, help="substitutability (logit)")
    p.add_argument("--k", type=float, help="per-firm capacity (edgeworth)")


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--algorithm", choices=ALGORITHMS)
    _add_market_args(p)
    p.add_argument("--T", type=int, help="timesteps per run")
    p.add_argument("--m", type=int, help="grid size")
    p.add_argument("--zeta", type=float, help="logit price-range slack")
    p.add_argument("--alpha", type=float, help="learning rate")
    p.add_argument("--gamma", type=float, help="discount factor")
    p.add_argument("--workers", type=int, help="parallel run workers")
    p.add_argument("--keep-full-trace", action="store_true", default=None)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bertrand-rl", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_eq = sub.add_parser("equilibrium", help="print Nash/monopoly benchmarks")
    _add_market_args(p_eq)
    p_eq.add_argument("--format", choices=("csv", "json"), default=None)

    p_run = sub.add_parser("run", help="one seeded self-play run")
    _add_config_args(p_run)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", type=Path, help="output directory")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")

    p_batch = sub.add_parser("batch", help="independent runs over a seed sweep")
    _add_config_args(p_batch)
    p_batch.add_argument("--seeds", type=str, help="comma list or start:stop range")
    p_batch.add_argument("--out", type=Path, required=True)
    p_batch.add_argument("--save-traces", action="store_true")

    p_tune = sub.add_parser("tune", help="fixed-opponent hyperparameter grid")
    _add_config_args(p_tune)
    p_tune.add_argument("--alphas", type=str, default="1e-5,1e-4,1e-3")
    p_tune.add_argument("--gammas", type=str, default="0.95,0.99,0.999")
    p_tune.add_argument("--reps", type=int, default=10)
    p_tune.add_argument("--out", type=Path)

    p_rep = sub.add_parser("report", help="re-analyze a stored trace file")
    _add_config_args(p_rep)
    p_rep.add_argument("--trace", type=Path, required=True)

    p_full = sub.add_parser(
        "replicate",
        help="full-scale sweep: 5 algorithms x 3 markets x 50 seeds (long-running)")
    p_full.add_argument("--out", type=Path, required=True)
    p_full.add_argument("--n-seeds", type=int, default=50)
    p_full.add_argument("--workers", type=int)
    return parser


def _market_overrides(args) -> dict:
    out = {}
    for name in ("c", "g", "mu", "k"):
        value = getattr(args, name, None)
        if value is not None:
            out[name] = value
    return out


def _config_from_args(args) -> ExperimentConfig:
    overrides = _market_overrides(args)
    for name in ("T", "m", "zeta", "alpha", "gamma", "workers"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "keep_full_trace", None):
        overrides["keep_full_trace"] = True
    if args.config is not None:
        with open(args.config) as fh:
            config = ExperimentConfig.from_dict(json.load(fh))
        if args.algorithm:
            overrides["algorithm"] = args.algorithm
        if args.market:
            overrides["market"] = args.market
        return replace(config, **overrides) if overrides else config
    if not args.algorithm or not args.market:
        raise SystemExit(_usage_error("need --config, or both --algorithm and --market"))
    return ExperimentConfig.defaults(args.algorithm, args.market, **overrides)


def _usage_error(message: str) -> int:
    print(f"bertrand-rl: error: {message}", file=sys.stderr)
    return 1


def _parse_seeds(text: str) -> list:
    if ":" in text:
        start, _, stop = text.partition(":")
        return list(range(int(start), int(stop)))
    return [int(s) for s in text.split(",") if s]


def _default_market_config(args) -> ExperimentConfig:
    market = args.market or "standard"
    return ExperimentConfig.defaults("tql", market, **_market_overrides(args))


def _cmd_equilibrium(args) -> int:
    config = _default_market_config(args)
    eq = equilibrium_info(build_market(config))
    values = {
        "p_nash": eq.nash_price,
        "p_monopoly": eq.monopoly_price,
        "profit_nash": eq.nash_profit,
        "profit_monopoly": eq.monopoly_profit,
    }
    if args.format == "json":
        print(json.dumps({"market": config.market, **values}, indent=2))
    elif args.format == "csv":
        print(",".join(values))
        print(",".join(f"{v:.6f}" for v in values.values()))
    else:
        for key, value in values.items():
            print(f"{key}={value:.3f}")
    return 0


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    result = run_single(config, args.seed)
    out = {
        "config_hash": result.config_hash,
        "seed": result.seed,
        "digest": result.digest,
        "failed": result.failed,
        "fail_step": result.fail_step,
    }
    if result.classification is not None:
        out["classification"] = {
            "eta": result.classification.eta,
            "kappa": result.classification.kappa,
            "label": result.classification.label.value,
        }
        out["rpdi_mean"] = list(result.rpdi_mean)
        out["delta_mean"] = list(result.delta_mean)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        reporting.emit_trace(result, args.out / f"trace_seed{args.seed}.csv")
        with open(args.out / f"result_seed{args.seed}.json", "w") as fh:
            json.dump(out, fh, indent=2)
    print(json.dumps(out, indent=2))
    return 0


def _cmd_batch(args) -> int:
    config = _config_from_args(args)
    seeds = _parse_seeds(args.seeds) if args.seeds else list(config.seeds)
    results = run_batch(config, seeds=seeds, workers=args.workers)
    args.out.mkdir(parents=True, exist_ok=True)
    summary = reporting.emit_summary(results, args.out / "summary.json")
    ok = [r for r in results if not r.failed]
    if ok:
        reporting.emit_heatmap(ok, config, "linear", args.out / "heatmap_linear.csv")
        reporting.emit_heatmap(ok, config, "log", args.out / "heatmap_log.csv")
    if args.save_traces:
        for result in results:
            reporting.emit_trace(result, args.out / f"trace_seed{result.seed}.csv")
    print(json.dumps({k: summary[k] for k in ("counts", "percentages", "n_failed")}, indent=2))
    return 0


def _cmd_tune(args) -> int:
    config = _config_from_args(args)
    alphas = [float(x) for x in args.alphas.split(",") if x]
    gammas = [float(x) for x in args.gammas.split(",") if x]
    ranked = tune(config, alphas, gammas, reps=args.reps, workers=args.workers)
    rows = [{"alpha": e.alpha, "gamma": e.gamma, "mean_step": e.mean_step,
             "n_converged": e.n_converged, "steps": e.steps} for e in ranked]
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "tune.json", "w") as fh:
            json.dump(rows, fh, indent=2)
    for row in rows:
        print(f"alpha={row['alpha']:g} gamma={row['gamma']:g} "
              f"mean_step={row['mean_step']:.1f} converged={row['n_converged']}/{len(row['steps'])}")
    return 0


def _cmd_report(args) -> int:
    config = _config_from_args(args)
    trace, _ = reporting.parse_trace(args.trace)
    report = reporting.reanalyze(trace, config)
    print(json.dumps({
        "eta": report.eta,
        "kappa": report.kappa,
        "label": report.label,
        "rpdi_mean": list(report.rpdi_mean),
        "delta_mean": list(report.delta_mean),
    }, indent=2))
    return 0


def _cmd_replicate(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    for market in MARKETS:
        for algorithm in ALGORITHMS:
            config = ExperimentConfig.defaults(algorithm, market,
                                               seeds=tuple(range(args.n_seeds)))
            combo_dir = args.out / f"{market}_{algorithm}"
            combo_dir.mkdir(exist_ok=True)
            print(f"[replicate] {market}/{algorithm}: T={config.T}, "
                  f"{args.n_seeds} seeds", flush=True)
            results = run_batch(config, workers=args.workers)
            reporting.emit_summary(results, combo_dir / "summary.json")
            ok = [r for r in results if not r.failed]
            if ok:
                reporting.emit_heatmap(ok, config, "linear", combo_dir / "heatmap_linear.csv")
                reporting.emit_heatmap(ok, config, "log", combo_dir / "heatmap_log.csv")
    return 0


_COMMANDS = {
    "equilibrium": _cmd_equilibrium,
    "run": _cmd_run,
    "batch": _cmd_batch,
    "tune": _cmd_tune,
    "report": _cmd_report,
    "replicate": _cmd_replicate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # surfaced as a runtime failure, exit code 2
        print(f"bertrand-rl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
