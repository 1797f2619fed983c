"""Command-line entry point: ``apqaoa <subcommand>``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .sat import parse_dimacs

EXIT_OK = 0
EXIT_PARTIAL = 2


def _csv_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _csv_strs(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML experiment config; flags override its values")
    p.add_argument("--out", dest="output_dir", help=f"output directory (default ${bench.OUT_ENV} or ./apqaoa_out)")
    p.add_argument("--model", choices=["F", "F_s", "F_f"])
    p.add_argument("--k", type=int)
    p.add_argument("--n", dest="n_values", type=_csv_ints, help="comma-separated variable counts")
    p.add_argument("--m", dest="m_fixed", type=int, help="fixed clause count instead of m*")
    p.add_argument("--suite-size", type=int)
    p.add_argument("--seed", dest="base_seed", type=int)
    p.add_argument("--strategies", type=_csv_strs, help="comma-separated strategy names")
    p.add_argument("--depth", type=int, help="fixed depth instead of p = n")
    p.add_argument("--normalization", choices=["estimated", "exact"])
    p.add_argument("--c0", type=float)
    p.add_argument("--tqa-samples", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--no-2pi", dest="ap_rescale_2pi", action="store_const", const=False)
    p.add_argument("--raw-heuristics", dest="normalize_heuristics", action="store_const", const=False)
    p.add_argument("--grad-tol", type=float)
    p.add_argument("--f-tol", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--fd-step", type=float)


_OPT_FLAGS = {"grad_tol": "grad_tol", "f_tol": "f_tol", "max_iters": "max_iters", "fd_step": "fd_step"}
_CFG_FLAGS = (
    "output_dir", "model", "k", "n_values", "m_fixed", "suite_size", "base_seed", "strategies",
    "depth", "normalization", "c0", "tqa_samples", "workers", "ap_rescale_2pi", "normalize_heuristics",
)


def config_from_args(args: argparse.Namespace) -> bench.ExperimentConfig:
    base = bench.ExperimentConfig.load(args.config).to_dict() if getattr(args, "config", None) else \
        bench.ExperimentConfig().to_dict()
    for key in _CFG_FLAGS:
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    if getattr(args, "m_fixed", None) is not None:
        base["m_rule"] = "fixed"
    if getattr(args, "depth", None) is not None:
        base["depth_rule"] = "fixed"
    for flag, key in _OPT_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            base["optimizer"][key] = val
    return bench.ExperimentConfig.from_dict(base)


def _power_of_two_hint(cfg: bench.ExperimentConfig) -> None:
    if "ApBased" not in cfg.strategies:
        return
    for n in cfg.n_values:
        p = cfg.p_for(n)
        if p & (p - 1):
            print(f"hint: p={p} is not a power of two; AP-based stages are most economical at p = 2^l",
                  file=sys.stderr)


def cmd_config(args) -> int:
    cfg = config_from_args(args)
    print(cfg.dump(), end="")
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = config_from_args(args)
    paths = bench.cmd_gen(cfg)
    unsat = 0
    for path in paths:
        if not json.loads(path.with_suffix(".json").read_text())["satisfiable"]:
            unsat += 1
    print(f"wrote {len(paths)} instances under {Path(cfg.output_dir) / 'instances'}"
          + (f" ({unsat} unsatisfiable)" if unsat else ""))
    return EXIT_OK


def cmd_run(args) -> int:
    cfg = config_from_args(args)
    _power_of_two_hint(cfg)
    path, records, failures = bench.cmd_run(cfg)
    print(f"wrote {len(records)} records to {path}")
    if failures:
        print(f"{failures} runs failed; see 'error' fields", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_precompute(args) -> int:
    cfg = config_from_args(args)
    priors = bench.cmd_precompute_tqa(cfg)
    for n, prior in sorted(priors.items()):
        print(f"n={n}: theta_bar={prior.theta_bar:.6f} rho_bar={prior.rho_bar:.6f} "
              f"samples={prior.samples_used} evals={prior.precompute_evals}")
    return EXIT_OK


def cmd_aggregate(args) -> int:
    out = args.out or str(Path(args.results[0]).parent / "aggregate")
    rows = bench.cmd_aggregate(args.results, out)
    print(f"{'n':>3} {'strategy':<11} {'count':>5} {'cost_mean':>10} {'cost_median':>11} {'prob_mean':>9}")
    for r in rows:
        print(f"{r.n:>3} {r.strategy:<11} {r.count:>5} {r.cost_mean:>10.1f} {r.cost_median:>11.1f} {r.prob_mean:>9.4f}")
    print(f"figure data in {out}")
    return EXIT_OK


def cmd_scan(args) -> int:
    formula = parse_dimacs(Path(args.instance).read_bytes())
    scan = bench.cmd_scan(
        formula, args.output, args.depth, args.mode, args.resolution,
        (args.theta_min, args.theta_max), (args.rho_min, args.rho_max), args.c0,
    )
    print(f"best theta={scan.best_theta:.6f} rho={scan.best_rho:.6f} value={scan.best_value:.6f} "
          f"({scan.evals} evaluations) -> {args.output}")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    formula = parse_dimacs(Path(args.instance).read_bytes())
    print(json.dumps(bench.spectrum_summary(formula, args.c0), indent=1, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="apqaoa", description="QAOA parameter-setting benchmarks on random k-SAT")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("config", help="print the effective configuration")
    p.add_argument("--dump", action="store_true", help="print as YAML (the default action)")
    _add_config_args(p)
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("gen", help="write the instance suite as DIMACS + JSON sidecars")
    _add_config_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run every strategy on every instance")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("precompute-tqa", help="compute TQA priors for the configured n values")
    _add_config_args(p)
    p.set_defaults(func=cmd_precompute)

    p = sub.add_parser("aggregate", help="summary table and figure data from results files")
    p.add_argument("results", nargs="+")
    p.add_argument("--out", help="directory for CSV output (default: <results dir>/aggregate)")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("scan", help="(theta, rho) surface of the linear ramp")
    p.add_argument("instance", help="DIMACS file")
    p.add_argument("--output", default="scan.csv")
    p.add_argument("--mode", choices=["probability", "expectation"], default="probability")
    p.add_argument("--resolution", type=int, default=33)
    p.add_argument("--depth", type=int)
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=1.5707963267948966)
    p.add_argument("--rho-min", type=float, default=0.125)
    p.add_argument("--rho-max", type=float, default=4.0)
    p.add_argument("--c0", type=float, default=3.0)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("spectrum", help="spectral summary of a DIMACS instance")
    p.add_argument("instance")
    p.add_argument("--c0", type=float, default=3.0)
    p.set_defaults(func=cmd_spectrum)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
