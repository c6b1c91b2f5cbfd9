"""Command-line front end.

Exit codes: 0 success, 1 validation failure, 2 bad input, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .analytics import evaluate
from .config import Delta1Variant, Mode, SystemConfig, Topology, config_to_mapping, load_config, stats_from_topology
from .errors import ConfigError, DomainError, NonMonotoneCdf, QuadratureFailure
from .experiments import (
    FIGURES,
    SweepError,
    SweepSpec,
    figure,
    find_optimal_alpha,
    run_sweep,
    sweep_table,
    validate,
    write_csv,
)
from .montecarlo import DEFAULT_SEED, mc_ergodic_capacity, mc_secondary_outage
from .power import power_budget

EXIT_OK, EXIT_VALIDATION, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
NUMERIC_ERRORS = (QuadratureFailure, NonMonotoneCdf, DomainError, ArithmeticError)


def _load(args, allowed: tuple[str, ...] = ()) -> tuple[SystemConfig, Topology, dict]:
    if args.config is None:
        return SystemConfig(), Topology(), {}
    cfg, topo, rest = load_config(args.config)
    unknown = sorted(set(rest) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return cfg, topo, rest


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def cmd_eval(args) -> int:
    cfg, topo, _ = _load(args)
    stats = stats_from_topology(topo)
    rep = evaluate(cfg, stats, delta1_variant=args.delta1_variant)
    doc = {"config": config_to_mapping(cfg, topo), "report": rep.as_dict(), "version": __version__}
    if args.oracle:
        b = power_budget(cfg, stats)
        if cfg.mode is Mode.DELAY_TOLERANT:
            mc = mc_ergodic_capacity(cfg, stats, b, args.samples, args.seed)
            key = "mc_ergodic_capacity"
        else:
            mc = mc_secondary_outage(cfg, stats, b, cfg.zeta_s, args.samples, args.seed)
            key = "mc_secondary_outage"
        doc[key] = {"mean": mc.mean, "half_width_95": mc.half_width_95, "n_samples": mc.n_samples, "seed": mc.seed}
    _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, topo, rest = _load(args, ("swept_parameter", "grid", "harvest_interference"))
    if args.config is None or "swept_parameter" not in rest or "grid" not in rest:
        raise ConfigError("sweep needs a config with 'swept_parameter' and 'grid'")
    spec = SweepSpec(
        rest["swept_parameter"],
        tuple(rest["grid"]),
        cfg,
        topo,
        compare_oracle=args.oracle,
        n_mc=args.samples,
        seed=args.seed,
        delta1_variant=args.delta1_variant,
        harvest_interference=bool(rest.get("harvest_interference", True)),
    )
    header, rows = sweep_table(spec, run_sweep(spec))
    comments = {**config_to_mapping(cfg, topo), "seed": args.seed, "version": __version__}
    _emit(write_csv(None, header, rows, comments), args.out)
    return EXIT_OK


def cmd_opt_alpha(args) -> int:
    cfg, topo, _ = _load(args)
    res = find_optimal_alpha(
        cfg, topo, args.grid_n, args.refine_tol, delta1_variant=args.delta1_variant
    )
    doc = {
        "alpha_star": res.alpha_star,
        "throughput_star": res.throughput_star,
        "evaluations": res.evaluations,
        "config": config_to_mapping(cfg, topo),
    }
    _emit(_json(doc), args.out)
    return EXIT_OK


def cmd_figure(args) -> int:
    out = args.out or f"out/{args.id}"
    for p in figure(args.id, out, oracle=args.oracle, n_mc=args.samples, seed=args.seed):
        print(p)
    return EXIT_OK


def cmd_validate(args) -> int:
    rep = validate(args.samples, args.seed, args.out, delta1_variant=args.delta1_variant)
    for c in rep.failing():
        print(
            f"FAIL {c.scenario.value} {c.tx_kind.value} L={c.L} alpha={c.alpha}: "
            f"analytic={c.analytic:.6f} mc={c.mc.mean:.6f} tol={c.tolerance:.2e}",
            file=sys.stderr,
        )
    verdict = ", ".join(f"{k}={'pass' if v else 'fail'}" for k, v in rep.adjudication.items())
    print(f"{len(rep.cells)} cells, {len(rep.failing())} failing; delta1 adjudication: {verdict}")
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo samples")
    common.add_argument("--out", help="output file (directory for figure)")
    common.add_argument("--oracle", action="store_true", help="attach Monte Carlo columns")
    common.add_argument(
        "--delta1-variant",
        choices=[v.value for v in Delta1Variant],
        default=Delta1Variant.PROP2.value,
        help="debug: u-range edge used by the interference outage",
    )

    p = argparse.ArgumentParser(prog="cogrelay", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("eval", parents=[common], help="one config -> JSON report").set_defaults(fn=cmd_eval)
    sub.add_parser("sweep", parents=[common], help="sweep config -> CSV").set_defaults(fn=cmd_sweep)
    opt = sub.add_parser("opt-alpha", parents=[common], help="optimal harvesting ratio")
    opt.add_argument("--grid-n", type=int, default=19)
    opt.add_argument("--refine-tol", type=float, default=1e-4)
    opt.set_defaults(fn=cmd_opt_alpha)
    fig = sub.add_parser("figure", parents=[common], help="reproduce one figure as CSV")
    fig.add_argument("id", choices=FIGURES)
    fig.set_defaults(fn=cmd_figure, samples=100_000)
    sub.add_parser("validate", parents=[common], help="analytic vs Monte Carlo grid").set_defaults(fn=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.cause, NUMERIC_ERRORS) else EXIT_INPUT
    except NUMERIC_ERRORS as exc:  # before ValueError: DomainError is one
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
