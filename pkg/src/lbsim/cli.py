"""Command-line entry point.

    lbsim [run] [--scenario paper] [--policy proposed|random|round-robin|all]
                [--seed N] [--out DIR] [--config FILE] [--set key=value ...]
    lbsim rules [--out FILE]

Environment: LBSIM_OUT overrides --out for ``run``.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

from .config import ALL_POLICIES, ConfigError, RunConfig, load_config
from .engine import POLICIES, SimulationError, energy_summary, run
from .fuzzy import build_rule_base, format_rule_table
from .report import (
    ReportError,
    emit_metrics_json,
    emit_plot_data,
    emit_trace_csv,
    final_levels,
    fit_trace_series,
    metrics_document,
)
from .scenario import load_scenario

log = logging.getLogger("lbsim")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lbsim", description="Predictive server load balancing simulator")
    parser.add_argument("command", nargs="?", choices=("run", "rules"), default="run")
    parser.add_argument("--scenario", help="preset name or scenario file (default: paper)")
    parser.add_argument("--policy", help=f"one of {', '.join((*POLICIES, ALL_POLICIES))} (default: proposed)")
    parser.add_argument("--seed", type=int, help="random seed (default: 0)")
    parser.add_argument("--out", help="output directory; for 'rules', an output file (default: stdout)")
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override one config key"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log every step")
    return parser


def run_command(cfg: RunConfig) -> int:
    """Run every selected policy and write its artifacts under ``cfg.out``."""
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        log.error("cannot create output directory %s: %s", out, exc.strerror or exc)
        return EXIT_FAILURE

    log.info("resolved configuration:\n%s", cfg.dumps().rstrip())
    try:
        scenario = load_scenario(cfg.scenario)
        sim_cfg = cfg.simulation_config()
        _write_config(out / "config.txt", cfg)
        for policy in cfg.policies:
            started = time.perf_counter()
            trace = run(scenario, policy, sim_cfg, cfg.seed)
            emit_trace_csv(trace, out / f"trace_{policy}.csv")
            fits = fit_trace_series(trace, sim_cfg.lstm)
            doc = metrics_document(
                fits,
                {
                    "policy": policy,
                    "scenario": scenario.name,
                    "seed": cfg.seed,
                    "final_levels": {str(k): v for k, v in final_levels(trace).items()},
                    "energy": energy_summary(trace, scenario),
                    "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.resolved().items()},
                },
            )
            emit_metrics_json(doc, out / f"metrics_{policy}.json")
            plot_dir = out / "plots" / policy
            plot_dir.mkdir(parents=True, exist_ok=True)
            for fit in fits:
                emit_plot_data(
                    list(zip(fit.actual, fit.predicted)),
                    plot_dir / f"server{fit.server_id}_{fit.metric}.csv",
                )
            log.info(
                "%s: %d flows in %.1f s, final levels %s",
                policy,
                len(trace.records) - 1,
                time.perf_counter() - started,
                final_levels(trace),
            )
    except (ConfigError, ReportError, SimulationError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_FAILURE
    return EXIT_OK


def _write_config(path: Path, cfg: RunConfig) -> None:
    try:
        path.write_text(cfg.dumps())
    except OSError as exc:
        raise ReportError(f"cannot write {path}: {exc.strerror or exc}") from None


def rules_command(out: str | None) -> int:
    table = format_rule_table(build_rule_base())
    if out is None:
        sys.stdout.write(table)
        return EXIT_OK
    try:
        Path(out).write_text(table)
    except OSError as exc:
        log.error("cannot write %s: %s", out, exc.strerror or exc)
        return EXIT_FAILURE
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "rules":
        return rules_command(args.out)
    out = os.environ.get("LBSIM_OUT") or args.out
    try:
        cfg = load_config(
            args.config,
            args.overrides,
            scenario=args.scenario,
            policy=args.policy,
            seed=args.seed,
            out=out,
        )
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
