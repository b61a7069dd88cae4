#!/usr/bin/env python3
"""Monte Carlo study of the weighting schemes on the simulated design.

Usage:
    python scripts/simulate.py --config config/simulate_good.json [--out sim_results] \
        [--threads 4] [--write-sample sample.csv]

The config file (schemas/simulate_config.schema.json) sets gamma/alpha0, N, M, B,
the seed, the PS model case(s) and the schemes. Outputs in <out>/:
    summary.csv     long format: case, class, scheme, estimand, metric, value
    summary.json    run metadata, config echo and per-scheme summaries
    replicates.csv  one row per replicate x scheme (violin-plot layout)
    heatmap.csv     coverage / RBias per scheme x case (heatmap layout)
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

logger = logging.getLogger(__name__)

# Ensure project root is on sys.path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from dataclasses import replace  # noqa: E402

from src.cli import CliArgumentParser, configure_logging, require, run_main  # noqa: E402
from src.config_loader import (  # noqa: E402
    SimulateConfig,
    load_simulate_config,
    simulate_config_to_dict,
)
from src.dataset import write_csv as write_dataset_csv  # noqa: E402
from src.results_io import write_csv, write_json  # noqa: E402
from src.simulation import (  # noqa: E402
    HEATMAP_COLUMNS,
    LONG_COLUMNS,
    REPLICATE_COLUMNS,
    SimResult,
    heatmap_records,
    long_records,
    replicate_records,
    result_to_dict,
    run_monte_carlo,
    simulate_dataset,
)

DEFAULT_OUT = "sim_results"


def run_simulation(cfg: SimulateConfig, out_dir: str = DEFAULT_OUT) -> SimResult:
    """Run the Monte Carlo study described by cfg and write its result files."""
    result = run_monte_carlo(
        M=cfg.M,
        N=cfg.N,
        B=cfg.B,
        schemes=cfg.scheme_list(),
        config=cfg.dgp(),
        ci_method=cfg.ci_method,
        conf_level=cfg.conf_level,
        super_n=cfg.super_n,
        threads=cfg.threads,
    )
    write_csv(os.path.join(out_dir, "summary.csv"), long_records(result), LONG_COLUMNS)
    payload = result_to_dict(result)
    payload["config"] = simulate_config_to_dict(cfg)
    write_json(os.path.join(out_dir, "summary.json"), payload)
    write_csv(
        os.path.join(out_dir, "replicates.csv"),
        replicate_records(result),
        REPLICATE_COLUMNS,
        float_format="%.17g",
    )
    write_csv(os.path.join(out_dir, "heatmap.csv"), heatmap_records(result), HEATMAP_COLUMNS)

    lo, hi = result.cp_band_display
    outside = [s for s in result.summaries if s.cp_in_band is False]
    logger.info(
        "%d scheme summaries; %d with coverage outside [%.3f, %.3f]",
        len(result.summaries),
        len(outside),
        lo,
        hi,
    )
    return result


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(prog="simulate", description="Monte Carlo study of PS weighting")
    parser.add_argument("--config", required=True, help="Simulation config JSON")
    parser.add_argument("--out", default=DEFAULT_OUT, help="Output directory")
    parser.add_argument("--threads", type=int, default=None, help="Bootstrap worker threads")
    parser.add_argument(
        "--write-sample", dest="write_sample", default=None,
        help="Also write one simulated dataset (replicate 0) to this CSV",
    )
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def _main(argv: Optional[Sequence[str]]) -> None:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    cfg = load_simulate_config(args.config)
    if args.threads is not None:
        require([] if args.threads >= 1 else [f"threads must be >= 1 (got {args.threads})"])
        cfg = replace(cfg, threads=args.threads)

    if args.write_sample:
        write_dataset_csv(simulate_dataset(cfg.dgp()), args.write_sample)
        logger.info("Wrote sample dataset %s", args.write_sample)

    run_simulation(cfg, args.out)
    logger.info("Done. Results in %s", args.out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_main(_main, argv)


if __name__ == "__main__":
    sys.exit(main())
