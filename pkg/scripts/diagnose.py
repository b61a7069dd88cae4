#!/usr/bin/env python3
"""Balance and overlap diagnostics for a set of weighting schemes.

Usage:
    python scripts/diagnose.py --input data.csv --treatment-col A --outcome-col Y \
        --covariate-cols X1,X2,X3 [--class wate,watt] [--schemes ow,ipw,trim:0.05] \
        [--alpha-list 0.05,0.1] [--bins 30] [--out diagnostics]

Writes to <out>/:
    balance.csv      long format: class, scheme, estimand, covariate, metric, value
    overlap.csv      PS five-number summary per arm plus extreme-PS fractions
    histogram.csv    PS histogram counts per arm on equal-width bins over [0, 1]
    diagnostics.json everything above plus the PS model summary
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

logger = logging.getLogger(__name__)

# Ensure project root is on sys.path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.cli import (  # noqa: E402
    CliArgumentParser,
    add_dataset_args,
    configure_logging,
    float_list,
    load_dataset,
    overrides_from_args,
    propensity_scores,
    ps_metadata,
    require,
    run_main,
)
from src.config_loader import (  # noqa: E402
    AnalyzeConfig,
    load_analyze_config,
    merge_overrides,
    validate_analyze_config,
)
from src.diagnostics import (  # noqa: E402
    BALANCE_COLUMNS,
    HISTOGRAM_COLUMNS,
    balance_records,
    build_balance_report,
    histogram_records,
    overlap_columns,
    overlap_records,
    report_to_dict,
)
from src.results_io import write_csv, write_json  # noqa: E402
from src.tilting import WeightScheme  # noqa: E402

DEFAULT_OUT = "diagnostics"

OVERRIDE_NAMES = (
    "input",
    "treatment_col",
    "outcome_col",
    "covariate_cols",
    "ps_col",
    "id_col",
    "outcome_kind",
    "classes",
    "schemes",
    "trim_alpha",
    "trunc_alpha",
    "beta_nu",
    "smooth_trim",
    "tw_k",
    "alpha_list",
    "bins",
    "threads",
    "out",
    "tol",
    "max_iter",
)


def run_diagnostics(cfg: AnalyzeConfig) -> Dict[str, Any]:
    """Compute the balance report and write its CSV/JSON exports."""
    d = load_dataset(cfg)
    resolved, fit = propensity_scores(d, cfg)

    schemes: List[WeightScheme] = []
    for cls in cfg.classes:
        schemes += cfg.catalog(cls)

    report = build_balance_report(
        d,
        resolved.values,
        schemes,
        alphas=cfg.alpha_list,
        bins=cfg.bins,
        clamped_count=resolved.clamped_count,
    )
    out_dir = cfg.out or DEFAULT_OUT
    write_csv(os.path.join(out_dir, "balance.csv"), balance_records(report), BALANCE_COLUMNS)
    write_csv(
        os.path.join(out_dir, "overlap.csv"),
        overlap_records(report.overlap),
        overlap_columns(cfg.alpha_list),
    )
    write_csv(
        os.path.join(out_dir, "histogram.csv"),
        histogram_records(report.overlap),
        HISTOGRAM_COLUMNS,
    )
    payload = {"ps": ps_metadata(resolved, fit), **report_to_dict(report)}
    write_json(os.path.join(out_dir, "diagnostics.json"), payload)

    if report.schemes:
        worst = max(report.schemes, key=lambda sb: sb.max_asmd or 0.0)
        logger.info(
            "%d schemes diagnosed; largest max ASMD %s (%s)",
            len(report.schemes),
            "n/a" if worst.max_asmd is None else f"{worst.max_asmd:.3f}",
            worst.label,
        )
    return payload


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(
        prog="diagnose", description="ESS, ASMD and PS overlap for weighting schemes"
    )
    add_dataset_args(parser)
    parser.add_argument(
        "--alpha-list", dest="alpha_list", type=float_list, default=None,
        help="Report fractions of PS outside [alpha, 1 - alpha] per arm",
    )
    parser.add_argument("--bins", type=int, default=None, help="PS histogram bins (default 30)")
    return parser


def _main(argv: Optional[Sequence[str]]) -> None:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    cfg = load_analyze_config(args.config) if args.config else AnalyzeConfig()
    cfg = merge_overrides(cfg, overrides_from_args(args, OVERRIDE_NAMES))
    errors = validate_analyze_config(cfg)
    if cfg.bins < 1:
        errors.append(f"bins must be >= 1 (got {cfg.bins})")
    require(errors, "invalid diagnose settings")

    run_diagnostics(cfg)
    logger.info("Done. Diagnostics in %s", cfg.out or DEFAULT_OUT)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_main(_main, argv)


if __name__ == "__main__":
    sys.exit(main())
