#!/usr/bin/env python3
"""Estimate WATE / WATT / WATC tables from a CSV dataset.

Usage:
    python scripts/analyze.py --input data.csv --treatment-col A --outcome-col Y \
        --covariate-cols X1,X2,X3 [--class wate,watt,watc] [--trim-alpha 0.05,0.1] \
        [--trunc-alpha 0.05,0.1] [--beta-nu 2,4] [--boot --n-boot 200 --seed 4399] \
        [--alpha-level 0.05] [--ci-method normal|quantile|lognormal] \
        [--out results] [--format csv|json]

Writes one table per estimand class (<out>/<class>.csv or .json) with columns
label, Est, Std.Err, Upr, Lwr plus estimand/measure metadata, and
<out>/metadata.json describing the PS model and settings.
"""

from __future__ import annotations

import argparse
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
    load_dataset,
    overrides_from_args,
    propensity_scores,
    ps_metadata,
    require,
    run_main,
    upper_list,
)
from src.config_loader import (  # noqa: E402
    AnalyzeConfig,
    analyze_config_to_dict,
    load_analyze_config,
    merge_overrides,
    validate_analyze_config,
)
from src.estimators import (  # noqa: E402
    EstimateRow,
    EstimationError,
    build_specs,
    estimate_all,
)
from src.inference import BootstrapRow, bootstrap_many  # noqa: E402
from src.results_io import write_csv, write_json  # noqa: E402

RESULT_COLUMNS = [
    "label",
    "Est",
    "Std.Err",
    "Upr",
    "Lwr",
    "estimand",
    "class",
    "measure",
    "ci_method",
    "status",
]
REPLICATE_COLUMNS = ["class", "label", "measure", "replicate", "substream", "estimate"]
DEFAULT_OUT = "results"

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
    "measures",
    "boot",
    "n_boot",
    "seed",
    "alpha_level",
    "ci_method",
    "threads",
    "out",
    "format",
    "dump_replicates",
    "tol",
    "max_iter",
)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def table_records(
    rows: Sequence[EstimateRow], boot_rows: Optional[Sequence[BootstrapRow]]
) -> List[Dict[str, Any]]:
    records: List[Dict[str, Any]] = []
    for i, row in enumerate(rows):
        spec = row.spec
        rec: Dict[str, Any] = {
            "label": spec.label,
            "Est": row.result.estimate if row.result else None,
            "Std.Err": None,
            "Upr": None,
            "Lwr": None,
            "estimand": spec.scheme.estimand,
            "class": spec.scheme.estimand_class,
            "measure": spec.measure,
            "ci_method": None,
            "status": "ok" if row.ok else f"error: {row.error}",
        }
        if boot_rows is not None and row.ok:
            boot = boot_rows[i]
            if boot.effect is not None:
                eff = boot.effect
                rec.update(
                    {
                        "Std.Err": eff.se,
                        "Upr": eff.ci_upper,
                        "Lwr": eff.ci_lower,
                        "ci_method": eff.ci_method,
                    }
                )
            else:
                rec["status"] = f"bootstrap error: {boot.error}"
        records.append(rec)
    return records


def replicate_rows(estimand_class: str, boot_rows: Sequence[BootstrapRow]) -> List[Dict[str, Any]]:
    out = []
    for boot in boot_rows:
        if boot.effect is None:
            continue
        for b, (k, value) in enumerate(zip(boot.effect.substreams, boot.effect.replicates)):
            out.append(
                {
                    "class": estimand_class,
                    "label": boot.spec.label,
                    "measure": boot.spec.measure,
                    "replicate": b,
                    "substream": k,
                    "estimate": value,
                }
            )
    return out


def run_analysis(cfg: AnalyzeConfig) -> Dict[str, Any]:
    """Run the full analysis and write result files; returns the metadata written."""
    d = load_dataset(cfg)
    resolved, fit = propensity_scores(d, cfg)
    out_dir = cfg.out or DEFAULT_OUT
    boot_cfg = cfg.bootstrap_config() if cfg.boot else None

    files: List[str] = []
    replicates: List[Dict[str, Any]] = []
    n_ok = 0
    ps_ignored = False
    for cls in cfg.classes:
        cls = cls.upper()
        specs = build_specs(cfg.catalog(cls), cfg.measures)
        rows = estimate_all(d, resolved.values, specs)
        n_ok += sum(1 for r in rows if r.ok)

        boot_rows = None
        if boot_cfg is not None:
            points = [r.result.estimate if r.result else None for r in rows]
            boot_rows = bootstrap_many(d, specs, boot_cfg, points, provided_ps=d.provided_ps)
            ps_ignored = ps_ignored or d.provided_ps is not None
            replicates += replicate_rows(cls, boot_rows)

        records = table_records(rows, boot_rows)
        path = os.path.join(out_dir, f"{cls.lower()}.{cfg.format}")
        if cfg.format == "json":
            write_json(path, {"class": cls, "columns": RESULT_COLUMNS, "rows": records})
        else:
            write_csv(path, records, RESULT_COLUMNS)
        files.append(path)

    if cfg.dump_replicates and boot_cfg is not None:
        write_csv(cfg.dump_replicates, replicates, REPLICATE_COLUMNS, float_format="%.17g")
        files.append(cfg.dump_replicates)

    metadata = {
        "dataset": {
            "input": cfg.input,
            "N": d.n,
            "n_treated": d.n_treated,
            "n_control": d.n_control,
            "covariates": list(d.covariate_names),
            "outcome_kind": d.outcome_kind,
        },
        "ps": ps_metadata(resolved, fit),
        "bootstrap": None
        if boot_cfg is None
        else {
            "B": boot_cfg.B,
            "seed": boot_cfg.seed,
            "ci_method": boot_cfg.ci_method,
            "conf_level": boot_cfg.conf_level,
            "ps_uncertainty_ignored": ps_ignored,
        },
        "config": analyze_config_to_dict(cfg),
        "files": files,
    }
    write_json(os.path.join(out_dir, "metadata.json"), metadata)

    if n_ok == 0:
        raise EstimationError("no estimand could be estimated; see the status column")
    return metadata


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def build_parser() -> CliArgumentParser:
    parser = CliArgumentParser(
        prog="analyze", description="PS-weighted estimates of WATE/WATT/WATC from a CSV"
    )
    add_dataset_args(parser)
    parser.add_argument(
        "--measures", type=upper_list, default=None, help="RD,RR,OR (RR/OR need a binary outcome)"
    )
    parser.add_argument(
        "--boot", action=argparse.BooleanOptionalAction, default=None, help="Bootstrap SE and CI"
    )
    parser.add_argument("--n-boot", dest="n_boot", type=int, default=None)
    parser.add_argument(
        "--alpha-level", dest="alpha_level", type=float, default=None,
        help="Significance level; CIs have confidence 1 - alpha (default 0.05)",
    )
    parser.add_argument(
        "--ci-method", dest="ci_method", choices=["normal", "quantile", "lognormal"], default=None
    )
    parser.add_argument("--format", choices=["csv", "json"], default=None)
    parser.add_argument(
        "--dump-replicates", dest="dump_replicates", default=None,
        help="Write per-replicate bootstrap estimates to this CSV",
    )
    return parser


def _main(argv: Optional[Sequence[str]]) -> None:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    cfg = load_analyze_config(args.config) if args.config else AnalyzeConfig()
    cfg = merge_overrides(cfg, overrides_from_args(args, OVERRIDE_NAMES))
    require(validate_analyze_config(cfg), "invalid analyze settings")

    run_analysis(cfg)
    logger.info("Done. Results in %s", cfg.out or DEFAULT_OUT)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run_main(_main, argv)


if __name__ == "__main__":
    sys.exit(main())
