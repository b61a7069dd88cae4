"""Shared command-line plumbing for scripts/analyze.py, simulate.py and diagnose.py.

Exit codes: 0 success, 1 user/config error (argument errors included), 2
computational failure. Errors are reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from typing import Any, Callable, Dict, Iterable, List, NoReturn, Optional, Sequence, Tuple

from src.config_loader import AnalyzeConfig, ConfigValidationError
from src.dataset import ColumnMapping, Dataset, load_csv
from src.errors import PSWError, UserInputError
from src.psmodel import PSFit, ResolvedPS, fit_logistic, resolve_ps

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USER = 1
EXIT_COMPUTATION = 2

# split "ow,trim:0.05,bw:2,4" at commas that start a new token
_TOKEN_SPLIT = re.compile(r",(?=\s*[A-Za-z])")


class UsageError(UserInputError):
    pass


class CliArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose errors are user errors (exit 1) instead of SystemExit(2)."""

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Argument types
# ---------------------------------------------------------------------------


def float_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def name_list(text: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def lower_list(text: str) -> Tuple[str, ...]:
    return tuple(v.lower() for v in name_list(text))


def upper_list(text: str) -> Tuple[str, ...]:
    return tuple(v.upper() for v in name_list(text))


def scheme_tokens(text: str) -> Tuple[str, ...]:
    """`ow,trim:0.05,bw:2,4` -> ('ow', 'trim:0.05', 'bw:2,4')."""
    return tuple(t.strip().lower() for t in _TOKEN_SPLIT.split(text) if t.strip())


def semicolon_list(text: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in text.split(";") if v.strip())


# ---------------------------------------------------------------------------
# Shared options
# ---------------------------------------------------------------------------


def add_dataset_args(parser: argparse.ArgumentParser) -> None:
    """Options shared by analyze and diagnose; every default is None (= not given)."""
    parser.add_argument("--config", default=None, help="JSON config file (flags override it)")
    parser.add_argument("--input", default=None, help="Input CSV with a header row")
    parser.add_argument("--treatment-col", dest="treatment_col", default=None)
    parser.add_argument("--outcome-col", dest="outcome_col", default=None)
    parser.add_argument(
        "--covariate-cols", dest="covariate_cols", type=name_list, default=None,
        help="Comma-separated covariate columns for the PS model",
    )
    parser.add_argument(
        "--ps-col", dest="ps_col", default=None,
        help="Column with user-provided PS (skips model fitting)",
    )
    parser.add_argument("--id-col", dest="id_col", default=None)
    parser.add_argument(
        "--outcome-kind", dest="outcome_kind", choices=["continuous", "binary"], default=None
    )
    parser.add_argument(
        "--class", dest="classes", type=lower_list, default=None,
        help="Estimand classes, e.g. wate,watt,watc",
    )
    parser.add_argument(
        "--schemes", type=scheme_tokens, default=None,
        help="Explicit scheme tokens, e.g. ow,ipw,trim:0.05,bw:2",
    )
    parser.add_argument("--trim-alpha", dest="trim_alpha", type=float_list, default=None)
    parser.add_argument("--trunc-alpha", dest="trunc_alpha", type=float_list, default=None)
    parser.add_argument("--beta-nu", dest="beta_nu", type=float_list, default=None)
    parser.add_argument(
        "--smooth-trim", dest="smooth_trim", type=semicolon_list, default=None,
        help="Smooth trimming as 'alpha[,eps]' entries separated by ';'",
    )
    parser.add_argument("--tw-k", dest="tw_k", type=float_list, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--tol", type=float, default=None, help="IRLS score tolerance")
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    parser.add_argument("--out", default=None, help="Output directory")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")


def overrides_from_args(args: argparse.Namespace, names: Iterable[str]) -> Dict[str, Any]:
    return {name: getattr(args, name, None) for name in names}


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s: %(message)s",
    )


# ---------------------------------------------------------------------------
# Error reporting
# ---------------------------------------------------------------------------


def error_payload(exc: BaseException) -> Dict[str, Any]:
    if isinstance(exc, PSWError):
        kind, details = exc.kind, exc.details
    else:
        kind, details = "user", []
    return {"error": type(exc).__name__, "kind": kind, "message": str(exc), "details": details}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, PSWError) and exc.kind == "computation":
        return EXIT_COMPUTATION
    return EXIT_USER


def report_error(exc: BaseException) -> int:
    print(json.dumps(error_payload(exc), ensure_ascii=False), file=sys.stderr)
    return exit_code(exc)


def run_main(handler: Callable[[Optional[Sequence[str]]], None], argv: Optional[Sequence[str]]) -> int:
    """Run a script body and translate package/OS errors into exit codes."""
    try:
        handler(argv)
    except (PSWError, OSError) as exc:
        return report_error(exc)
    return EXIT_OK


def require(errors: List[str], message: str = "invalid settings") -> None:
    if errors:
        raise ConfigValidationError(
            message + ":\n" + "\n".join(f"  - {e}" for e in errors), details=errors
        )


# ---------------------------------------------------------------------------
# Dataset and PS shared by analyze and diagnose
# ---------------------------------------------------------------------------


def load_dataset(cfg: AnalyzeConfig) -> Dataset:
    mapping = ColumnMapping(
        treatment=cfg.treatment_col,
        outcome=cfg.outcome_col,
        covariates=tuple(cfg.covariate_cols),
        ps=cfg.ps_col,
        unit_id=cfg.id_col,
        outcome_kind=cfg.outcome_kind,
    )
    return load_csv(str(cfg.input), mapping)


def propensity_scores(d: Dataset, cfg: AnalyzeConfig) -> Tuple[ResolvedPS, Optional[PSFit]]:
    """Provided PS column if mapped, otherwise a logistic fit on the covariates."""
    if d.provided_ps is not None:
        logger.info("Using provided PS column '%s'", d.ps_name)
        return resolve_ps(d), None
    fit = fit_logistic(d, config=cfg.fit_config)
    return resolve_ps(d, fit), fit


def ps_metadata(resolved: ResolvedPS, fit: Optional[PSFit]) -> Dict[str, Any]:
    meta: Dict[str, Any] = {"source": resolved.source, "clamped_count": resolved.clamped_count}
    if fit is not None:
        meta.update(
            converged=fit.converged,
            iterations=fit.iterations,
            max_abs_score=fit.max_abs_score,
            coefficients=dict(
                zip(("(intercept)", *fit.covariate_names), fit.coefficients.tolist())
            ),
        )
    return meta
