"""Post-weighting diagnostics: effective sample size, ASMD balance and PS overlap."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.dataset import Dataset
from src.errors import ComputationError, PSWError
from src.tilting import WeightScheme, unit_weights

logger = logging.getLogger(__name__)

DEFAULT_BINS = 30
ASMD_THRESHOLD = 0.1
UNWEIGHTED = "unweighted"


class DiagnosticsError(ComputationError):
    pass


# ---------------------------------------------------------------------------
# ESS / ASMD
# ---------------------------------------------------------------------------


def ess(w: np.ndarray) -> float:
    """Effective sample size (sum w)^2 / sum w^2."""
    w = np.asarray(w, dtype=float)
    if np.any(w < 0.0) or not np.all(np.isfinite(w)):
        raise DiagnosticsError("ESS requires finite non-negative weights")
    sq = float(np.sum(w * w))
    if sq == 0.0:
        raise DiagnosticsError("ESS undefined: all weights are zero")
    return float(np.sum(w)) ** 2 / sq


def weighted_arm_means(x: np.ndarray, a: np.ndarray, w: np.ndarray) -> Tuple[float, float]:
    treated = a == 1
    w1, w0 = w[treated], w[~treated]
    s1, s0 = float(np.sum(w1)), float(np.sum(w0))
    if s1 <= 0.0 or s0 <= 0.0:
        raise DiagnosticsError("weighted means undefined: an arm has zero total weight")
    return float(np.sum(w1 * x[treated]) / s1), float(np.sum(w0 * x[~treated]) / s0)


def asmd_arrays(x: np.ndarray, a: np.ndarray, w: np.ndarray) -> Optional[float]:
    """|weighted mean difference| / sqrt((s1^2 + s0^2) / 2) with unweighted arm variances.

    Returns None when the pooled SD is zero or an arm has fewer than two units.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a)
    treated = a == 1
    if np.sum(treated) < 2 or np.sum(~treated) < 2:
        return None
    pooled = math.sqrt((np.var(x[treated], ddof=1) + np.var(x[~treated], ddof=1)) / 2.0)
    if pooled == 0.0:
        return None
    m1, m0 = weighted_arm_means(x, a, np.asarray(w, dtype=float))
    return abs(m1 - m0) / pooled


def asmd(d: Dataset, w: np.ndarray, covariate: str) -> Optional[float]:
    return asmd_arrays(d.covariate(covariate), d.treatment, w)


# ---------------------------------------------------------------------------
# Overlap
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArmSummary:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float


@dataclass(frozen=True)
class ExtremeFraction:
    alpha: float
    treated_below: float
    treated_above: float
    control_below: float
    control_above: float

    @property
    def treated_outside(self) -> float:
        return self.treated_below + self.treated_above

    @property
    def control_outside(self) -> float:
        return self.control_below + self.control_above


@dataclass(frozen=True)
class OverlapSummary:
    treated: ArmSummary
    control: ArmSummary
    extreme: Tuple[ExtremeFraction, ...]
    bin_edges: Tuple[float, ...]
    treated_counts: Tuple[int, ...]
    control_counts: Tuple[int, ...]
    clamped_count: int = 0


def _arm_summary(ps: np.ndarray) -> ArmSummary:
    if ps.size == 0:
        return ArmSummary(0, *([math.nan] * 5))
    q = np.quantile(ps, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return ArmSummary(int(ps.size), *(float(v) for v in q))


def _share(mask: np.ndarray) -> float:
    return float(np.mean(mask)) if mask.size else math.nan


def extreme_fraction(ps: np.ndarray, a: np.ndarray, alpha: float) -> ExtremeFraction:
    t, c = ps[a == 1], ps[a == 0]
    return ExtremeFraction(
        alpha=float(alpha),
        treated_below=_share(t < alpha),
        treated_above=_share(t > 1.0 - alpha),
        control_below=_share(c < alpha),
        control_above=_share(c > 1.0 - alpha),
    )


def overlap_summary(
    ps: np.ndarray,
    a: np.ndarray,
    alphas: Sequence[float] = (),
    bins: int = DEFAULT_BINS,
    clamped_count: int = 0,
) -> OverlapSummary:
    ps = np.asarray(ps, dtype=float)
    a = np.asarray(a)
    if ps.shape != a.shape:
        raise DiagnosticsError("PS and treatment vectors differ in length")
    edges = np.linspace(0.0, 1.0, bins + 1)
    t, c = ps[a == 1], ps[a == 0]
    t_counts, _ = np.histogram(t, bins=edges)
    c_counts, _ = np.histogram(c, bins=edges)
    return OverlapSummary(
        treated=_arm_summary(t),
        control=_arm_summary(c),
        extreme=tuple(extreme_fraction(ps, a, alpha) for alpha in alphas),
        bin_edges=tuple(float(v) for v in edges),
        treated_counts=tuple(int(v) for v in t_counts),
        control_counts=tuple(int(v) for v in c_counts),
        clamped_count=clamped_count,
    )


# ---------------------------------------------------------------------------
# Balance report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SchemeBalance:
    """Balance of one weighting; `scheme` is None for the unweighted baseline."""

    scheme: Optional[WeightScheme]
    n_treated: int
    n_control: int
    ess_treated: float
    ess_control: float
    ess_total: float
    asmd: Dict[str, Optional[float]]
    mean_treated: Dict[str, float]
    mean_control: Dict[str, float]

    @property
    def label(self) -> str:
        return UNWEIGHTED if self.scheme is None else self.scheme.label

    @property
    def max_asmd(self) -> Optional[float]:
        defined = [v for v in self.asmd.values() if v is not None]
        return max(defined) if defined else None

    @property
    def balanced(self) -> Optional[bool]:
        m = self.max_asmd
        return None if m is None else m <= ASMD_THRESHOLD


@dataclass(frozen=True)
class FailedScheme:
    scheme: WeightScheme
    error: str


@dataclass(frozen=True)
class BalanceReport:
    covariate_names: Tuple[str, ...]
    baseline: SchemeBalance
    schemes: Tuple[SchemeBalance, ...]
    overlap: OverlapSummary
    failed: Tuple[FailedScheme, ...] = field(default=())


def scheme_balance(d: Dataset, w: np.ndarray, scheme: Optional[WeightScheme]) -> SchemeBalance:
    a = d.treatment
    treated = a == 1
    asmds: Dict[str, Optional[float]] = {}
    means1: Dict[str, float] = {}
    means0: Dict[str, float] = {}
    for j, name in enumerate(d.covariate_names):
        x = d.covariates[:, j]
        means1[name], means0[name] = weighted_arm_means(x, a, w)
        asmds[name] = asmd_arrays(x, a, w)
    return SchemeBalance(
        scheme=scheme,
        n_treated=d.n_treated,
        n_control=d.n_control,
        ess_treated=ess(w[treated]),
        ess_control=ess(w[~treated]),
        ess_total=ess(w),
        asmd=asmds,
        mean_treated=means1,
        mean_control=means0,
    )


def build_balance_report(
    d: Dataset,
    ps: np.ndarray,
    schemes: Sequence[WeightScheme],
    alphas: Sequence[float] = (),
    bins: int = DEFAULT_BINS,
    clamped_count: int = 0,
) -> BalanceReport:
    """ESS, ASMD and weighted means per scheme plus the unweighted baseline and PS overlap."""
    ps = np.asarray(ps, dtype=float)
    baseline = scheme_balance(d, np.ones(d.n), None)
    done: List[SchemeBalance] = []
    failed: List[FailedScheme] = []
    for s in schemes:
        try:
            done.append(scheme_balance(d, unit_weights(s, ps, d.treatment), s))
        except PSWError as exc:
            logger.warning("Diagnostics for '%s' (%s) failed: %s", s.label, s.estimand_class, exc)
            failed.append(FailedScheme(s, str(exc)))
    for sb in done:
        if sb.balanced is False:
            logger.info(
                "%s %s: max ASMD %.3f exceeds %.1f",
                sb.scheme.estimand_class if sb.scheme else "",
                sb.label,
                sb.max_asmd,
                ASMD_THRESHOLD,
            )
    return BalanceReport(
        covariate_names=d.covariate_names,
        baseline=baseline,
        schemes=tuple(done),
        overlap=overlap_summary(ps, d.treatment, alphas, bins, clamped_count),
        failed=tuple(failed),
    )


# ---------------------------------------------------------------------------
# Plot-ready records
# ---------------------------------------------------------------------------

BALANCE_COLUMNS = ["class", "scheme", "estimand", "covariate", "metric", "value"]
OVERLAP_BASE_COLUMNS = ["arm", "n", "min", "q1", "median", "q3", "max"]
HISTOGRAM_COLUMNS = ["arm", "bin_lower", "bin_upper", "count"]


def _scheme_ids(sb: SchemeBalance) -> Dict[str, str]:
    if sb.scheme is None:
        return {"class": "", "scheme": UNWEIGHTED, "estimand": ""}
    return {"class": sb.scheme.estimand_class, "scheme": sb.label, "estimand": sb.scheme.estimand}


def balance_records(report: BalanceReport) -> List[Dict[str, Any]]:
    """Long format: one row per (scheme, covariate, metric); ESS rows carry no covariate."""
    records: List[Dict[str, Any]] = []
    for sb in (report.baseline, *report.schemes):
        ids = _scheme_ids(sb)
        for metric, value in (
            ("n_treated", sb.n_treated),
            ("n_control", sb.n_control),
            ("ess_treated", sb.ess_treated),
            ("ess_control", sb.ess_control),
            ("ess_total", sb.ess_total),
            ("max_asmd", sb.max_asmd),
        ):
            records.append({**ids, "covariate": "", "metric": metric, "value": value})
        for name in report.covariate_names:
            for metric, value in (
                ("asmd", sb.asmd[name]),
                ("mean_treated", sb.mean_treated[name]),
                ("mean_control", sb.mean_control[name]),
            ):
                records.append({**ids, "covariate": name, "metric": metric, "value": value})
    return records


def overlap_columns(alphas: Sequence[float]) -> List[str]:
    return OVERLAP_BASE_COLUMNS + [f"extreme_{a:g}" for a in alphas]


def overlap_records(overlap: OverlapSummary) -> List[Dict[str, Any]]:
    records = []
    for arm, summary in (("treated", overlap.treated), ("control", overlap.control)):
        rec: Dict[str, Any] = {
            "arm": arm,
            "n": summary.n,
            "min": summary.min,
            "q1": summary.q1,
            "median": summary.median,
            "q3": summary.q3,
            "max": summary.max,
        }
        for ef in overlap.extreme:
            rec[f"extreme_{ef.alpha:g}"] = (
                ef.treated_outside if arm == "treated" else ef.control_outside
            )
        records.append(rec)
    return records


def histogram_records(overlap: OverlapSummary) -> List[Dict[str, Any]]:
    records = []
    edges = overlap.bin_edges
    for arm, counts in (("treated", overlap.treated_counts), ("control", overlap.control_counts)):
        for i, count in enumerate(counts):
            records.append(
                {"arm": arm, "bin_lower": edges[i], "bin_upper": edges[i + 1], "count": count}
            )
    return records


def _balance_dict(sb: SchemeBalance) -> Dict[str, Any]:
    return {
        **_scheme_ids(sb),
        "n_treated": sb.n_treated,
        "n_control": sb.n_control,
        "ess": {"treated": sb.ess_treated, "control": sb.ess_control, "total": sb.ess_total},
        "asmd": sb.asmd,
        "max_asmd": sb.max_asmd,
        "balanced": sb.balanced,
        "weighted_means": {"treated": sb.mean_treated, "control": sb.mean_control},
    }


def report_to_dict(report: BalanceReport) -> Dict[str, Any]:
    ov = report.overlap
    return {
        "covariates": list(report.covariate_names),
        "asmd_threshold": ASMD_THRESHOLD,
        "baseline": _balance_dict(report.baseline),
        "schemes": [_balance_dict(sb) for sb in report.schemes],
        "failed": [
            {"class": f.scheme.estimand_class, "scheme": f.scheme.label, "error": f.error}
            for f in report.failed
        ],
        "overlap": {
            "treated": vars(ov.treated),
            "control": vars(ov.control),
            "extreme": [
                {
                    "alpha": ef.alpha,
                    "treated_below": ef.treated_below,
                    "treated_above": ef.treated_above,
                    "control_below": ef.control_below,
                    "control_above": ef.control_above,
                    "treated_outside": ef.treated_outside,
                    "control_outside": ef.control_outside,
                }
                for ef in ov.extreme
            ],
            "histogram": {
                "bin_edges": list(ov.bin_edges),
                "treated": list(ov.treated_counts),
                "control": list(ov.control_counts),
            },
            "clamped_count": ov.clamped_count,
        },
    }
