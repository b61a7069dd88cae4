"""Normalised PS-weighted (Hajek-form) estimators of WATE, WATT and WATC.

Each arm mean is sum(w * Y) / sum(w) with the unit weights from `src.tilting`;
binary outcomes additionally expose the risk ratio and odds ratio built from the
same weighted proportions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from src.dataset import Dataset
from src.errors import ComputationError, PSWError, UserInputError
from src.tilting import WeightScheme, beta_scheme, unit_weights

logger = logging.getLogger(__name__)

MEASURES = ("RD", "RR", "OR")
RATIO_MEASURES = frozenset({"RR", "OR"})


class EstimationError(ComputationError):
    pass


class DegenerateArmError(EstimationError):
    pass


class UndefinedRatioError(EstimationError):
    pass


class MeasureError(UserInputError):
    pass


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EstimandSpec:
    scheme: WeightScheme
    measure: str = "RD"

    def __post_init__(self) -> None:
        object.__setattr__(self, "measure", self.measure.upper())
        if self.measure not in MEASURES:
            raise MeasureError(f"measure must be one of {MEASURES} (got '{self.measure}')")

    @property
    def label(self) -> str:
        return self.scheme.label

    @property
    def key(self) -> str:
        """Unique row key: the listing label, suffixed with the measure for RR/OR."""
        if self.measure == "RD":
            return self.label
        return f"{self.label} [{self.measure}]"


@dataclass(frozen=True)
class PointResult:
    estimate: float
    treated_mean: float
    control_mean: float
    treated_weight: float
    control_weight: float
    treated_zero_weight: int = 0
    control_zero_weight: int = 0

    @property
    def arm_means(self) -> Tuple[float, float]:
        return self.treated_mean, self.control_mean

    @property
    def sum_weights(self) -> Tuple[float, float]:
        return self.treated_weight, self.control_weight


class EstimateRow(NamedTuple):
    """One row of an estimate table; `error` is set instead of `result` on failure."""

    spec: EstimandSpec
    result: Optional[PointResult]
    error: Optional[str] = None
    error_kind: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.result is not None


# ---------------------------------------------------------------------------
# Point estimation
# ---------------------------------------------------------------------------


def ratio_measure(measure: str, p1: float, p0: float) -> float:
    """RD, RR or OR from the two weighted arm means (proportions for RR/OR)."""
    if measure == "RD":
        return p1 - p0
    if measure == "RR":
        if p0 == 0.0:
            raise UndefinedRatioError("undefined ratio measure: RR with control proportion 0")
        return p1 / p0
    if measure == "OR":
        if p0 in (0.0, 1.0) or p1 in (0.0, 1.0):
            raise UndefinedRatioError(
                "undefined ratio measure: OR with a proportion equal to 0 or 1"
            )
        return (p1 * (1.0 - p0)) / (p0 * (1.0 - p1))
    raise MeasureError(f"unknown measure '{measure}'")


def weighted_arm_means(
    scheme: WeightScheme, e: np.ndarray, a: np.ndarray, y: np.ndarray
) -> PointResult:
    """Both normalised arm means with an RD estimate; raises on a zero-weight arm."""
    w = unit_weights(scheme, e, a)
    treated = a == 1
    w1, w0 = w[treated], w[~treated]
    s1, s0 = float(np.sum(w1)), float(np.sum(w0))
    if not (s1 > 0.0 and np.isfinite(s1)):
        raise DegenerateArmError(
            f"degenerate weighted arm: treated arm has total weight {s1:g} under {scheme.token}"
        )
    if not (s0 > 0.0 and np.isfinite(s0)):
        raise DegenerateArmError(
            f"degenerate weighted arm: control arm has total weight {s0:g} under {scheme.token}"
        )
    m1 = float(np.sum(w1 * y[treated]) / s1)
    m0 = float(np.sum(w0 * y[~treated]) / s0)
    return PointResult(
        estimate=m1 - m0,
        treated_mean=m1,
        control_mean=m0,
        treated_weight=s1,
        control_weight=s0,
        treated_zero_weight=int(np.sum(w1 == 0.0)),
        control_zero_weight=int(np.sum(w0 == 0.0)),
    )


def point_from_arrays(
    spec: EstimandSpec,
    e: np.ndarray,
    a: np.ndarray,
    y: np.ndarray,
    outcome_kind: str = "continuous",
) -> PointResult:
    """Array-level estimator shared by estimate_point and the bootstrap workers."""
    if spec.measure in RATIO_MEASURES and outcome_kind != "binary":
        raise MeasureError(f"measure {spec.measure} requires a binary outcome")
    base = weighted_arm_means(spec.scheme, e, a, y)
    if spec.measure == "RD":
        return base
    value = ratio_measure(spec.measure, base.treated_mean, base.control_mean)
    return PointResult(
        estimate=value,
        treated_mean=base.treated_mean,
        control_mean=base.control_mean,
        treated_weight=base.treated_weight,
        control_weight=base.control_weight,
        treated_zero_weight=base.treated_zero_weight,
        control_zero_weight=base.control_zero_weight,
    )


def estimate_point(d: Dataset, ps: np.ndarray, spec: EstimandSpec) -> PointResult:
    ps = np.asarray(ps, dtype=float)
    if ps.shape != (d.n,):
        raise UserInputError(f"PS vector has length {ps.shape[0]}, dataset has {d.n} rows")
    return point_from_arrays(spec, ps, d.treatment, d.outcome, d.outcome_kind)


def estimate_all(d: Dataset, ps: np.ndarray, specs: Sequence[EstimandSpec]) -> List[EstimateRow]:
    """Estimate every spec in order; a failing row records its error and the table continues."""
    rows: List[EstimateRow] = []
    for spec in specs:
        try:
            rows.append(EstimateRow(spec, estimate_point(d, ps, spec)))
        except PSWError as exc:
            logger.warning("Row '%s' (%s) failed: %s", spec.key, spec.scheme.estimand_class, exc)
            rows.append(EstimateRow(spec, None, str(exc), exc.kind))
    n_ok = sum(1 for r in rows if r.ok)
    logger.info("Estimated %d/%d rows", n_ok, len(rows))
    return rows


# ---------------------------------------------------------------------------
# Catalogs
# ---------------------------------------------------------------------------


def default_catalog(
    estimand_class: str,
    trim_alphas: Sequence[float] = (),
    trunc_alphas: Sequence[float] = (),
    beta_nus: Sequence[float] = (),
    smooth_trims: Sequence[Tuple[float, Optional[float]]] = (),
    tw_ks: Sequence[float] = (),
) -> List[WeightScheme]:
    """Rows in listing order: base rows, then beta, trimming and truncation variants.

    WATE base rows are overall/treated/control/overlap/matching/entropy; WATT and
    WATC base rows are the conventional estimand plus the OW/MW/EW versions.
    Smooth trimming and trapezoidal rows (WATE only) come last when requested.
    """
    cls = estimand_class.upper()
    if cls == "WATE":
        base = ["IPW", "IPW_treated", "IPW_controls", "OW", "MW", "EW"]
    else:
        base = ["IPW", "OW", "MW", "EW"]
    schemes = [WeightScheme(cls, name) for name in base]
    schemes += [beta_scheme(cls, nu) for nu in beta_nus]
    schemes += [WeightScheme(cls, "TRIM", alpha=a) for a in trim_alphas]
    schemes += [WeightScheme(cls, "TRUNC", alpha=a) for a in trunc_alphas]
    schemes += [WeightScheme(cls, "SMOOTH_TRIM", alpha=a, epsilon=eps) for a, eps in smooth_trims]
    schemes += [WeightScheme(cls, "TW", K=k) for k in tw_ks]  # WATE only
    return schemes


def build_specs(
    schemes: Sequence[WeightScheme], measures: Sequence[str] = ("RD",)
) -> List[EstimandSpec]:
    """Cross schemes with measures, scheme-major (all measures of a row stay together)."""
    return [EstimandSpec(s, m) for s in schemes for m in measures]


def rows_by_key(rows: Sequence[EstimateRow]) -> Dict[str, EstimateRow]:
    return {r.spec.key: r for r in rows}
