"""Nonparametric bootstrap variance and confidence intervals.

Replicate k resamples rows with its own generator seeded from
SeedSequence(seed, spawn_key=stream + (k,)), so the result depends only on the
inputs and never on thread scheduling. All rows of a table share the same
resamples; each row keeps the first B substreams on which it is defined.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from src.dataset import Dataset
from src.errors import ComputationError, PSWError, UserInputError
from src.estimators import (
    RATIO_MEASURES,
    EstimandSpec,
    EstimationError,
    point_from_arrays,
)
from src.psmodel import PSFitConfig, PSModelError, clamp_ps, fit_logistic_arrays

logger = logging.getLogger(__name__)

CI_METHODS = ("normal", "quantile", "lognormal")
DEFAULT_B = 200
DEFAULT_CONF_LEVEL = 0.95
MIN_QUANTILE_B = 200
REDRAW_FACTOR = 10  # total substreams drawn never exceed REDRAW_FACTOR * B


class BootstrapError(ComputationError):
    pass


class CIMethodError(UserInputError):
    pass


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = DEFAULT_B
    seed: int = 0
    ci_method: str = "normal"
    conf_level: float = DEFAULT_CONF_LEVEL
    threads: int = 1
    fit: PSFitConfig = field(default_factory=PSFitConfig)
    stream: Tuple[int, ...] = ()  # spawn_key prefix, lets callers nest independent runs

    def __post_init__(self) -> None:
        errors = []
        if self.B < 2:
            errors.append(f"B must be >= 2 (got {self.B})")
        if self.ci_method not in CI_METHODS:
            errors.append(f"ci_method must be one of {CI_METHODS} (got '{self.ci_method}')")
        if not 0.0 < self.conf_level < 1.0:
            errors.append(f"conf_level must be in (0,1) (got {self.conf_level})")
        if self.threads < 1:
            errors.append(f"threads must be >= 1 (got {self.threads})")
        if self.seed < 0:
            errors.append(f"seed must be non-negative (got {self.seed})")
        if errors:
            raise CIMethodError("invalid bootstrap settings: " + "; ".join(errors), details=errors)


@dataclass(frozen=True)
class EffectEstimate:
    point: float
    se: Optional[float]  # None for quantile CIs; log-scale SD for lognormal
    ci_lower: float
    ci_upper: float
    ci_method: str
    B: int
    degenerate_redraws: int
    conf_level: float
    ps_uncertainty_ignored: bool = False
    replicates: Tuple[float, ...] = ()
    substreams: Tuple[int, ...] = ()


class BootstrapRow(NamedTuple):
    spec: EstimandSpec
    effect: Optional[EffectEstimate]
    error: Optional[str] = None
    error_kind: Optional[str] = None


# ---------------------------------------------------------------------------
# Confidence intervals
# ---------------------------------------------------------------------------


def z_value(conf_level: float) -> float:
    """Two-sided standard-normal quantile (1.959964 at 0.95)."""
    return float(norm.ppf(1.0 - (1.0 - conf_level) / 2.0))


def bootstrap_variance(replicates: Sequence[float]) -> float:
    """V = B^-1 * sum (t_b - mean)^2."""
    r = np.asarray(replicates, dtype=float)
    return float(np.mean((r - r.mean()) ** 2))


def confidence_interval(
    point: float, replicates: Sequence[float], ci_method: str, conf_level: float
) -> Tuple[Optional[float], float, float]:
    """Return (se, lower, upper) for the requested method."""
    r = np.asarray(replicates, dtype=float)
    if ci_method == "normal":
        se = math.sqrt(bootstrap_variance(r))
        z = z_value(conf_level)
        return se, point - z * se, point + z * se
    if ci_method == "quantile":
        tail = (1.0 - conf_level) / 2.0
        lo, hi = np.quantile(r, [tail, 1.0 - tail], method="linear")
        return None, float(lo), float(hi)
    if ci_method == "lognormal":
        if point <= 0.0 or np.any(r <= 0.0):
            raise BootstrapError("lognormal CI requires strictly positive ratio estimates")
        se_log = math.sqrt(bootstrap_variance(np.log(r)))
        z = z_value(conf_level)
        return se_log, point * math.exp(-z * se_log), point * math.exp(z * se_log)
    raise CIMethodError(f"unknown ci_method '{ci_method}'")


# ---------------------------------------------------------------------------
# Replicates
# ---------------------------------------------------------------------------


def substream(seed: int, stream: Tuple[int, ...], k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(*stream, k)))


class _ReplicateRunner:
    """Computes every spec on one resample; re-entrant, holds read-only inputs only."""

    def __init__(
        self,
        d: Dataset,
        specs: Sequence[EstimandSpec],
        config: BootstrapConfig,
        provided_ps: Optional[np.ndarray],
    ):
        self.d = d
        self.specs = list(specs)
        self.config = config
        self.provided_ps = provided_ps

    def __call__(self, k: int) -> Tuple[Optional[float], ...]:
        d, cfg = self.d, self.config
        missing: Tuple[Optional[float], ...] = (None,) * len(self.specs)
        rng = substream(cfg.seed, cfg.stream, k)
        idx = rng.integers(0, d.n, size=d.n)
        a = d.treatment[idx]
        if a.min() == a.max():
            return missing

        if self.provided_ps is not None:
            e = self.provided_ps[idx]
        else:
            try:
                fit = fit_logistic_arrays(
                    d.covariates[idx],
                    a,
                    tol=cfg.fit.tol,
                    max_iter=cfg.fit.max_iter,
                    clamp_lo=cfg.fit.clamp_lo,
                    clamp_hi=cfg.fit.clamp_hi,
                )
            except PSModelError as exc:
                logger.debug("substream %d: PS refit failed (%s)", k, exc)
                return missing
            e = fit.fitted_ps

        y = d.outcome[idx]
        values: List[Optional[float]] = []
        for spec in self.specs:
            try:
                value = point_from_arrays(spec, e, a, y, d.outcome_kind).estimate
            except EstimationError:
                value = None
            if value is not None and cfg.ci_method == "lognormal" and not value > 0.0:
                value = None
            values.append(value)
        return tuple(values)


def _run_substreams(
    runner: _ReplicateRunner, ks: Sequence[int], threads: int
) -> List[Tuple[Optional[float], ...]]:
    if threads <= 1 or len(ks) <= 1:
        return [runner(k) for k in ks]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(runner, ks))


def bootstrap_many(
    d: Dataset,
    specs: Sequence[EstimandSpec],
    config: BootstrapConfig,
    points: Sequence[Optional[float]],
    provided_ps: Optional[np.ndarray] = None,
) -> List[BootstrapRow]:
    """Bootstrap every spec on a shared sequence of resamples.

    `points` are the full-sample estimates (None when the row already failed).
    When `provided_ps` is given it is reused for the resampled rows instead of
    refitting the PS model, and every estimate is flagged accordingly.
    """
    if len(points) != len(specs):
        raise ValueError("points and specs must have the same length")
    if config.ci_method == "lognormal":
        bad = [s.key for s in specs if s.measure not in RATIO_MEASURES]
        if bad:
            raise CIMethodError(
                f"lognormal CI applies to RR/OR only (requested for {', '.join(bad)})"
            )
    if config.ci_method == "quantile" and config.B < MIN_QUANTILE_B:
        logger.warning(
            "quantile CI with B=%d replicates (at least %d recommended)", config.B, MIN_QUANTILE_B
        )
    ps_ignored = provided_ps is not None
    if ps_ignored:
        provided_ps, _ = clamp_ps(provided_ps, config.fit.clamp_lo, config.fit.clamp_hi)
        logger.warning("Bootstrap reuses the provided PS; PS estimation uncertainty is ignored")

    B = config.B
    cap = REDRAW_FACTOR * B
    runner = _ReplicateRunner(d, specs, config, provided_ps)
    active = [p is not None for p in points]
    kept: List[List[Tuple[int, float]]] = [[] for _ in specs]

    drawn = 0
    while drawn < cap:
        need = max((B - len(kept[j]) for j in range(len(specs)) if active[j]), default=0)
        if need <= 0:
            break
        ks = list(range(drawn, min(drawn + need, cap)))
        results = _run_substreams(runner, ks, config.threads)
        for k, values in zip(ks, results):
            for j, value in enumerate(values):
                if active[j] and value is not None and len(kept[j]) < B:
                    kept[j].append((k, value))
        drawn = ks[-1] + 1
        logger.debug("bootstrap: %d substreams drawn", drawn)

    rows: List[BootstrapRow] = []
    for j, spec in enumerate(specs):
        point = points[j]
        if point is None:
            rows.append(
                BootstrapRow(spec, None, "point estimate undefined on full sample", "computation")
            )
            continue
        if len(kept[j]) < B:
            msg = (
                f"only {len(kept[j])} of {B} bootstrap replicates were non-degenerate "
                f"after {cap} draws"
            )
            logger.warning("Row '%s': %s", spec.key, msg)
            rows.append(BootstrapRow(spec, None, msg, "computation"))
            continue
        last_used = kept[j][-1][0]
        redraws = last_used + 1 - B
        if redraws:
            logger.warning("Row '%s': %d degenerate bootstrap replicates redrawn", spec.key, redraws)
        replicates = tuple(v for _, v in kept[j])
        try:
            se, lo, hi = confidence_interval(point, replicates, config.ci_method, config.conf_level)
        except PSWError as exc:
            rows.append(BootstrapRow(spec, None, str(exc), exc.kind))
            continue
        effect = EffectEstimate(
            point=point,
            se=se,
            ci_lower=lo,
            ci_upper=hi,
            ci_method=config.ci_method,
            B=B,
            degenerate_redraws=redraws,
            conf_level=config.conf_level,
            ps_uncertainty_ignored=ps_ignored,
            replicates=replicates,
            substreams=tuple(k for k, _ in kept[j]),
        )
        rows.append(BootstrapRow(spec, effect))
    return rows


def bootstrap(
    d: Dataset,
    spec: EstimandSpec,
    config: BootstrapConfig,
    point: Optional[float] = None,
    ps: Optional[np.ndarray] = None,
) -> EffectEstimate:
    """Bootstrap a single estimand.

    The full-sample point estimate is computed from `ps` when not given; with no
    `ps`, the dataset's provided PS is used if present, otherwise the PS model is
    fitted on the full sample.
    """
    provided = d.provided_ps
    if point is None:
        if ps is None:
            if provided is not None:
                ps, _ = clamp_ps(provided, config.fit.clamp_lo, config.fit.clamp_hi)
            else:
                ps = fit_logistic_arrays(
                    d.covariates,
                    d.treatment,
                    tol=config.fit.tol,
                    max_iter=config.fit.max_iter,
                    clamp_lo=config.fit.clamp_lo,
                    clamp_hi=config.fit.clamp_hi,
                ).fitted_ps
        try:
            point = point_from_arrays(spec, ps, d.treatment, d.outcome, d.outcome_kind).estimate
        except EstimationError as exc:
            raise BootstrapError(f"point estimate undefined on full sample: {exc}") from exc

    (row,) = bootstrap_many(d, [spec], config, [point], provided_ps=provided)
    if row.effect is None:
        raise BootstrapError(row.error or "bootstrap failed")
    return row.effect
