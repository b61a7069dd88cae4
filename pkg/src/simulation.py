"""Monte Carlo harness: data-generating process, super-population truths, replicate loop.

Random streams are derived from one integer seed with SeedSequence spawn keys:
    (0, chunk)  super-population chunks for the truth oracle
    (1, m)      observed sample of replicate m
    (2, m, k)   bootstrap substream k of replicate m
so truths and replicates never share draws and results do not depend on threads.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from src.dataset import Dataset
from src.errors import ComputationError, PSWError, UserInputError
from src.estimators import EstimandSpec, EstimationError, default_catalog, point_from_arrays
from src.inference import BootstrapConfig, bootstrap_many
from src.psmodel import PSFitConfig, PSModelError, fit_logistic_arrays
from src.tilting import ESTIMAND_CLASSES, WeightScheme, tilt

logger = logging.getLogger(__name__)

GOOD_OVERLAP = (0.5, 0.407)
POOR_OVERLAP = (2.5, 2.074)
PS_MODELS = ("correct", "misspecified")
PS_MODEL_CHOICES = PS_MODELS + ("both",)
COVARIATE_NAMES = tuple(f"X{j}" for j in range(1, 8))
PS_MODEL_COVARIATES = {"correct": COVARIATE_NAMES, "misspecified": COVARIATE_NAMES[:4]}
NOISE_SD = 2.0
DEFAULT_SUPER_N = 1_000_000
MIN_SUPER_N = 100_000
TRUTH_CHUNK = 100_000
STUDY_ALPHAS = (0.05, 0.1, 0.15)
STUDY_BETA_NUS = (3.0, 10.0)
CP_Z = 1.96

# Cholesky factors of the two (X3, X4) covariance branches
_CHOL_X2_1 = np.linalg.cholesky(np.array([[1.0, 0.5], [0.5, 1.0]]))
_CHOL_X2_0 = np.linalg.cholesky(np.array([[2.0, 0.25], [0.25, 2.0]]))


class SimulationError(ComputationError):
    pass


class DGPConfigError(UserInputError):
    pass


# ---------------------------------------------------------------------------
# DGP
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DGPConfig:
    gamma: float = GOOD_OVERLAP[0]
    alpha0: float = GOOD_OVERLAP[1]
    N: int = 2000
    seed: int = 0
    ps_model: str = "correct"  # correct|misspecified|both

    def __post_init__(self) -> None:
        errors = []
        if self.N < 10:
            errors.append(f"N must be >= 10 (got {self.N})")
        if self.seed < 0:
            errors.append(f"seed must be non-negative (got {self.seed})")
        if self.ps_model not in PS_MODEL_CHOICES:
            errors.append(f"ps_model must be one of {PS_MODEL_CHOICES} (got '{self.ps_model}')")
        if not (math.isfinite(self.gamma) and math.isfinite(self.alpha0)):
            errors.append("gamma and alpha0 must be finite")
        if errors:
            raise DGPConfigError("invalid DGP config: " + "; ".join(errors), details=errors)

    @property
    def overlap(self) -> str:
        pair = (self.gamma, self.alpha0)
        if _same_pair(pair, GOOD_OVERLAP):
            return "good"
        if _same_pair(pair, POOR_OVERLAP):
            return "poor"
        return "custom"

    @property
    def cases(self) -> Tuple[str, ...]:
        return PS_MODELS if self.ps_model == "both" else (self.ps_model,)


def _same_pair(a: Tuple[float, float], b: Tuple[float, float]) -> bool:
    return all(math.isclose(x, y, rel_tol=0.0, abs_tol=1e-12) for x, y in zip(a, b))


class Units(NamedTuple):
    x: np.ndarray  # (n, 7): X1..X7
    e: np.ndarray
    mu0: np.ndarray
    tau: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    a: np.ndarray
    y: np.ndarray


class Unit(NamedTuple):
    x: Tuple[float, ...]
    e: float
    y0: float
    y1: float
    a: int
    y: float


def draw_covariates(rng: np.random.Generator, n: int) -> np.ndarray:
    x1 = rng.binomial(1, 0.5, size=n).astype(float)
    x2 = rng.binomial(1, 0.4 + 0.2 * x1).astype(float)
    mean = np.column_stack([x1 - 0.25 * x2 + x1 * x2, -0.25 * x1 + x2 + x1 * x2])
    z = rng.standard_normal((n, 2))
    noise = np.where(x2[:, None] == 1.0, z @ _CHOL_X2_1.T, z @ _CHOL_X2_0.T)
    x34 = mean + noise
    x3, x4 = x34[:, 0], x34[:, 1]
    return np.column_stack([x1, x2, x3, x4, x3 * x3, x3 * x4, x4 * x4])


def true_ps(x: np.ndarray, gamma: float, alpha0: float) -> np.ndarray:
    lin = -0.4 * (x[:, 0] + x[:, 1] + x[:, 2] + x[:, 3]) - 0.1 * x[:, 4] + 0.1 * (x[:, 5] + x[:, 6])
    return expit(gamma * lin - alpha0)


def control_mean(x: np.ndarray) -> np.ndarray:
    """Noiseless E[Y(0) | X]."""
    return (
        0.5
        - 1.2 * x[:, 0]
        + 2.2 * x[:, 1]
        + x[:, 2]
        + 0.6 * x[:, 3]
        + x[:, 4]
        + 2.0 * x[:, 5]
        + x[:, 6]
    )


def cate(x: np.ndarray) -> np.ndarray:
    """tau(X) = E[Y(1) - Y(0) | X]."""
    return 4.0 + x[:, 1] * x[:, 2] + 3.0 * x[:, 4] + 6.0 * x[:, 5] + 3.0 * x[:, 6]


def draw_units(rng: np.random.Generator, n: int, gamma: float, alpha0: float) -> Units:
    x = draw_covariates(rng, n)
    e = true_ps(x, gamma, alpha0)
    mu0 = control_mean(x)
    tau = cate(x)
    y0 = mu0 + rng.normal(0.0, NOISE_SD, size=n)
    y1 = y0 + tau
    a = (rng.random(n) < e).astype(np.int8)
    y = np.where(a == 1, y1, y0)
    return Units(x, e, mu0, tau, y0, y1, a, y)


def gen_unit(rng: np.random.Generator, gamma: float, alpha0: float) -> Unit:
    u = draw_units(rng, 1, gamma, alpha0)
    return Unit(
        x=tuple(float(v) for v in u.x[0]),
        e=float(u.e[0]),
        y0=float(u.y0[0]),
        y1=float(u.y1[0]),
        a=int(u.a[0]),
        y=float(u.y[0]),
    )


def stream_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def units_to_dataset(units: Units, covariates: Sequence[str] = COVARIATE_NAMES) -> Dataset:
    cols = [COVARIATE_NAMES.index(c) for c in covariates]
    return Dataset(
        treatment=units.a,
        outcome=units.y,
        covariates=units.x[:, cols],
        covariate_names=tuple(covariates),
    )


def simulate_dataset(config: DGPConfig, replicate: int = 0) -> Dataset:
    """The observed sample of one Monte Carlo replicate, with all seven covariates."""
    units = draw_units(stream_rng(config.seed, 1, replicate), config.N, config.gamma, config.alpha0)
    return units_to_dataset(units)


def extreme_ps_fraction(
    gamma: float, alpha0: float, n: int = 200_000, seed: int = 0, alpha: float = 0.05
) -> float:
    """Fraction of true PS outside [alpha, 1 - alpha] in a fresh population draw."""
    e = true_ps(draw_covariates(stream_rng(seed, 3), n), gamma, alpha0)
    return float(np.mean((e < alpha) | (e > 1.0 - alpha)))


def treated_fraction(gamma: float, alpha0: float, n: int = 1_000_000, seed: int = 0) -> float:
    """Realised P(A=1) of the DGP, estimated as the mean true PS of a population draw."""
    e = true_ps(draw_covariates(stream_rng(seed, 4), n), gamma, alpha0)
    return float(np.mean(e))


# ---------------------------------------------------------------------------
# Super-population truth
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruthDetail:
    value: float
    se: float  # batch-means Monte Carlo standard error
    super_n: int
    batches: int


def _truth_sums(scheme: WeightScheme, e: np.ndarray, mu0: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """Numerator/denominator sums (n1, d1, n0, d0) whose ratio difference is the estimand."""
    t = np.asarray(tilt(scheme, e), dtype=float)
    if scheme.estimand_class == "WATE":
        return np.array([np.sum(t * tau), np.sum(t), 0.0, 1.0])
    mu1 = mu0 + tau
    if scheme.estimand_class == "WATT":
        w0 = t * e
        return np.array([np.sum(e * mu1), np.sum(e), np.sum(w0 * mu0), np.sum(w0)])
    w1 = t * (1.0 - e)
    return np.array([np.sum(w1 * mu1), np.sum(w1), np.sum((1.0 - e) * mu0), np.sum(1.0 - e)])


def _ratio_difference(sums: np.ndarray, scheme: WeightScheme) -> float:
    n1, d1, n0, d0 = sums
    if d1 <= 0.0 or d0 <= 0.0:
        raise SimulationError(
            f"truth undefined for {scheme.estimand_class} {scheme.label}: all tilting mass is zero"
        )
    return float(n1 / d1 - n0 / d0)


def compute_truths(
    schemes: Sequence[WeightScheme],
    super_n: int = DEFAULT_SUPER_N,
    config: Optional[DGPConfig] = None,
    seed: Optional[int] = None,
) -> List[TruthDetail]:
    """Super-population values of every scheme from one shared population draw."""
    config = config or DGPConfig()
    seed = config.seed if seed is None else seed
    if super_n < MIN_SUPER_N:
        raise DGPConfigError(f"super_n must be >= {MIN_SUPER_N} (got {super_n})")

    totals = np.zeros((len(schemes), 4))
    batch_values: List[List[float]] = [[] for _ in schemes]
    chunk, drawn = 0, 0
    while drawn < super_n:
        n = min(TRUTH_CHUNK, super_n - drawn)
        x = draw_covariates(stream_rng(seed, 0, chunk), n)
        e = true_ps(x, config.gamma, config.alpha0)
        mu0, tau = control_mean(x), cate(x)
        for j, s in enumerate(schemes):
            sums = _truth_sums(s, e, mu0, tau)
            totals[j] += sums
            if n == TRUTH_CHUNK and sums[1] > 0.0 and sums[3] > 0.0:
                batch_values[j].append(_ratio_difference(sums, s))
        drawn += n
        chunk += 1

    out = []
    for j, s in enumerate(schemes):
        value = _ratio_difference(totals[j], s)
        batches = batch_values[j]
        se = float(np.std(batches, ddof=1) / math.sqrt(len(batches))) if len(batches) > 1 else math.nan
        out.append(TruthDetail(value=value, se=se, super_n=super_n, batches=len(batches)))
    logger.info(
        "Computed %d super-population truths (superN=%d, overlap=%s)",
        len(schemes),
        super_n,
        config.overlap,
    )
    return out


def compute_truth_detail(
    scheme: WeightScheme,
    super_n: int = DEFAULT_SUPER_N,
    config: Optional[DGPConfig] = None,
    seed: Optional[int] = None,
) -> TruthDetail:
    return compute_truths([scheme], super_n, config, seed)[0]


def compute_truth(
    scheme: WeightScheme,
    super_n: int = DEFAULT_SUPER_N,
    config: Optional[DGPConfig] = None,
    seed: Optional[int] = None,
) -> float:
    return compute_truth_detail(scheme, super_n, config, seed).value


# ---------------------------------------------------------------------------
# Catalog / coverage band
# ---------------------------------------------------------------------------


def simulation_catalog(classes: Sequence[str] = ESTIMAND_CLASSES) -> List[WeightScheme]:
    """Comparison set: conventional, OW/EW/MW, BW(3, 10), trimming and truncation at 0.05/0.1/0.15."""
    schemes: List[WeightScheme] = []
    for cls in classes:
        schemes += default_catalog(
            cls, trim_alphas=STUDY_ALPHAS, trunc_alphas=STUDY_ALPHAS, beta_nus=STUDY_BETA_NUS
        )
    return schemes


def cp_band(M: int, nominal: float = 0.95, z: float = CP_Z) -> Tuple[float, float]:
    half = z * math.sqrt(nominal * (1.0 - nominal) / M)
    return nominal - half, nominal + half


def cp_band_display(M: int, nominal: float = 0.95, z: float = CP_Z) -> Tuple[float, float]:
    """Band as conventionally printed: half-width to 4 decimals, endpoints to 3 (half-up)."""
    half = Decimal(str(round(z * math.sqrt(nominal * (1.0 - nominal) / M), 4)))
    centre = Decimal(str(nominal))
    q = Decimal("0.001")
    lo = (centre - half).quantize(q, rounding=ROUND_HALF_UP)
    hi = (centre + half).quantize(q, rounding=ROUND_HALF_UP)
    return float(lo), float(hi)


def rbias_percent(estimate: float, truth: float) -> Optional[float]:
    if truth == 0.0:
        return None
    return abs(100.0 * (estimate - truth) / truth)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplicateRecord:
    case: str
    scheme: WeightScheme
    replicate: int
    estimate: Optional[float]
    ci_lower: Optional[float]
    ci_upper: Optional[float]
    covered: Optional[bool]
    rbias: Optional[float]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SchemeSummary:
    case: str
    scheme: WeightScheme
    truth: float
    truth_se: float
    n_ok: int
    n_failed: int
    coverage: Optional[float]
    rbias_median: Optional[float]
    rbias_q1: Optional[float]
    rbias_q3: Optional[float]
    rbias_mean: Optional[float]
    mean_estimate: Optional[float]
    sd_estimate: Optional[float]
    mean_ci_width: Optional[float]
    cp_in_band: Optional[bool]

    @property
    def rbias_iqr(self) -> Optional[float]:
        if self.rbias_q1 is None or self.rbias_q3 is None:
            return None
        return self.rbias_q3 - self.rbias_q1


@dataclass(frozen=True)
class SimResult:
    config: DGPConfig
    M: int
    B: int
    ci_method: str
    conf_level: float
    super_n: int
    summaries: Tuple[SchemeSummary, ...]
    replicates: Tuple[ReplicateRecord, ...]
    treated_fraction: float
    cp_band: Tuple[float, float]
    cp_band_display: Tuple[float, float]
    extra: Dict[str, Any] = field(default_factory=dict)

    def summary(self, label: str, estimand_class: str = "WATE", case: Optional[str] = None) -> SchemeSummary:
        case = case or self.config.cases[0]
        for s in self.summaries:
            if s.case == case and s.scheme.estimand_class == estimand_class and s.scheme.label == label:
                return s
        raise KeyError(f"no summary for {estimand_class} '{label}' ({case})")


def summarize(
    case: str,
    scheme: WeightScheme,
    truth: TruthDetail,
    records: Sequence[ReplicateRecord],
    band: Tuple[float, float],
) -> SchemeSummary:
    ok = [r for r in records if r.ok]
    est = np.array([r.estimate for r in ok], dtype=float)
    rb = np.array([r.rbias for r in ok if r.rbias is not None], dtype=float)
    covered = [r.covered for r in ok if r.covered is not None]
    widths = [r.ci_upper - r.ci_lower for r in ok if r.ci_upper is not None and r.ci_lower is not None]

    coverage = float(np.mean(covered)) if covered else None
    q1, med, q3 = (float(v) for v in np.quantile(rb, [0.25, 0.5, 0.75])) if rb.size else (None,) * 3
    return SchemeSummary(
        case=case,
        scheme=scheme,
        truth=truth.value,
        truth_se=truth.se,
        n_ok=len(ok),
        n_failed=len(records) - len(ok),
        coverage=coverage,
        rbias_median=med,
        rbias_q1=q1,
        rbias_q3=q3,
        rbias_mean=float(rb.mean()) if rb.size else None,
        mean_estimate=float(est.mean()) if est.size else None,
        sd_estimate=float(est.std(ddof=1)) if est.size > 1 else None,
        mean_ci_width=float(np.mean(widths)) if widths else None,
        cp_in_band=None if coverage is None else band[0] <= coverage <= band[1],
    )


def _fit_case(units: Units, case: str, fit: PSFitConfig) -> np.ndarray:
    cols = [COVARIATE_NAMES.index(c) for c in PS_MODEL_COVARIATES[case]]
    return fit_logistic_arrays(
        units.x[:, cols],
        units.a,
        tol=fit.tol,
        max_iter=fit.max_iter,
        clamp_lo=fit.clamp_lo,
        clamp_hi=fit.clamp_hi,
    ).fitted_ps


def _failed(case: str, scheme: WeightScheme, m: int, msg: str) -> ReplicateRecord:
    return ReplicateRecord(case, scheme, m, None, None, None, None, None, msg)


def run_replicate(
    m: int,
    config: DGPConfig,
    schemes: Sequence[WeightScheme],
    truths: Sequence[TruthDetail],
    boot: BootstrapConfig,
) -> Tuple[List[ReplicateRecord], float]:
    """Estimate and bootstrap every scheme under each PS-model case on replicate m."""
    units = draw_units(stream_rng(config.seed, 1, m), config.N, config.gamma, config.alpha0)
    specs = [EstimandSpec(s) for s in schemes]
    records: List[ReplicateRecord] = []

    for case in config.cases:
        d = units_to_dataset(units, PS_MODEL_COVARIATES[case])
        try:
            ps = _fit_case(units, case, boot.fit)
        except PSModelError as exc:
            logger.warning("replicate %d (%s): PS fit failed: %s", m, case, exc)
            records += [_failed(case, s, m, str(exc)) for s in schemes]
            continue

        points: List[Optional[float]] = []
        for spec in specs:
            try:
                points.append(point_from_arrays(spec, ps, d.treatment, d.outcome).estimate)
            except EstimationError:
                points.append(None)

        try:
            rows = bootstrap_many(d, specs, boot, points)
        except PSWError as exc:
            records += [_failed(case, s, m, str(exc)) for s in schemes]
            continue

        for scheme, truth, row in zip(schemes, truths, rows):
            if row.effect is None:
                records.append(_failed(case, scheme, m, row.error or "bootstrap failed"))
                continue
            eff = row.effect
            records.append(
                ReplicateRecord(
                    case=case,
                    scheme=scheme,
                    replicate=m,
                    estimate=eff.point,
                    ci_lower=eff.ci_lower,
                    ci_upper=eff.ci_upper,
                    covered=eff.ci_lower <= truth.value <= eff.ci_upper,
                    rbias=rbias_percent(eff.point, truth.value),
                )
            )
    return records, float(np.mean(units.a))


def run_monte_carlo(
    M: int,
    N: int,
    B: int,
    schemes: Sequence[WeightScheme],
    config: Optional[DGPConfig] = None,
    seed: Optional[int] = None,
    ci_method: str = "normal",
    conf_level: float = 0.95,
    super_n: int = DEFAULT_SUPER_N,
    threads: int = 1,
    truths: Optional[Sequence[TruthDetail]] = None,
) -> SimResult:
    """Run M replicates of size N with B bootstrap draws each and aggregate RBias% and CP.

    `N` and `seed` override the values held in `config`. Precomputed `truths`
    (aligned with `schemes`) skip the super-population oracle.
    """
    if M < 1:
        raise DGPConfigError(f"M must be >= 1 (got {M})")
    if not schemes:
        raise DGPConfigError("at least one scheme is required")
    base = config or DGPConfig()
    config = DGPConfig(
        gamma=base.gamma,
        alpha0=base.alpha0,
        N=N,
        seed=base.seed if seed is None else seed,
        ps_model=base.ps_model,
    )
    if truths is None:
        truths = compute_truths(schemes, super_n, config)
    elif len(truths) != len(schemes):
        raise DGPConfigError("truths must align with schemes")

    logger.info(
        "Monte Carlo: M=%d N=%d B=%d, %d schemes, overlap=%s, cases=%s",
        M,
        N,
        B,
        len(schemes),
        config.overlap,
        ",".join(config.cases),
    )
    records: List[ReplicateRecord] = []
    fractions: List[float] = []
    progress_step = max(1, M // 10)
    for m in range(M):
        boot = BootstrapConfig(
            B=B,
            seed=config.seed,
            ci_method=ci_method,
            conf_level=conf_level,
            threads=threads,
            stream=(2, m),
        )
        recs, frac = run_replicate(m, config, schemes, truths, boot)
        records += recs
        fractions.append(frac)
        if (m + 1) % progress_step == 0 or m + 1 == M:
            logger.info("Monte Carlo progress: %d/%d replicates", m + 1, M)

    n_failed = sum(1 for r in records if not r.ok)
    if n_failed:
        logger.warning("%d scheme-replicate estimates failed and were excluded", n_failed)

    band = cp_band(M, conf_level)
    grouped: Dict[Tuple[str, WeightScheme], List[ReplicateRecord]] = {}
    for r in records:
        grouped.setdefault((r.case, r.scheme), []).append(r)
    summaries = [
        summarize(case, scheme, truth, grouped.get((case, scheme), []), band)
        for case in config.cases
        for scheme, truth in zip(schemes, truths)
    ]

    return SimResult(
        config=config,
        M=M,
        B=B,
        ci_method=ci_method,
        conf_level=conf_level,
        super_n=super_n,
        summaries=tuple(summaries),
        replicates=tuple(records),
        treated_fraction=float(np.mean(fractions)),
        cp_band=band,
        cp_band_display=cp_band_display(M, conf_level),
    )


# ---------------------------------------------------------------------------
# Exports
# ---------------------------------------------------------------------------

SUMMARY_METRICS = (
    "truth",
    "truth_se",
    "coverage",
    "cp_in_band",
    "rbias_median",
    "rbias_q1",
    "rbias_q3",
    "rbias_mean",
    "mean_estimate",
    "sd_estimate",
    "mean_ci_width",
    "n_ok",
    "n_failed",
)
LONG_COLUMNS = ["case", "class", "scheme", "estimand", "metric", "value"]
REPLICATE_COLUMNS = [
    "case",
    "class",
    "scheme",
    "estimand",
    "replicate",
    "estimate",
    "ci_lower",
    "ci_upper",
    "covered",
    "rbias",
    "error",
]
HEATMAP_COLUMNS = ["case", "class", "scheme", "estimand", "coverage", "cp_in_band", "rbias_median"]


def _ids(case: str, s: WeightScheme) -> Dict[str, Any]:
    return {"case": case, "class": s.estimand_class, "scheme": s.label, "estimand": s.estimand}


def _metric_value(summary: SchemeSummary, metric: str) -> Any:
    value = getattr(summary, metric)
    return int(value) if isinstance(value, bool) else value


def long_records(result: SimResult) -> List[Dict[str, Any]]:
    return [
        {**_ids(s.case, s.scheme), "metric": metric, "value": _metric_value(s, metric)}
        for s in result.summaries
        for metric in SUMMARY_METRICS
    ]


def replicate_records(result: SimResult) -> List[Dict[str, Any]]:
    """Per-replicate rows (violin-plot layout)."""
    return [
        {
            **_ids(r.case, r.scheme),
            "replicate": r.replicate,
            "estimate": r.estimate,
            "ci_lower": r.ci_lower,
            "ci_upper": r.ci_upper,
            "covered": None if r.covered is None else int(r.covered),
            "rbias": r.rbias,
            "error": r.error or "",
        }
        for r in result.replicates
    ]


def heatmap_records(result: SimResult) -> List[Dict[str, Any]]:
    """One row per scheme x case (coverage heatmap layout)."""
    return [
        {
            **_ids(s.case, s.scheme),
            "coverage": s.coverage,
            "cp_in_band": None if s.cp_in_band is None else int(s.cp_in_band),
            "rbias_median": s.rbias_median,
        }
        for s in result.summaries
    ]


def result_metadata(result: SimResult) -> Dict[str, Any]:
    c = result.config
    return {
        "gamma": c.gamma,
        "alpha0": c.alpha0,
        "overlap": c.overlap,
        "N": c.N,
        "M": result.M,
        "B": result.B,
        "seed": c.seed,
        "ps_model": c.ps_model,
        "cases": list(c.cases),
        "ci_method": result.ci_method,
        "conf_level": result.conf_level,
        "super_n": result.super_n,
        "treated_fraction": result.treated_fraction,
        "cp_band": list(result.cp_band),
        "cp_band_display": list(result.cp_band_display),
        **result.extra,
    }


def result_to_dict(result: SimResult) -> Dict[str, Any]:
    return {
        "metadata": result_metadata(result),
        "summaries": [
            {
                **_ids(s.case, s.scheme),
                "token": s.scheme.token,
                **{metric: getattr(s, metric) for metric in SUMMARY_METRICS},
            }
            for s in result.summaries
        ],
    }
