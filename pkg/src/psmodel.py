"""Propensity-score model: logistic regression by IRLS, or user-supplied scores.

The IRLS loop works on an internally standardised design (each covariate centred
and scaled); coefficients are mapped back to the original covariate scale before
they are returned, so fitted scores are invariant to affine rescaling.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import expit, log_expit

from src.dataset import Dataset
from src.errors import ComputationError, UserInputError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100
MAX_STEP_HALVINGS = 20
CLAMP_LO = 1e-6
CLAMP_HI = 1.0 - 1e-6
DIVERGENCE_BOUND = 1e3
PERFECT_FIT_RESIDUAL = 1e-5


class PSModelError(ComputationError):
    pass


class CollinearCovariatesError(PSModelError):
    pass


class SeparationError(PSModelError):
    pass


class PSSourceError(UserInputError):
    pass


@dataclass(frozen=True)
class PSFitConfig:
    """Settings for refitting the PS model (full sample and bootstrap replicates)."""

    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    clamp_lo: float = CLAMP_LO
    clamp_hi: float = CLAMP_HI


@dataclass(frozen=True, eq=False)
class PSFit:
    coefficients: np.ndarray  # intercept first, original covariate scale
    fitted_ps: np.ndarray
    converged: bool
    iterations: int
    max_abs_score: float
    clamped_count: int
    covariate_names: Tuple[str, ...] = ()
    log_likelihood_path: Tuple[float, ...] = ()


class ResolvedPS(NamedTuple):
    values: np.ndarray
    source: str  # fitted|provided
    clamped_count: int


# ---------------------------------------------------------------------------
# IRLS
# ---------------------------------------------------------------------------


def _log_likelihood(eta: np.ndarray, a: np.ndarray) -> float:
    # log P(A=1) = log_expit(eta), log P(A=0) = log_expit(-eta)
    return float(np.sum(a * log_expit(eta) + (1.0 - a) * log_expit(-eta)))


def _standardise(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    center = x.mean(axis=0) if x.shape[1] else np.zeros(0)
    scale = x.std(axis=0) if x.shape[1] else np.ones(0)
    scale = np.where(scale > 0.0, scale, 1.0)
    z = np.column_stack([np.ones(x.shape[0]), (x - center) / scale])
    return z, center, scale


def clamp_ps(ps: np.ndarray, lo: float = CLAMP_LO, hi: float = CLAMP_HI) -> Tuple[np.ndarray, int]:
    ps = np.asarray(ps, dtype=float)
    clamped = int(np.sum((ps < lo) | (ps > hi)))
    return np.clip(ps, lo, hi), clamped


def fit_logistic_arrays(
    x: np.ndarray,
    a: np.ndarray,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    clamp_lo: float = CLAMP_LO,
    clamp_hi: float = CLAMP_HI,
    covariate_names: Tuple[str, ...] = (),
) -> PSFit:
    """Bernoulli maximum likelihood by Newton/IRLS with step-halving.

    Re-entrant: no shared state, safe to call from concurrent bootstrap workers.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    n, p = x.shape

    if n <= p + 1:
        raise CollinearCovariatesError(
            f"collinear covariates: need N > p+1 (N={n}, p={p})"
        )
    design = np.column_stack([np.ones(n), x])
    if np.linalg.matrix_rank(design) < p + 1:
        raise CollinearCovariatesError(
            "collinear covariates: design with intercept is not of full column rank"
        )

    z, center, scale = _standardise(x)
    beta = np.zeros(p + 1)
    eta = z @ beta
    loglik = _log_likelihood(eta, a)
    path = [loglik]
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        mu = expit(eta)
        score_std = z.T @ (a - mu)
        if np.max(np.abs(design.T @ (a - mu))) <= tol:
            converged = True
            iterations -= 1
            break

        w = mu * (1.0 - mu)
        hessian = z.T @ (w[:, None] * z)
        try:
            step = np.linalg.solve(hessian, score_std)
        except np.linalg.LinAlgError as exc:
            raise SeparationError(
                "possible complete separation: information matrix became singular"
            ) from exc
        if not np.all(np.isfinite(step)):
            raise SeparationError("possible complete separation: non-finite Newton step")

        t = 1.0
        candidate = beta + step
        cand_eta = z @ candidate
        cand_loglik = _log_likelihood(cand_eta, a)
        halvings = 0
        while cand_loglik < loglik and halvings < MAX_STEP_HALVINGS:
            t *= 0.5
            halvings += 1
            candidate = beta + t * step
            cand_eta = z @ candidate
            cand_loglik = _log_likelihood(cand_eta, a)
        if cand_loglik < loglik:
            logger.debug("IRLS iteration %d: no ascent after %d halvings", iterations, halvings)
            break

        beta, eta, loglik = candidate, cand_eta, cand_loglik
        path.append(loglik)
        logger.debug(
            "IRLS iteration %d: loglik=%.10g halvings=%d |beta|=%.4g",
            iterations,
            loglik,
            halvings,
            float(np.max(np.abs(beta))),
        )
        if np.max(np.abs(beta)) > DIVERGENCE_BOUND:
            raise SeparationError(
                f"possible complete separation: coefficients diverging (|beta| > {DIVERGENCE_BOUND:g})"
            )

    mu = expit(eta)
    max_abs_score = float(np.max(np.abs(design.T @ (a - mu))))
    if max_abs_score <= tol:
        converged = True

    if np.max(np.abs(a - mu)) < PERFECT_FIT_RESIDUAL:
        raise SeparationError(
            "possible complete separation: fitted scores reproduce the treatment labels"
        )
    if not converged:
        logger.warning(
            "PS model did not converge after %d iterations (max |score| = %.3g)",
            iterations,
            max_abs_score,
        )

    # back to the original covariate scale
    slopes = beta[1:] / scale
    intercept = beta[0] - float(np.sum(slopes * center))
    coefficients = np.concatenate([[intercept], slopes])

    fitted, clamped = clamp_ps(mu, clamp_lo, clamp_hi)
    if clamped:
        logger.warning("%d fitted PS values clamped to [%g, %g]", clamped, clamp_lo, clamp_hi)
    return PSFit(
        coefficients=coefficients,
        fitted_ps=fitted,
        converged=converged,
        iterations=iterations,
        max_abs_score=max_abs_score,
        clamped_count=clamped,
        covariate_names=tuple(covariate_names),
        log_likelihood_path=tuple(path),
    )


def fit_logistic(
    d: Dataset,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    config: Optional[PSFitConfig] = None,
) -> PSFit:
    """Fit e(X) = expit(b0 + X b) on every covariate column of the dataset."""
    if config is not None:
        tol, max_iter = config.tol, config.max_iter
        lo, hi = config.clamp_lo, config.clamp_hi
    else:
        lo, hi = CLAMP_LO, CLAMP_HI
    fit = fit_logistic_arrays(
        d.covariates,
        d.treatment,
        tol=tol,
        max_iter=max_iter,
        clamp_lo=lo,
        clamp_hi=hi,
        covariate_names=d.covariate_names,
    )
    logger.info(
        "PS model: converged=%s after %d iterations (max |score| = %.3g, clamped=%d)",
        fit.converged,
        fit.iterations,
        fit.max_abs_score,
        fit.clamped_count,
    )
    return fit


def resolve_ps(
    d: Dataset,
    fit: Optional[PSFit] = None,
    clamp_lo: float = CLAMP_LO,
    clamp_hi: float = CLAMP_HI,
) -> ResolvedPS:
    """Pick the PS vector: exactly one of provided_ps or a fit must be available."""
    has_provided = d.provided_ps is not None
    if has_provided and fit is not None:
        raise PSSourceError("ambiguous PS source: dataset carries provided PS and a fit was given")
    if not has_provided and fit is None:
        raise PSSourceError("no PS source: neither provided PS nor a fitted model")
    if fit is not None:
        if fit.fitted_ps.shape != (d.n,):
            raise PSSourceError("fitted PS length does not match the dataset")
        return ResolvedPS(fit.fitted_ps, "fitted", fit.clamped_count)
    values, clamped = clamp_ps(d.provided_ps, clamp_lo, clamp_hi)  # type: ignore[arg-type]
    if clamped:
        logger.warning("%d provided PS values clamped to [%g, %g]", clamped, clamp_lo, clamp_hi)
    return ResolvedPS(values, "provided", clamped)
