"""Observed sample (treatment, outcome, covariates) with CSV ingestion and validation."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import UserInputError
from src.results_io import atomic_write_text

logger = logging.getLogger(__name__)

OUTCOME_KINDS = ("continuous", "binary")
MISSING_TOKENS = frozenset({"", "NA", "N/A", "NaN", "nan", "NULL", "null", "None"})


class DatasetValidationError(UserInputError):
    pass


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def find_violations(
    treatment: np.ndarray,
    outcome: np.ndarray,
    covariates: np.ndarray,
    covariate_names: Sequence[str],
    outcome_kind: str = "continuous",
    provided_ps: Optional[np.ndarray] = None,
    unit_ids: Optional[Sequence[str]] = None,
) -> List[str]:
    """Return every invariant violation (empty = valid). Row indices are 0-based."""
    errors: List[str] = []

    a = np.asarray(treatment, dtype=float)
    y = np.asarray(outcome, dtype=float)
    x = np.asarray(covariates, dtype=float)

    if a.ndim != 1 or y.ndim != 1:
        errors.append("treatment and outcome must be 1-D vectors")
        return errors
    if x.ndim != 2:
        errors.append("covariates must be a 2-D matrix (N x p)")
        return errors

    n = a.shape[0]
    if n < 2:
        errors.append(f"N must be at least 2 (got {n})")
    if y.shape[0] != n:
        errors.append(f"length mismatch: outcome has {y.shape[0]} rows, treatment has {n}")
    if x.shape[0] != n:
        errors.append(f"length mismatch: covariates have {x.shape[0]} rows, treatment has {n}")
    if len(covariate_names) != x.shape[1]:
        errors.append(
            f"covariate_names has {len(covariate_names)} names for {x.shape[1]} columns"
        )
    seen = set()
    for name in covariate_names:
        if not name:
            errors.append("covariate names must be non-empty")
        elif name in seen:
            errors.append(f"duplicate covariate name '{name}'")
        seen.add(name)
    if outcome_kind not in OUTCOME_KINDS:
        errors.append(f"outcome_kind must be one of {OUTCOME_KINDS} (got '{outcome_kind}')")
    if provided_ps is not None and np.asarray(provided_ps).shape != (n,):
        errors.append(f"provided_ps must have length {n}")
        provided_ps = None
    if unit_ids is not None and len(unit_ids) != n:
        errors.append(f"unit_ids must have length {n}")
    if errors:
        return errors

    for i in np.flatnonzero(~np.isin(a, (0.0, 1.0))):
        errors.append(f"row {i}: treatment not in {{0,1}} (value {a[i]!r})")
    valid_a = a[np.isin(a, (0.0, 1.0))]
    if n >= 1 and not np.any(valid_a == 1.0):
        errors.append("no treated units (A=1)")
    if n >= 1 and not np.any(valid_a == 0.0):
        errors.append("no control units (A=0)")

    for i in np.flatnonzero(~np.isfinite(y)):
        errors.append(f"row {i}: outcome is not finite (value {y[i]!r})")
    if outcome_kind == "binary":
        bad = np.isfinite(y) & ~np.isin(y, (0.0, 1.0))
        for i in np.flatnonzero(bad):
            errors.append(f"row {i}: binary outcome not in {{0,1}} (value {y[i]!r})")

    rows, cols = np.nonzero(~np.isfinite(x))
    for i, j in zip(rows, cols):
        errors.append(f"row {i}: covariate '{covariate_names[j]}' is not finite")

    if provided_ps is not None:
        ps = np.asarray(provided_ps, dtype=float)
        bad = ~(np.isfinite(ps) & (ps > 0.0) & (ps < 1.0))
        for i in np.flatnonzero(bad):
            errors.append(
                f"row {i}: provided PS must be in open interval (0,1) (value {ps[i]!r})"
            )

    return errors


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------


def _frozen(values: np.ndarray, dtype: type) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable observed sample O = {(A_i, X_i, Y_i)}.

    Construction validates every invariant and raises DatasetValidationError
    listing all violations at once.
    """

    treatment: np.ndarray
    outcome: np.ndarray
    covariates: np.ndarray
    covariate_names: Tuple[str, ...]
    outcome_kind: str = "continuous"
    provided_ps: Optional[np.ndarray] = None
    unit_ids: Optional[Tuple[str, ...]] = None
    treatment_name: str = "A"
    outcome_name: str = "Y"
    ps_name: str = "ps"
    id_name: str = "id"

    def __post_init__(self) -> None:
        x = np.asarray(self.covariates, dtype=float)
        if x.ndim == 1 and len(self.covariate_names) == 0:
            x = x.reshape(-1, 0)
        object.__setattr__(self, "covariate_names", tuple(self.covariate_names))
        errors = find_violations(
            self.treatment,
            self.outcome,
            x,
            self.covariate_names,
            self.outcome_kind,
            self.provided_ps,
            self.unit_ids,
        )
        if errors:
            msg = "dataset validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
            raise DatasetValidationError(msg, details=errors)

        object.__setattr__(self, "treatment", _frozen(self.treatment, np.int8))
        object.__setattr__(self, "outcome", _frozen(self.outcome, float))
        object.__setattr__(self, "covariates", _frozen(x, float))
        if self.provided_ps is not None:
            object.__setattr__(self, "provided_ps", _frozen(self.provided_ps, float))
        if self.unit_ids is not None:
            object.__setattr__(self, "unit_ids", tuple(str(u) for u in self.unit_ids))

    @property
    def n(self) -> int:
        return int(self.treatment.shape[0])

    @property
    def p(self) -> int:
        return int(self.covariates.shape[1])

    @property
    def n_treated(self) -> int:
        return int(np.sum(self.treatment == 1))

    @property
    def n_control(self) -> int:
        return int(np.sum(self.treatment == 0))

    def covariate(self, name: str) -> np.ndarray:
        try:
            j = self.covariate_names.index(name)
        except ValueError as exc:
            raise DatasetValidationError(f"unknown covariate '{name}'") from exc
        return self.covariates[:, j]

    def select_covariates(self, names: Sequence[str]) -> "Dataset":
        """Return a copy restricted to the given covariate columns (in that order)."""
        cols = [self.covariate_names.index(n) for n in names if n in self.covariate_names]
        unknown = [n for n in names if n not in self.covariate_names]
        if unknown:
            raise DatasetValidationError(f"unknown covariates: {unknown}")
        return Dataset(
            treatment=self.treatment,
            outcome=self.outcome,
            covariates=self.covariates[:, cols],
            covariate_names=tuple(names),
            outcome_kind=self.outcome_kind,
            provided_ps=self.provided_ps,
            unit_ids=self.unit_ids,
            treatment_name=self.treatment_name,
            outcome_name=self.outcome_name,
            ps_name=self.ps_name,
            id_name=self.id_name,
        )


def validate(d: Dataset) -> List[str]:
    """Re-check a Dataset; always empty for a constructed one."""
    return find_violations(
        d.treatment,
        d.outcome,
        d.covariates,
        d.covariate_names,
        d.outcome_kind,
        d.provided_ps,
        d.unit_ids,
    )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnMapping:
    treatment: str
    outcome: str
    covariates: Tuple[str, ...] = ()
    ps: Optional[str] = None
    unit_id: Optional[str] = None
    outcome_kind: str = "continuous"


def _parse_numeric_column(raw: pd.Series, column: str, errors: List[str]) -> np.ndarray:
    stripped = raw.astype(str).str.strip()
    missing = stripped.isin(MISSING_TOKENS)
    parsed = pd.to_numeric(stripped.where(~missing), errors="coerce")
    non_numeric = parsed.isna() & ~missing
    for i in np.flatnonzero(missing.to_numpy()):
        errors.append(f"row {i}: missing value in column '{column}'")
    for i in np.flatnonzero(non_numeric.to_numpy()):
        errors.append(f"row {i}: non-numeric value '{stripped.iloc[i]}' in column '{column}'")
    return parsed.to_numpy(dtype=float)


def load_csv(path: str, mapping: ColumnMapping) -> Dataset:
    """Read a header-row, comma-delimited CSV into a validated Dataset."""
    if not os.path.exists(path):
        raise DatasetValidationError(f"input file not found: {path}")

    frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    frame.columns = [str(c).strip() for c in frame.columns]

    errors: List[str] = []
    wanted = [mapping.treatment, mapping.outcome, *mapping.covariates]
    if mapping.ps:
        wanted.append(mapping.ps)
    if mapping.unit_id:
        wanted.append(mapping.unit_id)
    for column in wanted:
        if column not in frame.columns:
            errors.append(f"missing column '{column}'")
    if errors:
        raise DatasetValidationError(
            f"{path}: " + "; ".join(errors), details=errors
        )

    treatment = _parse_numeric_column(frame[mapping.treatment], mapping.treatment, errors)
    outcome = _parse_numeric_column(frame[mapping.outcome], mapping.outcome, errors)
    columns = [_parse_numeric_column(frame[c], c, errors) for c in mapping.covariates]
    ps = _parse_numeric_column(frame[mapping.ps], mapping.ps, errors) if mapping.ps else None
    if errors:
        msg = f"{path}: CSV parsing failed:\n" + "\n".join(f"  - {e}" for e in errors)
        raise DatasetValidationError(msg, details=errors)

    covariates = (
        np.column_stack(columns) if columns else np.empty((len(frame), 0), dtype=float)
    )
    ids = tuple(frame[mapping.unit_id].astype(str)) if mapping.unit_id else None

    d = Dataset(
        treatment=treatment,
        outcome=outcome,
        covariates=covariates,
        covariate_names=tuple(mapping.covariates),
        outcome_kind=mapping.outcome_kind,
        provided_ps=ps,
        unit_ids=ids,
        treatment_name=mapping.treatment,
        outcome_name=mapping.outcome,
        ps_name=mapping.ps or "ps",
        id_name=mapping.unit_id or "id",
    )
    logger.info(
        "Loaded %s: N=%d (treated=%d, control=%d), p=%d",
        path,
        d.n,
        d.n_treated,
        d.n_control,
        d.p,
    )
    return d


def write_csv(d: Dataset, path: str) -> ColumnMapping:
    """Write a Dataset to CSV losslessly and return the mapping that reloads it."""
    data = {}
    if d.unit_ids is not None:
        data[d.id_name] = list(d.unit_ids)
    data[d.treatment_name] = d.treatment.astype(int)
    data[d.outcome_name] = d.outcome
    for j, name in enumerate(d.covariate_names):
        data[name] = d.covariates[:, j]
    if d.provided_ps is not None:
        data[d.ps_name] = d.provided_ps
    frame = pd.DataFrame(data)
    atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))
    return ColumnMapping(
        treatment=d.treatment_name,
        outcome=d.outcome_name,
        covariates=d.covariate_names,
        ps=d.ps_name if d.provided_ps is not None else None,
        unit_id=d.id_name if d.unit_ids is not None else None,
        outcome_kind=d.outcome_kind,
    )
