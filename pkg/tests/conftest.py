"""Shared test fixtures for PS-weighting tests."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure project root is on sys.path
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))


# Twelve hand-checkable units: (A, Y, e)
TWELVE_UNITS = [
    (1, 3.0, 0.80),
    (1, 5.0, 0.60),
    (1, 2.0, 0.30),
    (1, 7.0, 0.55),
    (1, 4.0, 0.90),
    (1, 6.0, 0.25),
    (0, 1.0, 0.20),
    (0, 2.5, 0.45),
    (0, 0.5, 0.10),
    (0, 3.5, 0.70),
    (0, 1.5, 0.35),
    (0, 2.0, 0.65),
]


@pytest.fixture
def twelve_units():
    """Return (a, y, e) arrays of the twelve-unit oracle dataset."""
    a = np.array([u[0] for u in TWELVE_UNITS], dtype=np.int8)
    y = np.array([u[1] for u in TWELVE_UNITS], dtype=float)
    e = np.array([u[2] for u in TWELVE_UNITS], dtype=float)
    return a, y, e


@pytest.fixture
def twelve_dataset(twelve_units):
    """The twelve units as a Dataset with one covariate equal to the PS."""
    from src.dataset import Dataset

    a, y, e = twelve_units
    return Dataset(
        treatment=a,
        outcome=y,
        covariates=e.reshape(-1, 1),
        covariate_names=("X1",),
        provided_ps=e,
    )


def make_logistic_data(n=500, p=3, seed=0, outcome_kind="continuous"):
    """Random covariates, treatment from a known logistic model and an outcome."""
    from scipy.special import expit

    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    beta = np.linspace(0.8, -0.5, p)
    e = expit(-0.2 + x @ beta)
    a = (rng.random(n) < e).astype(np.int8)
    if outcome_kind == "binary":
        y = (rng.random(n) < expit(0.3 * a + x[:, 0] * 0.5)).astype(float)
    else:
        y = 1.0 + 2.0 * a + x @ np.ones(p) + rng.normal(size=n)
    return x, a, y


@pytest.fixture
def logistic_dataset():
    """N=500, p=3 Dataset drawn from a logistic PS model."""
    from src.dataset import Dataset

    x, a, y = make_logistic_data()
    return Dataset(
        treatment=a, outcome=y, covariates=x, covariate_names=("X1", "X2", "X3")
    )


@pytest.fixture
def write_dataset_csv(tmp_path):
    """Factory: write a Dataset-like table to tmp_path/<name> and return the path."""
    import pandas as pd

    def _write(columns, name="data.csv"):
        path = tmp_path / name
        pd.DataFrame(columns).to_csv(path, index=False, float_format="%.17g")
        return str(path)

    return _write


@pytest.fixture
def analysis_csv(write_dataset_csv):
    """CSV of a logistic dataset with columns id, A, Y, X1..X3."""
    x, a, y = make_logistic_data(n=300, seed=7)
    return write_dataset_csv(
        {
            "id": [f"u{i}" for i in range(len(a))],
            "A": a,
            "Y": y,
            "X1": x[:, 0],
            "X2": x[:, 1],
            "X3": x[:, 2],
        }
    )


@pytest.fixture
def binary_csv(write_dataset_csv):
    """CSV with a binary outcome column Y and covariates X1..X3."""
    x, a, y = make_logistic_data(n=300, seed=11, outcome_kind="binary")
    return write_dataset_csv(
        {"A": a, "Y": y.astype(int), "X1": x[:, 0], "X2": x[:, 1], "X3": x[:, 2]},
        name="binary.csv",
    )
