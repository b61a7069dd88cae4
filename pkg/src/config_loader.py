"""Load and validate the JSON config files of the analyze / diagnose / simulate workflows.

A config file is checked in two passes: structurally against its JSON schema in
`schemas/`, then semantically (scheme tokens parse, measures fit the outcome).
All messages of a pass are collected and raised together.
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

from jsonschema import Draft202012Validator

from src.errors import PSWError, UserInputError
from src.estimators import MEASURES, RATIO_MEASURES, default_catalog
from src.inference import DEFAULT_B, BootstrapConfig
from src.psmodel import DEFAULT_MAX_ITER, DEFAULT_TOL, PSFitConfig
from src.simulation import DEFAULT_SUPER_N, DGPConfig, simulation_catalog
from src.tilting import WeightScheme, parse_scheme, parse_schemes

logger = logging.getLogger(__name__)

SUPPORTED_SCHEMA_VERSIONS = {"1.0"}
SCHEMA_DIR = Path(__file__).resolve().parent.parent / "schemas"
ANALYZE_SCHEMA = SCHEMA_DIR / "analyze_config.schema.json"
SIMULATE_SCHEMA = SCHEMA_DIR / "simulate_config.schema.json"


class ConfigValidationError(UserInputError):
    pass


# ---------------------------------------------------------------------------
# Config types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SimulateConfig:
    schema_version: str = "1.0"
    gamma: float = 0.5
    alpha0: float = 0.407
    N: int = 2000
    M: int = 1000
    B: int = DEFAULT_B
    seed: int = 0
    ps_model: str = "correct"
    schemes: Union[str, Dict[str, List[str]]] = "default"
    super_n: int = DEFAULT_SUPER_N
    ci_method: str = "normal"
    alpha_level: float = 0.05
    threads: int = 1

    @property
    def conf_level(self) -> float:
        return 1.0 - self.alpha_level

    def dgp(self) -> DGPConfig:
        return DGPConfig(
            gamma=self.gamma, alpha0=self.alpha0, N=self.N, seed=self.seed, ps_model=self.ps_model
        )

    def scheme_list(self) -> List[WeightScheme]:
        if self.schemes == "default":
            return simulation_catalog()
        out: List[WeightScheme] = []
        for cls, tokens in self.schemes.items():  # type: ignore[union-attr]
            out += parse_schemes(tokens, cls.upper())
        return out


@dataclass(frozen=True)
class AnalyzeConfig:
    """Settings shared by `analyze` and `diagnose`; flag names map 1:1 to fields."""

    schema_version: str = "1.0"
    input: Optional[str] = None
    treatment_col: str = "A"
    outcome_col: str = "Y"
    covariate_cols: Tuple[str, ...] = ()
    ps_col: Optional[str] = None
    id_col: Optional[str] = None
    outcome_kind: str = "continuous"
    classes: Tuple[str, ...] = ("wate",)
    schemes: Tuple[str, ...] = ()
    trim_alpha: Tuple[float, ...] = ()
    trunc_alpha: Tuple[float, ...] = ()
    beta_nu: Tuple[float, ...] = ()
    smooth_trim: Tuple[str, ...] = ()
    tw_k: Tuple[float, ...] = ()
    measures: Tuple[str, ...] = ("RD",)
    boot: bool = False
    n_boot: int = DEFAULT_B
    seed: int = 0
    alpha_level: float = 0.05
    ci_method: str = "normal"
    threads: int = 1
    alpha_list: Tuple[float, ...] = ()
    bins: int = 30
    out: Optional[str] = None
    format: str = "csv"
    dump_replicates: Optional[str] = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    @property
    def conf_level(self) -> float:
        return 1.0 - self.alpha_level

    @property
    def fit_config(self) -> PSFitConfig:
        return PSFitConfig(tol=self.tol, max_iter=self.max_iter)

    def bootstrap_config(self) -> BootstrapConfig:
        return BootstrapConfig(
            B=self.n_boot,
            seed=self.seed,
            ci_method=self.ci_method,
            conf_level=self.conf_level,
            threads=self.threads,
            fit=self.fit_config,
        )

    def catalog(self, estimand_class: str) -> List[WeightScheme]:
        """Explicit `schemes` tokens if given, otherwise the default catalog plus variants."""
        cls = estimand_class.upper()
        if self.schemes:
            return parse_schemes(self.schemes, cls)
        return default_catalog(
            cls,
            trim_alphas=self.trim_alpha,
            trunc_alphas=self.trunc_alpha,
            beta_nus=self.beta_nu,
            smooth_trims=[_smooth_pair(v) for v in self.smooth_trim],
            tw_ks=self.tw_k if cls == "WATE" else (),
        )


def _smooth_pair(value: str) -> Tuple[float, Optional[float]]:
    s = parse_scheme(f"smoothtrim:{value}")
    return s.alpha, s.epsilon  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _load_schema(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def schema_errors(raw: Any, schema_path: Path) -> List[str]:
    """Structural errors from the JSON schema, sorted by location."""
    validator = Draft202012Validator(_load_schema(schema_path))
    errors = []
    for err in validator.iter_errors(raw):
        where = "/".join(str(p) for p in err.absolute_path) or "(root)"
        errors.append(f"{where}: {err.message}")
    return sorted(errors)


def _validate_simulate(cfg: SimulateConfig) -> List[str]:
    errors: List[str] = []
    if cfg.schema_version not in SUPPORTED_SCHEMA_VERSIONS:
        errors.append(f"Unsupported schema_version: {cfg.schema_version}")
    if cfg.M < 1:
        errors.append(f"M must be >= 1 (got {cfg.M})")
    if cfg.B < 2:
        errors.append(f"B must be >= 2 (got {cfg.B})")
    try:
        if not cfg.scheme_list():
            errors.append("schemes: no scheme selected")
    except PSWError as exc:
        errors.append(f"schemes: {exc}")
    try:
        cfg.dgp()
    except PSWError as exc:
        errors.extend(exc.details or [str(exc)])
    return errors


def validate_analyze_config(cfg: AnalyzeConfig, require_input: bool = True) -> List[str]:
    """Semantic checks on the merged (file + flags) analyze/diagnose settings."""
    errors: List[str] = []
    if cfg.schema_version not in SUPPORTED_SCHEMA_VERSIONS:
        errors.append(f"Unsupported schema_version: {cfg.schema_version}")
    if require_input and not cfg.input:
        errors.append("input: an input CSV path is required")
    if cfg.outcome_kind not in ("continuous", "binary"):
        errors.append(f"outcome_kind: unknown value '{cfg.outcome_kind}'")
    for m in cfg.measures:
        if m not in MEASURES:
            errors.append(f"measures: unknown measure '{m}'")
        elif m in RATIO_MEASURES and cfg.outcome_kind != "binary":
            errors.append(f"measures: {m} requires outcome_kind 'binary'")
    if cfg.ci_method == "lognormal" and any(m not in RATIO_MEASURES for m in cfg.measures):
        errors.append("ci_method: lognormal applies to RR/OR measures only")
    if cfg.format not in ("csv", "json"):
        errors.append(f"format: unknown value '{cfg.format}'")
    for cls in cfg.classes:
        if cls.upper() not in ("WATE", "WATT", "WATC"):
            errors.append(f"classes: unknown estimand class '{cls}'")
            continue
        try:
            cfg.catalog(cls)
        except PSWError as exc:
            errors.append(f"{cls.upper()}: {exc}")
    for a in cfg.alpha_list:
        if not 0.0 < a < 0.5:
            errors.append(f"alpha_list: {a:g} is outside (0, 0.5)")
    try:
        cfg.bootstrap_config()
    except PSWError as exc:
        errors.extend(exc.details or [str(exc)])
    return errors


# ---------------------------------------------------------------------------
# Loading
# ---------------------------------------------------------------------------


def _read_json(path: str) -> Any:
    if not os.path.exists(path):
        raise ConfigValidationError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigValidationError(f"{path}: invalid JSON ({exc})") from exc


def _raise(path: str, errors: List[str]) -> None:
    msg = f"{path} validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
    raise ConfigValidationError(msg, details=errors)


def _coerce(cls: type, raw: Mapping[str, Any]) -> Dict[str, Any]:
    """Keep known fields only; lists become tuples for frozen dataclasses."""
    known = {f.name for f in fields(cls)}
    return {k: tuple(v) if isinstance(v, list) else v for k, v in raw.items() if k in known}


def load_simulate_config(path: str) -> SimulateConfig:
    raw = _read_json(path)
    errors = schema_errors(raw, SIMULATE_SCHEMA)
    if errors:
        _raise(path, errors)
    known = {f.name for f in fields(SimulateConfig)}
    cfg = SimulateConfig(**{k: v for k, v in raw.items() if k in known})
    errors = _validate_simulate(cfg)
    if errors:
        _raise(path, errors)
    logger.info("Loaded simulate config %s (M=%d, N=%d, B=%d)", path, cfg.M, cfg.N, cfg.B)
    return cfg


def load_analyze_config(path: str) -> AnalyzeConfig:
    """Structural validation only; semantic checks run after CLI overrides are merged."""
    raw = _read_json(path)
    errors = schema_errors(raw, ANALYZE_SCHEMA)
    if errors:
        _raise(path, errors)
    return AnalyzeConfig(**_coerce(AnalyzeConfig, raw))


def merge_overrides(cfg: AnalyzeConfig, overrides: Mapping[str, Any]) -> AnalyzeConfig:
    """Apply explicitly given command-line values (None = not given) on top of cfg."""
    given = {k: v for k, v in overrides.items() if v is not None}
    if not given:
        return cfg
    known = {f.name for f in fields(AnalyzeConfig)}
    unknown = sorted(set(given) - known)
    if unknown:
        raise ConfigValidationError(f"unknown settings: {', '.join(unknown)}")
    given = {k: tuple(v) if isinstance(v, list) else v for k, v in given.items()}
    return replace(cfg, **given)


def analyze_config_to_dict(cfg: AnalyzeConfig) -> Dict[str, Any]:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def simulate_config_to_dict(cfg: SimulateConfig) -> Dict[str, Any]:
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}
