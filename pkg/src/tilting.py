"""Tilting functions h(e) for WATE and g(e) for WATT/WATC, and per-unit weights.

All functions are vectorised: `e` may be a float or a numpy array. Tilting values
are never normalised; every estimator downstream is a ratio, so constant factors
cancel.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.stats import norm

from src.errors import UserInputError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

ESTIMAND_CLASSES = ("WATE", "WATT", "WATC")
SCHEMES = (
    "IPW",
    "IPW_treated",
    "IPW_controls",
    "TRIM",
    "SMOOTH_TRIM",
    "TRUNC",
    "MW",
    "TW",
    "OW",
    "EW",
    "BW",
)
WATE_ONLY_SCHEMES = frozenset({"IPW_treated", "IPW_controls", "TW"})
DEFAULT_SMOOTH_EPSILON = 0.01

# serialized lowercase tokens
TOKEN_TO_SCHEME = {
    "ipw": "IPW",
    "treated": "IPW_treated",
    "controls": "IPW_controls",
    "trim": "TRIM",
    "smoothtrim": "SMOOTH_TRIM",
    "trunc": "TRUNC",
    "mw": "MW",
    "tw": "TW",
    "ow": "OW",
    "ew": "EW",
    "bw": "BW",
}
SCHEME_TO_TOKEN = {v: k for k, v in TOKEN_TO_SCHEME.items()}


class TiltingParameterError(UserInputError):
    pass


# ---------------------------------------------------------------------------
# WeightScheme
# ---------------------------------------------------------------------------


def _fmt(value: Optional[float]) -> str:
    return f"{value:g}" if value is not None else "?"


@dataclass(frozen=True)
class WeightScheme:
    estimand_class: str  # WATE|WATT|WATC
    scheme: str  # one of SCHEMES
    alpha: Optional[float] = None
    epsilon: Optional[float] = None
    K: Optional[float] = None
    nu1: Optional[float] = None
    nu2: Optional[float] = None
    strict: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "estimand_class", self.estimand_class.upper())
        if self.scheme == "SMOOTH_TRIM" and self.epsilon is None:
            object.__setattr__(self, "epsilon", DEFAULT_SMOOTH_EPSILON)
        errors = scheme_violations(self)
        if errors:
            raise TiltingParameterError(
                f"invalid weight scheme {self.token}: " + "; ".join(errors), details=errors
            )

    @property
    def token(self) -> str:
        base = SCHEME_TO_TOKEN.get(self.scheme, self.scheme.lower())
        params = {
            "TRIM": [self.alpha],
            "TRUNC": [self.alpha],
            "SMOOTH_TRIM": [self.alpha, self.epsilon],
            "TW": [self.K],
            "BW": [self.nu1] if self.nu1 == self.nu2 else [self.nu1, self.nu2],
        }.get(self.scheme)
        if not params:
            return base
        return base + ":" + ",".join(_fmt(v) for v in params)

    @property
    def label(self) -> str:
        """Row label of the result listing (overall, overlap, trimming (alpha=0.05), ...)."""
        if self.scheme == "BW":
            if self.nu1 == self.nu2:
                return f"beta (v={_fmt(self.nu1)})"
            return f"beta (v1={_fmt(self.nu1)}, v2={_fmt(self.nu2)})"
        if self.scheme == "TRIM":
            return f"trimming (alpha={_fmt(self.alpha)})"
        if self.scheme == "SMOOTH_TRIM":
            return f"smooth trimming (alpha={_fmt(self.alpha)}, eps={_fmt(self.epsilon)})"
        if self.scheme == "TRUNC":
            return f"truncation (alpha={_fmt(self.alpha)})"
        if self.scheme == "TW":
            return f"trapezoidal (K={_fmt(self.K)})"
        if self.estimand_class != "WATE" and self.scheme != "IPW":
            return self.estimand  # OWATT, MWATC, ...
        return {
            "IPW": "overall",
            "IPW_treated": "treated",
            "IPW_controls": "control",
            "OW": "overlap",
            "MW": "matching",
            "EW": "entropy",
        }[self.scheme]

    @property
    def estimand(self) -> str:
        """Conventional estimand name (ATE, ATO, OWATT, ATC trimming, ...)."""
        anchor = {"WATE": "ATE", "WATT": "ATT", "WATC": "ATC"}[self.estimand_class]
        suffix = {"WATE": "", "WATT": "WATT", "WATC": "WATC"}[self.estimand_class]
        if self.scheme == "IPW":
            return anchor
        if self.scheme == "IPW_treated":
            return "ATT"
        if self.scheme == "IPW_controls":
            return "ATC"
        if self.scheme == "TRIM":
            return f"{anchor} trimming"
        if self.scheme == "SMOOTH_TRIM":
            return f"smooth {anchor} trimming"
        if self.scheme == "TRUNC":
            return f"{anchor} truncation"
        if self.estimand_class == "WATE":
            return {"OW": "ATO", "MW": "ATM", "EW": "ATEN", "BW": "ATB", "TW": "ATTW"}[
                self.scheme
            ]
        return self.scheme[0] + suffix


def scheme_violations(s: WeightScheme) -> List[str]:
    errors: List[str] = []
    if s.estimand_class not in ESTIMAND_CLASSES:
        errors.append(f"estimand class must be one of {ESTIMAND_CLASSES}")
    if s.scheme not in SCHEMES:
        errors.append(f"unknown scheme '{s.scheme}'")
        return errors
    if s.scheme in WATE_ONLY_SCHEMES and s.estimand_class != "WATE":
        errors.append(f"scheme {SCHEME_TO_TOKEN[s.scheme]} is only valid for WATE")

    if s.scheme in ("TRIM", "SMOOTH_TRIM", "TRUNC"):
        if s.alpha is None:
            errors.append("alpha is required")
        elif not 0.0 < s.alpha < 0.5:
            errors.append(f"alpha must be in (0, 0.5) (got {s.alpha:g})")
    if s.scheme == "SMOOTH_TRIM" and (s.epsilon is None or not s.epsilon > 0.0):
        errors.append("epsilon must be > 0")
    if s.scheme == "TW":
        if s.K is None:
            errors.append("K is required")
        elif not s.K > 1.0:
            errors.append(f"K must be > 1 (got {s.K:g})")
    if s.scheme == "BW":
        if s.nu1 is None or s.nu2 is None:
            errors.append("nu1 and nu2 are required")
        elif s.strict and (s.nu1 < 2.0 or s.nu2 < 2.0):
            errors.append(f"nu1 and nu2 must be >= 2 (got {s.nu1:g}, {s.nu2:g})")
    return errors


def beta_scheme(estimand_class: str, nu: float, nu2: Optional[float] = None) -> WeightScheme:
    """BW with the single-nu shorthand (nu1 = nu2 = nu) or the general form."""
    return WeightScheme(estimand_class, "BW", nu1=nu, nu2=nu if nu2 is None else nu2)


def parse_scheme(token: str, estimand_class: str = "WATE") -> WeightScheme:
    """Parse `ow`, `trim:0.05`, `smoothtrim:0.05,0.01`, `tw:3`, `bw:2`, `bw:2,4`."""
    name, _, raw_params = token.strip().lower().partition(":")
    if name not in TOKEN_TO_SCHEME:
        raise TiltingParameterError(
            f"unknown scheme token '{token}' (known: {', '.join(TOKEN_TO_SCHEME)})"
        )
    try:
        params = [float(v) for v in raw_params.split(",") if v.strip()] if raw_params else []
    except ValueError as exc:
        raise TiltingParameterError(f"non-numeric parameter in scheme token '{token}'") from exc

    scheme = TOKEN_TO_SCHEME[name]
    expected = {"TRIM": (1, 1), "TRUNC": (1, 1), "SMOOTH_TRIM": (1, 2), "TW": (1, 1), "BW": (1, 2)}
    lo, hi = expected.get(scheme, (0, 0))
    if not lo <= len(params) <= hi:
        raise TiltingParameterError(
            f"scheme token '{token}' takes {lo}-{hi} parameter(s), got {len(params)}"
        )

    if scheme in ("TRIM", "TRUNC"):
        return WeightScheme(estimand_class, scheme, alpha=params[0])
    if scheme == "SMOOTH_TRIM":
        eps = params[1] if len(params) > 1 else None
        return WeightScheme(estimand_class, scheme, alpha=params[0], epsilon=eps)
    if scheme == "TW":
        return WeightScheme(estimand_class, scheme, K=params[0])
    if scheme == "BW":
        return beta_scheme(estimand_class, params[0], params[1] if len(params) > 1 else None)
    return WeightScheme(estimand_class, scheme)


def parse_schemes(tokens: Sequence[str], estimand_class: str) -> List[WeightScheme]:
    return [parse_scheme(t, estimand_class) for t in tokens if t.strip()]


def with_class(s: WeightScheme, estimand_class: str) -> WeightScheme:
    return replace(s, estimand_class=estimand_class)


# ---------------------------------------------------------------------------
# Tilting functions
# ---------------------------------------------------------------------------


def _check_ps(e: ArrayLike) -> np.ndarray:
    arr = np.asarray(e, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise TiltingParameterError("propensity score outside (0,1)")
    return arr


def _phi(t: np.ndarray, epsilon: float) -> np.ndarray:
    return norm.cdf(t, loc=0.0, scale=epsilon)


def _equipoise(s: WeightScheme, e: np.ndarray) -> Optional[np.ndarray]:
    """MW/OW/EW/BW share one formula across the three classes."""
    if s.scheme == "MW":
        return np.minimum(e, 1.0 - e)
    if s.scheme == "OW":
        return e * (1.0 - e)
    if s.scheme == "EW":
        return -e * np.log(e / (1.0 - e)) - np.log1p(-e)
    if s.scheme == "BW":
        return e ** (s.nu1 - 1.0) * (1.0 - e) ** (s.nu2 - 1.0)  # type: ignore[operator]
    return None


def _scalar_like(e: ArrayLike, values: np.ndarray) -> ArrayLike:
    return float(values) if np.ndim(e) == 0 else values


def _require_class(s: WeightScheme, estimand_class: str) -> None:
    if s.estimand_class != estimand_class:
        raise TiltingParameterError(
            f"scheme {s.token} belongs to {s.estimand_class}, not {estimand_class}"
        )


def h_wate(s: WeightScheme, e: ArrayLike) -> ArrayLike:
    _require_class(s, "WATE")
    x = _check_ps(e)
    shared = _equipoise(s, x)
    if shared is not None:
        return _scalar_like(e, shared)

    if s.scheme == "IPW":
        h = np.ones_like(x)
    elif s.scheme == "IPW_treated":
        h = x.copy()
    elif s.scheme == "IPW_controls":
        h = 1.0 - x
    elif s.scheme == "TRIM":
        h = ((x > s.alpha) & (x < 1.0 - s.alpha)).astype(float)  # type: ignore[operator]
    elif s.scheme == "SMOOTH_TRIM":
        h = _phi(x - s.alpha, s.epsilon) * _phi(1.0 - s.alpha - x, s.epsilon)  # type: ignore[operator, arg-type]
    elif s.scheme == "TRUNC":
        a = s.alpha
        h = np.where(
            x <= a,
            x / a,  # type: ignore[operator]
            np.where(x >= 1.0 - a, (1.0 - x) / (1.0 - a), 1.0),  # type: ignore[operator]
        )
    elif s.scheme == "TW":
        h = np.minimum(1.0, s.K * np.minimum(x, 1.0 - x))  # type: ignore[operator]
    else:
        raise TiltingParameterError(f"scheme {s.scheme} has no WATE tilting function")
    return _scalar_like(e, h)


def g_watt(s: WeightScheme, e: ArrayLike) -> ArrayLike:
    _require_class(s, "WATT")
    x = _check_ps(e)
    shared = _equipoise(s, x)
    if shared is not None:
        return _scalar_like(e, shared)

    a = s.alpha
    if s.scheme == "IPW":
        g = np.ones_like(x)
    elif s.scheme == "TRIM":
        g = (x < 1.0 - a).astype(float)  # type: ignore[operator]
    elif s.scheme == "SMOOTH_TRIM":
        g = _phi(1.0 - a - x, s.epsilon)  # type: ignore[operator, arg-type]
    elif s.scheme == "TRUNC":
        g = np.where(x < 1.0 - a, 1.0, (1.0 - x) * a / ((1.0 - a) * x))  # type: ignore[operator]
    else:
        raise TiltingParameterError(f"scheme {s.scheme} has no WATT tilting function")
    return _scalar_like(e, g)


def g_watc(s: WeightScheme, e: ArrayLike) -> ArrayLike:
    _require_class(s, "WATC")
    x = _check_ps(e)
    shared = _equipoise(s, x)
    if shared is not None:
        return _scalar_like(e, shared)

    a = s.alpha
    if s.scheme == "IPW":
        g = np.ones_like(x)
    elif s.scheme == "TRIM":
        g = (x > a).astype(float)  # type: ignore[operator]
    elif s.scheme == "SMOOTH_TRIM":
        g = _phi(x - a, s.epsilon)  # type: ignore[operator, arg-type]
    elif s.scheme == "TRUNC":
        g = np.where(x > a, 1.0, x * (1.0 - a) / (a * (1.0 - x)))  # type: ignore[operator]
    else:
        raise TiltingParameterError(f"scheme {s.scheme} has no WATC tilting function")
    return _scalar_like(e, g)


def tilt(s: WeightScheme, e: ArrayLike) -> ArrayLike:
    """Dispatch to h_wate / g_watt / g_watc by the scheme's estimand class."""
    fn = {"WATE": h_wate, "WATT": g_watt, "WATC": g_watc}[s.estimand_class]
    return fn(s, e)


def unit_weights(s: WeightScheme, e: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Per-unit PSW weights; the anchored arm of WATT (treated) / WATC (controls) gets 1."""
    e = np.asarray(e, dtype=float)
    a = np.asarray(a)
    if e.shape != a.shape:
        raise TiltingParameterError(
            f"PS and treatment vectors differ in length ({e.shape[0]} vs {a.shape[0]})"
        )
    t = np.asarray(tilt(s, e), dtype=float)
    treated = a == 1
    if s.estimand_class == "WATE":
        return np.where(treated, t / e, t / (1.0 - e))
    if s.estimand_class == "WATT":
        return np.where(treated, 1.0, t * e / (1.0 - e))
    return np.where(treated, t * (1.0 - e) / e, 1.0)


def is_symmetric(s: WeightScheme) -> bool:
    return s.scheme in ("MW", "OW", "EW") or (s.scheme == "BW" and s.nu1 == s.nu2)


def cap_weight(s: WeightScheme) -> float:
    """Analytic sup of the tilted (non-anchored) weights for truncation schemes."""
    if s.scheme != "TRUNC" or s.alpha is None:
        return math.inf
    if s.estimand_class == "WATE":
        return 1.0 / s.alpha
    return (1.0 - s.alpha) / s.alpha
