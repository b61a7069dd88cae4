"""CSV/JSON writers for result tables, balance reports and simulation summaries.

CSV output rounds floats to 6 significant digits for human reading; JSON keeps
full precision. Every writer goes through an atomic tempfile + os.replace.
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from typing import Any, Dict, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.6g"


# ---------------------------------------------------------------------------
# Atomic write
# ---------------------------------------------------------------------------


def atomic_write_text(path: str, text: str) -> None:
    """Write text to path atomically via tempfile + os.replace."""
    dir_name = os.path.dirname(os.path.abspath(path))
    os.makedirs(dir_name, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=dir_name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats into JSON-safe values."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def write_json(path: str, payload: Any) -> None:
    text = json.dumps(to_jsonable(payload), ensure_ascii=False, indent=2, allow_nan=False)
    atomic_write_text(path, text + "\n")
    logger.info("Wrote %s", path)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def records_to_frame(records: Sequence[Mapping[str, Any]], columns: Sequence[str]) -> pd.DataFrame:
    """Build a DataFrame with exactly the given column order (missing keys -> empty)."""
    rows: List[Dict[str, Any]] = [{c: rec.get(c) for c in columns} for rec in records]
    return pd.DataFrame(rows, columns=list(columns))


def write_csv(
    path: str,
    records: Sequence[Mapping[str, Any]],
    columns: Sequence[str],
    float_format: Optional[str] = CSV_FLOAT_FORMAT,
) -> None:
    frame = records_to_frame(records, columns)
    text = frame.to_csv(index=False, float_format=float_format, na_rep="", lineterminator="\n")
    atomic_write_text(path, text)
    logger.info("Wrote %s (%d rows)", path, len(frame))
