# src/io/exporter.py
"""Atomic writers for CSV tables, JSON reports and static HTML figures."""

import json
import logging
import math
import os
import tempfile
from enum import Enum
from pathlib import Path
from typing import Any, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def to_jsonable(value: Any) -> Any:
    """numpy scalars/arrays to Python, NaN/inf to None, enums to their value."""
    if isinstance(value, dict):
        return {str(to_jsonable(k)): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class ReportExporter:
    """Every write goes to a temp file in the target directory, then os.replace."""

    @staticmethod
    def write_text(path: PathLike, text: str) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        logger.info("Wrote %s", path)
        return path

    @staticmethod
    def write_csv(path: PathLike, frame: pd.DataFrame) -> Path:
        """NaN cells are written blank."""
        return ReportExporter.write_text(path, frame.to_csv(index=False, na_rep="", lineterminator="\n"))

    @staticmethod
    def write_json(path: PathLike, payload: Any) -> Path:
        text = json.dumps(to_jsonable(payload), indent=2, allow_nan=False) + "\n"
        return ReportExporter.write_text(path, text)

    @staticmethod
    def write_html(path: PathLike, figure) -> Path:
        """Static plotly figure; plotly.js is loaded from the CDN."""
        return ReportExporter.write_text(path, figure.to_html(include_plotlyjs="cdn", full_html=True))
