"""Time series container and its CSV representation."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidSpecError, TableFormatError

__all__ = ["TimeSeries", "as_values", "read_series_csv", "write_series_csv", "percentile_band"]


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Observations ``X_0, ..., X_n`` with optional ISO-8601 date labels."""

    values: np.ndarray
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size == 0:
            raise InvalidSpecError("time series must be non-empty")
        if not np.all(np.isfinite(values)):
            raise InvalidSpecError("time series contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(s) for s in self.labels)
            if len(labels) != values.size:
                raise InvalidSpecError("labels and values differ in length")
            if any(a >= b for a, b in zip(labels, labels[1:])):
                raise InvalidSpecError("labels must be strictly increasing")
            object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.values.size

    def __neg__(self) -> TimeSeries:
        return TimeSeries(-self.values, self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.labels == other.labels and np.array_equal(self.values, other.values)


def as_values(series) -> np.ndarray:
    if isinstance(series, TimeSeries):
        return series.values
    return TimeSeries(series).values


def read_series_csv(path: str | Path) -> TimeSeries:
    """Read ``date,value`` rows (header optional) or a single column of values."""
    text = Path(path).read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise TableFormatError("empty series file")
    start = 0
    first = [c.strip().lower() for c in rows[0]]
    if first in (["date", "value"], ["value"]):
        start = 1
    values: list[float] = []
    labels: list[str] = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        try:
            if len(row) == 1:
                values.append(float(row[0]))
            elif len(row) == 2:
                labels.append(row[0].strip())
                values.append(float(row[1]))
            else:
                raise ValueError("expected one or two columns")
        except ValueError as exc:
            raise TableFormatError(str(exc), lineno) from None
    if labels and len(labels) != len(values):
        raise TableFormatError("mixed labelled and unlabelled rows")
    return TimeSeries(np.array(values), tuple(labels) if labels else None)


def write_series_csv(series: TimeSeries, path: str | Path | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if series.labels is not None:
        writer.writerow(["date", "value"])
        for lab, v in zip(series.labels, series.values):
            writer.writerow([lab, repr(float(v))])
    else:
        writer.writerow(["value"])
        for v in series.values:
            writer.writerow([repr(float(v))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def percentile_band(x: np.ndarray, a_pct: float, b_pct: float) -> tuple[float, float]:
    """Linearly interpolated (type 7) sample percentiles."""
    lo, hi = np.quantile(x, [a_pct, b_pct])
    return float(lo), float(hi)
