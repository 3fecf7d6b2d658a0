"""Reading observation series from CSV files."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from nlarch.errors import DataError, InsufficientDataError

__all__ = ["Series", "ingest_csv", "MISSING_MARKERS"]

MISSING_MARKERS = frozenset({"", ".", "NA", "NaN", "nan"})


@dataclass(frozen=True)
class Series:
    values: np.ndarray
    keys: list[str]
    dropped: int
    path: str

    def __len__(self) -> int:
        return self.values.shape[0]


def _sort_key(keys: list[str]):
    try:
        return [float(k) for k in keys]
    except ValueError:
        pass
    try:
        return [date.fromisoformat(k) for k in keys]
    except ValueError:
        return None


def ingest_csv(path: str | Path, min_rows: int = 6, column: int = 1) -> Series:
    """
    Read a ``date,value`` CSV with a header row.

    Rows whose value is ``"."`` or empty (the FRED missing-data marker) are
    dropped and counted. Rows are returned in key order when every key
    parses as a number or an ISO date, otherwise in file order.

    Parameters
    ----------
    min_rows : int
        Fewer usable rows raise :class:`InsufficientDataError`; callers pass
        ``p + q + 2``.
    column : int
        Zero-based index of the value column.

    Raises
    ------
    DataError
        Missing file, missing value column or unparseable value; the message
        names the line.
    """
    p = Path(path)
    if not p.is_file():
        raise DataError(f"input file not found: {p}")
    keys, vals, dropped = [], [], 0
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise InsufficientDataError("input file is empty")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) <= column:
                raise DataError("missing value column", line=line)
            raw = row[column].strip()
            if raw in MISSING_MARKERS:
                dropped += 1
                continue
            try:
                v = float(raw)
            except ValueError:
                raise DataError(f"cannot parse value {raw!r}", line=line) from None
            if not np.isfinite(v):
                raise DataError(f"non-finite value {raw!r}", line=line)
            keys.append(row[0].strip())
            vals.append(v)
    if len(vals) < min_rows:
        raise InsufficientDataError(
            f"{len(vals)} usable rows in {p}; at least {min_rows} are needed")
    order = _sort_key(keys)
    if order is not None:
        idx = sorted(range(len(keys)), key=order.__getitem__)
        keys = [keys[i] for i in idx]
        vals = [vals[i] for i in idx]
    return Series(np.asarray(vals, dtype=float), keys, dropped, str(p))
