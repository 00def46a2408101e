"""CSV and summary-line output shared by the estimates, tails and CLI layers."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from typing import Any, Iterable, TextIO


def format_value(x: Any) -> str:
    """Lossless text for doubles (17 significant digits); complex as ``re+imj``."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    if isinstance(x, float):
        return f"{x:.17g}"
    if isinstance(x, (int, str)):
        return str(x)
    if x is None:
        return ""
    return str(x)


def record_fields(record_type) -> list[str]:
    return [f.name for f in dataclasses.fields(record_type)]


def write_csv(records: Iterable, stream: TextIO, columns: list[str] | None = None) -> None:
    """One header row, then one row per dataclass record (fields in declaration order)."""
    records = list(records)
    if columns is None:
        if not records:
            raise ValueError("need records or explicit columns")
        columns = record_fields(type(records[0]))
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(columns)
    for rec in records:
        w.writerow([format_value(getattr(rec, c)) for c in columns])


def csv_text(records: Iterable, columns: list[str] | None = None) -> str:
    buf = io.StringIO()
    write_csv(records, buf, columns)
    return buf.getvalue()


def check_line(name: str, passed: bool, margin: float) -> str:
    m = "nan" if margin is None or (isinstance(margin, float) and math.isnan(margin)) \
        else f"{margin:.6g}"
    return f"CHECK {name} {'PASS' if passed else 'FAIL'} margin={m}"
