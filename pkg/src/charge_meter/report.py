"""Deterministic CSV and JSON reports."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

SCHEMA_VERSION = "1"


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _encode(obj: Any) -> str:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, Mapping):
        items = (f"{json.dumps(str(k), ensure_ascii=False)}: {_encode(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def to_json(payload: Mapping[str, Any]) -> str:
    """JSON text with ``schema_version`` first and floats at 17 significant digits."""
    body = {"schema_version": SCHEMA_VERSION}
    body.update({k: v for k, v in payload.items() if k != "schema_version"})
    return _encode(body) + "\n"


def parse_json(text: str) -> dict:
    return json.loads(text)


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def to_csv(columns: Sequence[str], rows: Sequence[Mapping[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        extra = set(row) - set(columns)
        if extra:
            raise KeyError(f"row has columns outside the header: {sorted(extra)}")
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def parse_csv(text: str) -> tuple[list[str], list[dict[str, Any]]]:
    """Inverse of :func:`to_csv`; numeric cells come back as int or float."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = []
    for rec in reader:
        row = {}
        for k, cell in zip(header, rec):
            row[k] = _parse_cell(cell)
        rows.append(row)
    return header, rows


def _parse_cell(cell: str):
    if cell == "":
        return None
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return float(cell)
    except ValueError:
        return cell


def emit_report(payload, fmt: str, path: str | os.PathLike | None = None, columns: Sequence[str] | None = None,
                stream=None) -> str:
    """Render a report and write it to ``path`` (or ``stream``).

    ``fmt="json"`` expects a mapping; ``fmt="csv"`` expects a list of row
    mappings together with ``columns``.
    """
    if fmt == "json":
        text = to_json(payload)
    elif fmt == "csv":
        if columns is None:
            raise ValueError("CSV reports need an explicit column order")
        text = to_csv(columns, payload)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    elif stream is not None:
        stream.write(text)
    return text
