"""Row serialization shared by the CLI and the verification suite.

Floats are written with ``repr`` (shortest round-trip form) so identical
inputs always give byte-identical files.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math


def fmt(value) -> str:
    if value is None:
        return ""
    if hasattr(value, "item"):  # numpy scalar
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _plain(value):
    if hasattr(value, "item"):
        value = value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(row.get(col)) for col in header])
    return buf.getvalue()


def to_json(rows: list[dict]) -> str:
    clean = [{k: _plain(v) for k, v in row.items() if v is not None} for row in rows]
    return json.dumps(clean, indent=1) + "\n"


def render(rows: list[dict], fmt_name: str) -> str:
    return to_json(rows) if fmt_name == "json" else to_csv(rows)


def band_rows(rows) -> list[dict]:
    return [
        {"k": r.k, "alpha": r.alpha, "trace": r.trace, "class": r.cls.kind.value} for r in rows
    ]
