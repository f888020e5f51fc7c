"""Result tables and their csv / markdown / json renderings.

Rendering is a pure function of the table, so identical results give
byte-identical files. Wall-clock time is deliberately not part of a table.
"""
from __future__ import annotations

import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import IoFailure

FORMATS = ("csv", "md", "json")


def format_cell(value):
    """Six significant digits for reals, plain text for everything else."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        out = f"{v:.6g}"
        return "0" if out == "-0" else out
    return str(value)


def _plain(value):
    """JSON-safe version of a cell or metadata value."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return None if not math.isfinite(v) else v
    return value


@dataclass
class ResultTable:
    title: str
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *cells):
        if len(cells) != len(self.columns):
            raise ValueError(f"row has {len(cells)} cells, table has {len(self.columns)} columns")
        self.rows.append(list(cells))

    def add_matrix(self, label, matrix, *prefix):
        """One row per entry ``(prefix..., label, r, s, value)`` with 1-based indices."""
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        for r in range(m.shape[0]):
            for s in range(m.shape[1]):
                self.add(*prefix, label, r + 1, s + 1, m[r, s])

    def column(self, name):
        j = self.columns.index(name)
        return [row[j] for row in self.rows]

    def lookup(self, **match):
        """Rows whose named columns equal the given values."""
        idx = {k: self.columns.index(k) for k in match}
        return [row for row in self.rows if all(row[idx[k]] == v for k, v in match.items())]


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    lines = [",".join(_csv_escape(c) for c in table.columns)]
    lines += [",".join(_csv_escape(format_cell(c)) for c in row) for row in table.rows]
    buf.write("\n".join(lines) + "\n")
    return buf.getvalue()


def _csv_escape(text):
    text = str(text)
    if any(ch in text for ch in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def to_markdown(table: ResultTable) -> str:
    out = [f"## {table.title}", ""]
    out.append("| " + " | ".join(str(c) for c in table.columns) + " |")
    out.append("|" + "|".join("---" for _ in table.columns) + "|")
    for row in table.rows:
        out.append("| " + " | ".join(format_cell(c) for c in row) + " |")
    out.append("")
    for key in sorted(table.metadata):
        out.append(f"- {key}: {json.dumps(_plain(table.metadata[key]), sort_keys=True)}")
    return "\n".join(out) + "\n"


def to_json(table: ResultTable) -> str:
    doc = {
        "title": table.title,
        "columns": list(table.columns),
        "rows": _plain(table.rows),
        "metadata": _plain(table.metadata),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render(table, fmt):
    if fmt == "csv":
        return to_csv(table)
    if fmt == "md":
        return to_markdown(table)
    if fmt == "json":
        return to_json(table)
    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def emit(table: ResultTable, fmt="csv", path=None):
    """Write ``table`` to ``path`` (stdout when None).

    CSV output carries no metadata of its own, so a ``<path>.meta.json``
    sidecar is written next to it.

    Raises:
        IoFailure: the destination could not be written.
    """
    text = render(table, fmt)
    if path is None:
        sys.stdout.write(text)
        return None
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        if fmt == "csv":
            meta = json.dumps({"title": table.title, "metadata": _plain(table.metadata)}, indent=2, sort_keys=True)
            with open(str(path) + ".meta.json", "w", encoding="utf-8", newline="\n") as fh:
                fh.write(meta + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def load_json(text):
    """Parse the json rendering back into a ``ResultTable``."""
    doc = json.loads(text)
    rows = [[np.nan if v is None else v for v in row] for row in doc["rows"]]
    return ResultTable(doc["title"], doc["columns"], rows, doc["metadata"])
