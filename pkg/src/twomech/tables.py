"""Result tables and their CSV / JSON serialization.

Complex columns are written as ``<name>_re`` / ``<name>_im`` pairs. Floats
use Python's shortest round-trip repr, so identical tables give identical
bytes. CSV files carry the metadata as leading ``# key: json`` lines.
"""

from __future__ import annotations

import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


@dataclass
class ResultTable:
    columns: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.columns = {k: np.asarray(v) for k, v in self.columns.items()}
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"columns differ in length: {sorted(lengths)}")

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def complex_columns(self) -> list:
        return [k for k, v in self.columns.items() if np.iscomplexobj(v)]

    def integer_columns(self) -> list:
        return [k for k, v in self.columns.items() if np.issubdtype(v.dtype, np.integer)]

    def flat_columns(self):
        """(header, list of real arrays) with complex columns split."""
        header, series = [], []
        for name, values in self.columns.items():
            if np.iscomplexobj(values):
                header += [f"{name}_re", f"{name}_im"]
                series += [values.real.astype(float), values.imag.astype(float)]
            elif np.issubdtype(values.dtype, np.integer):
                header.append(name)
                series.append(values.astype(np.int64))
            else:
                header.append(name)
                series.append(values.astype(float))
        return header, series

    def equals(self, other: "ResultTable") -> bool:
        if list(self.columns) != list(other.columns):
            return False
        if _jsonable(self.metadata) != _jsonable(other.metadata):
            return False
        return all(
            np.array_equal(self.columns[k], other.columns[k], equal_nan=True)
            for k in self.columns
        )


def _fmt(x) -> str:
    if isinstance(x, np.integer):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def to_csv_text(table: ResultTable) -> str:
    out = io.StringIO()
    for key in sorted(table.metadata):
        out.write(f"# {key}: {json.dumps(_jsonable(table.metadata[key]), sort_keys=True)}\n")
    header, series = table.flat_columns()
    out.write(",".join(header) + "\n")
    for row in range(table.n_rows):
        out.write(",".join(_fmt(s[row]) for s in series) + "\n")
    return out.getvalue()


def to_json_text(table: ResultTable) -> str:
    header, series = table.flat_columns()
    rows = [[_jsonable(s[row]) for s in series] for row in range(table.n_rows)]
    doc = {
        "metadata": _jsonable(table.metadata),
        "columns": header,
        "complex_columns": table.complex_columns(),
        "integer_columns": table.integer_columns(),
        "rows": rows,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def emit(table: ResultTable, fmt: str = "csv", path: Optional[str] = None) -> None:
    """Write ``table`` to ``path`` (stdout when None). OSError propagates."""
    if fmt == "csv":
        text = to_csv_text(table)
    elif fmt == "json":
        text = to_json_text(table)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def from_json_text(text: str) -> ResultTable:
    doc = json.loads(text)
    header = doc["columns"]
    data = np.array(
        [[np.nan if v is None else v for v in row] for row in doc["rows"]], dtype=float
    ).reshape(len(doc["rows"]), len(header))
    flat = {name: data[:, i] for i, name in enumerate(header)}
    columns = {}
    complex_names = set(doc.get("complex_columns", []))
    integer_names = set(doc.get("integer_columns", []))
    for name in header:
        base = name[:-3]
        if name.endswith("_re") and base in complex_names:
            columns[base] = flat[name] + 1j * flat[base + "_im"]
        elif name.endswith("_im") and base in complex_names:
            continue
        elif name in integer_names:
            columns[name] = flat[name].astype(np.int64)
        else:
            columns[name] = flat[name]
    return ResultTable(columns, doc["metadata"])


def load_json(path: str) -> ResultTable:
    with open(path, encoding="utf-8") as fh:
        return from_json_text(fh.read())
