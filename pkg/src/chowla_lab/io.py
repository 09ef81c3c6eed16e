"""CSV / JSON artifacts.  Floats are written with repr so reruns compare bit for bit."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (complex, np.complexfloating)):
        return {"re": _jsonable(v.real), "im": _jsonable(v.imag)}
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass
class Table:
    name: str
    header: list[str]
    rows: list = field(default_factory=list)

    def text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for r in self.rows:
            w.writerow([_cell(v) for v in r])
        return buf.getvalue()

    def write(self, root: Path) -> Path:
        path = Path(root) / f"{self.name}.csv"
        path.write_text(self.text())
        return path


@dataclass
class Document:
    name: str
    data: dict

    def text(self) -> str:
        return json.dumps(_jsonable(self.data), indent=2, sort_keys=True) + "\n"

    def write(self, root: Path) -> Path:
        path = Path(root) / f"{self.name}.json"
        path.write_text(self.text())
        return path


def complex_rows(scales, values):
    for x, v in zip(scales, values):
        v = complex(v)
        yield float(x), v.real, v.imag, abs(v)


def averaging_table(name: str, series) -> Table:
    """Columns scale, scheme, re, im, abs, count, den."""
    rows = [(x, series.scheme.value, v.real, v.imag, abs(v), c, d) for x, v, c, d in series.rows()]
    return Table(name, ["scale", "scheme", "re", "im", "abs", "count", "den"], rows)


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
